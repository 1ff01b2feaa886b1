"""Benchmark runners: reports, gates and determinism plumbing."""

import os

import pytest

from ssmark import attacks, bench, raster
from ssmark.errors import EmptyCorpus
from tests.conftest import color_image, gray_image


@pytest.fixture(scope="module")
def small_corpus(tmp_path_factory):
    root = tmp_path_factory.mktemp("corpus")
    pairs = [("a.pgm", gray_image(71, 192, 192)),
             ("b.ppm", color_image(72, 192, 192))]
    for name, img in pairs:
        raster.save_image(img, os.path.join(root, name))
    return bench.load_corpus(str(root))


def test_load_corpus_sorted_and_validated(tmp_path):
    with pytest.raises(EmptyCorpus):
        bench.load_corpus(str(tmp_path))
    raster.save_image(gray_image(1, 64, 64), tmp_path / "z.pgm")
    raster.save_image(gray_image(2, 64, 64), tmp_path / "a.pgm")
    (tmp_path / "notes.txt").write_text("ignored")
    names = [n for n, _ in bench.load_corpus(str(tmp_path))]
    assert names == ["a.pgm", "z.pgm"]


def test_default_message_is_stable():
    assert bench.default_message(0, 50) == bench.default_message(0, 50)
    assert 0 <= bench.default_message(3, 700) <= 16383


def test_default_grid_composition():
    grid = bench.default_attack_grid()
    kinds = {s.kind for s in grid}
    assert {"jpeg", "scale", "crop", "rotate_crop", "rowcol"} <= kinds
    assert len(grid) == len(set(map(str, grid)))


def test_psnr_report_format(small_corpus):
    report = bench.run_psnr_table(small_corpus)
    assert len(report.rows) == 2
    tsv = report.to_tsv()
    assert tsv.splitlines()[0] == "image\tpsnr_db\tpass"
    assert tsv == bench.run_psnr_table(small_corpus).to_tsv()


def test_fp_report_counts(small_corpus):
    report = bench.run_fp_experiment(small_corpus, keys=(50, 100))
    assert report.trials == 2 * 2 * 15
    assert report.controls == 4
    assert report.control_positives == 4
    assert report.fp_rate <= 0.05
    assert "fp_count" in report.to_tsv()


def test_robustness_small_grid(small_corpus):
    grid = [attacks.make_spec("jpeg", 70), attacks.make_spec("scale", 2, 2)]
    report = bench.run_robustness_matrix(small_corpus, keys=[50], grid=grid)
    assert set(report.kind_averages) == {"jpeg", "scale"}
    # identity controls run but are excluded from the averages
    kinds_in_cells = {c[0] for c in report.cells}
    assert "identity" in kinds_in_cells
    assert 0.0 <= report.overall <= 1.0


def test_robustness_deterministic_across_jobs(small_corpus):
    grid = [attacks.make_spec("jpeg", 50), attacks.make_spec("crop", 0.9)]
    one = bench.run_robustness_matrix(small_corpus, keys=[50], grid=grid,
                                      jobs=1)
    two = bench.run_robustness_matrix(small_corpus, keys=[50], grid=grid,
                                      jobs=3)
    assert one.to_tsv() == two.to_tsv()


def test_robustness_without_registration(small_corpus):
    grid = [attacks.make_spec("rotate_crop", 5)]
    report = bench.run_robustness_matrix(small_corpus, keys=[50], grid=grid,
                                         with_registration=False)
    assert not report.with_registration
    assert "with_registration=0" in report.to_tsv()
