"""Command-line frontend: exit codes, config precedence, outputs."""

import json

from ssmark import cli, raster
from tests.conftest import gray_image


def write_img(tmp_path, name="in.pgm", seed=7):
    path = tmp_path / name
    raster.save_image(gray_image(seed), path)
    return str(path)


def test_embed_then_detect_positive(tmp_path, capsys):
    src = write_img(tmp_path)
    out = str(tmp_path / "marked.pgm")
    assert cli.main(["embed", src, out, "--key", "50",
                     "--message", "1234"]) == 0
    capsys.readouterr()
    assert cli.main(["detect", out, "--key", "50"]) == 0
    text = capsys.readouterr().out
    assert "message: 1234" in text


def test_detect_negative_exit_code(tmp_path, capsys):
    src = write_img(tmp_path)
    assert cli.main(["detect", src, "--key", "50"]) == 1


def test_detect_tsv_format(tmp_path, capsys):
    src = write_img(tmp_path)
    out = str(tmp_path / "m.pgm")
    cli.main(["embed", src, out, "--key", "9", "--message", "0"])
    capsys.readouterr()
    cli.main(["detect", out, "--key", "9", "--format", "tsv"])
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == "watermarked\t1"
    assert "message\t0" in lines


def test_message_out_of_range_is_usage_error(tmp_path, capsys):
    src = write_img(tmp_path)
    out = str(tmp_path / "m.pgm")
    assert cli.main(["embed", src, out, "--key", "50",
                     "--message", "16384"]) == 2


def test_bad_attack_spec_is_usage_error(tmp_path, capsys):
    src = write_img(tmp_path)
    out = str(tmp_path / "a.pgm")
    assert cli.main(["attack", src, out, "rotate_crop:370"]) == 2
    assert cli.main(["attack", src, out, "nonsense"]) == 2


def test_attack_writes_output(tmp_path, capsys):
    src = write_img(tmp_path)
    out = str(tmp_path / "a.pgm")
    assert cli.main(["attack", src, out, "crop:0.25"]) == 0
    img = raster.load_image(out)
    assert (img.width, img.height) == (64, 64)


def test_missing_input_is_io_error(tmp_path, capsys):
    assert cli.main(["detect", str(tmp_path / "nope.pgm"),
                     "--key", "50"]) == 4


def test_registry_flag_without_store_errors(tmp_path, capsys):
    src = write_img(tmp_path)
    assert cli.main(["detect", src, "--key", "50", "--registry"]) == 2
    assert cli.main(["detect", src, "--key", "50", "--registry",
                     "--store", str(tmp_path / "absent")]) == 5


def test_ingest_query_cycle(tmp_path, capsys):
    src = write_img(tmp_path)
    store = str(tmp_path / "store")
    assert cli.main(["ingest", src, "--store", store]) == 0
    out = capsys.readouterr().out
    assert out.startswith("imageid\t1")
    assert cli.main(["query", src, "--store", store]) == 0
    out = capsys.readouterr().out
    assert "imageid\t1" in out and "confident\t1" in out


def test_embed_ingest_registry_detect(tmp_path, capsys):
    src = write_img(tmp_path)
    marked = str(tmp_path / "m.pgm")
    attacked = str(tmp_path / "r.pgm")
    store = str(tmp_path / "store")
    assert cli.main(["embed", src, marked, "--key", "50", "--message", "33",
                     "--ingest", "--store", store]) == 0
    assert cli.main(["attack", marked, attacked, "rotate_crop:5"]) == 0
    capsys.readouterr()
    assert cli.main(["detect", attacked, "--key", "50", "--registry",
                     "--store", store]) == 0
    text = capsys.readouterr().out
    assert "message: 33" in text
    assert "after registration" in text


def test_config_file_precedence(tmp_path, capsys):
    src = write_img(tmp_path)
    out = str(tmp_path / "m.pgm")
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"alpha": 0.1, "format": "tsv"}))
    assert cli.main(["embed", src, out, "--key", "3", "--message", "1",
                     "--config", str(cfg)]) == 0
    text = capsys.readouterr().out
    assert "alpha\t0.1" in text
    # explicit flag wins over the config value
    assert cli.main(["embed", src, out, "--key", "3", "--message", "1",
                     "--config", str(cfg), "--alpha", "0.3"]) == 0
    assert "alpha\t0.3" in capsys.readouterr().out


def test_bench_psnr_writes_report(tmp_path, capsys, corpus_dir):
    outdir = tmp_path / "reports"
    assert cli.main(["bench", "psnr", "--corpus", corpus_dir,
                     "--out", str(outdir)]) == 0
    report = (outdir / "psnr.tsv").read_text()
    assert report.startswith("# ssmark bench psnr")
    assert "meadow.pgm" in report
