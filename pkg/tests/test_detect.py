"""Correlation detector cascade and registration-assisted detection."""

import numpy as np
import pytest

from ssmark import attacks, detect, mark, raster, registry
from ssmark.detect import correlate_bit
from ssmark.errors import RegistryUnavailable
from ssmark.keystream import gaussian_sequence


def test_correlate_bit_threshold_formula():
    values = np.array([3.0, -6.0, 9.0])
    seq = np.array([1.0, 0.0, -1.0])
    d = correlate_bit(values, seq, 0, 0.3)
    assert d.correlation == pytest.approx((3.0 - 9.0) / 3.0)
    assert d.threshold == pytest.approx(0.3 * 18.0 / (3.0 * 3.0))
    assert d.present is False


def test_fresh_cast_sits_near_three_thresholds():
    seq = gaussian_sequence(424242, 16000)
    values = np.abs(gaussian_sequence(5, 16000).samples) * 40.0 + 5.0
    cast = mark.cast_sequence(values, seq, 0, 0.2)
    d = correlate_bit(cast, seq, 0, 0.2)
    assert d.present
    assert 2.0 <= d.correlation / d.threshold <= 4.0


def test_round_trip_gray(gray128):
    marked, receipt = mark.embed(gray128, 50, 12345)
    result = detect.detect(marked, 50)
    assert result.watermarked
    assert result.message == 12345
    assert result.flag == receipt.payload.flag


def test_round_trip_color(color128):
    marked, _ = mark.embed(color128, 999, 0)
    result = detect.detect(marked, 999)
    assert result.watermarked and result.message == 0


def test_wrong_key_short_circuits(gray128):
    marked, _ = mark.embed(gray128, 50, 500)
    result = detect.detect(marked, 51)
    assert not result.watermarked
    assert result.message is None
    # cascade stops after the existence bit
    assert result.per_bit[0] is not None
    assert all(d is None for d in result.per_bit[1:])


def test_unmarked_image_is_negative(gray128):
    assert not detect.detect(gray128, 50).watermarked


def test_detect_plain_handles_tiny_images():
    tiny = raster.RasterImage(np.full((8, 8, 1), 100, dtype=np.uint8))
    result = detect.detect_plain(tiny, 50)
    assert not result.watermarked


def test_registration_requires_store(gray128):
    with pytest.raises(RegistryUnavailable):
        detect.detect_with_registration(gray128, 50, None)


def test_registration_recovers_rotation(tmp_path, gray128):
    store = registry.Store(tmp_path / "store", create=True)
    marked, receipt = mark.embed(gray128, 50, 321)
    store.ingest(gray128, receipt.supplementary)
    attacked = attacks.apply_attack(marked, attacks.make_spec("rotate_crop", 5))
    plain = detect.detect_plain(attacked, 50)
    assert not (plain.watermarked and plain.message == 321)
    result = detect.detect_with_registration(attacked, 50, store)
    assert result.watermarked
    assert result.message == 321
    assert result.registered


def test_registration_skipped_when_plain_is_solid(tmp_path, gray128):
    store = registry.Store(tmp_path / "store", create=True)
    marked, receipt = mark.embed(gray128, 50, 77)
    store.ingest(gray128, receipt.supplementary)
    result = detect.detect_with_registration(marked, 50, store)
    assert result.watermarked and result.message == 77
    assert not result.registered


def test_registration_no_match_returns_plain(tmp_path, gray128, color128):
    store = registry.Store(tmp_path / "store", create=True)
    # library holds an unrelated image only
    _, receipt = mark.embed(color128, 5, 1)
    store.ingest(color128, receipt.supplementary)
    const = raster.RasterImage(np.full((128, 128, 1), 200, dtype=np.uint8))
    result = detect.detect_with_registration(const, 50, store)
    assert not result.watermarked
    assert not result.registered
