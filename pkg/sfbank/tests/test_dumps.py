"""Tests for sfbank/dumps.py"""
import struct

import numpy as np
import pytest

from sfbank.dumps import (
    KIND_FEATURES,
    KIND_FILTERS,
    export_feature_csv,
    read_features,
    read_sfbf,
    write_features,
    write_filterbank,
    write_sfbf,
)
from sfbank.errors import InvalidArgumentError
from sfbank.spatialbank import FeatureTensor, build_filterbank
from sfbank.stft import StftConfig


def test_header_layout(tmp_path):
    path = write_sfbf(tmp_path / "x.sfbf", KIND_FEATURES, np.zeros((4, 3, 2)))
    raw = path.read_bytes()
    assert raw[:4] == b"SFBF"
    assert raw[4] == 1
    assert raw[5] == KIND_FEATURES
    assert raw[6] == 3
    assert raw[7:16] == bytes(9)
    assert struct.unpack_from("<3I", raw, 16) == (4, 3, 2)
    assert len(raw) == 16 + 12 + 4 * 24


def test_payload_is_little_endian_f32_in_c_order(tmp_path):
    values = np.arange(6, dtype=np.float64).reshape(2, 3) / 4
    raw = write_sfbf(tmp_path / "v.sfbf", KIND_FEATURES, values).read_bytes()
    np.testing.assert_array_equal(np.frombuffer(raw[24:], dtype="<f4"), values.ravel())


def test_features_survive_a_dump(tmp_path):
    data = np.random.default_rng(0).standard_normal((6, 5, 4))
    path = write_features(tmp_path / "sub" / "feat.sfbf", FeatureTensor(data=data))
    back = read_features(path)
    assert back.data.shape == (6, 5, 4)
    np.testing.assert_allclose(back.data, data, rtol=1e-6)


def test_filterbank_dump_has_trailing_re_im_axis(tmp_path, uca5, supercardioid):
    cfg = StftConfig(win_len=32, hop=8, fft_size=32)
    bank = build_filterbank(uca5, supercardioid, 3, cfg)
    header, payload = read_sfbf(write_filterbank(tmp_path / "filters.sfbf", bank))
    assert header.kind == KIND_FILTERS
    assert header.dims == (3, 17, 5, 2)
    np.testing.assert_allclose(payload[..., 0], bank.weights.real, rtol=1e-6, atol=1e-7)
    np.testing.assert_allclose(payload[..., 1], bank.weights.imag, rtol=1e-6, atol=1e-7)


class TestReadErrors:
    def test_bad_magic(self, tmp_path):
        path = tmp_path / "bad.sfbf"
        path.write_bytes(b"RIFF" + bytes(12))
        with pytest.raises(InvalidArgumentError, match="not an SFBF file"):
            read_sfbf(path)

    def test_too_short(self, tmp_path):
        path = tmp_path / "short.sfbf"
        path.write_bytes(b"SFBF")
        with pytest.raises(InvalidArgumentError, match="too short"):
            read_sfbf(path)

    def test_wrong_version(self, tmp_path):
        path = write_sfbf(tmp_path / "v.sfbf", KIND_FEATURES, np.zeros((2, 1, 1)))
        raw = bytearray(path.read_bytes())
        raw[4] = 9
        path.write_bytes(bytes(raw))
        with pytest.raises(InvalidArgumentError, match="version 9"):
            read_sfbf(path)

    def test_truncated_payload(self, tmp_path):
        path = write_sfbf(tmp_path / "t.sfbf", KIND_FEATURES, np.zeros((2, 2, 2)))
        path.write_bytes(path.read_bytes()[:-4])
        with pytest.raises(InvalidArgumentError, match="need 32"):
            read_sfbf(path)

    def test_filters_are_not_features(self, tmp_path):
        path = write_sfbf(tmp_path / "f.sfbf", KIND_FILTERS, np.zeros((1, 2, 3, 2)))
        with pytest.raises(InvalidArgumentError, match="not features"):
            read_features(path)


def test_csv_export(tmp_path):
    data = np.arange(24, dtype=np.float64).reshape(4, 2, 3) / 7
    paths = export_feature_csv(FeatureTensor(data=data), tmp_path / "csv")
    assert [p.name for p in paths] == [f"channel_{i:02d}.csv" for i in range(4)]
    plane = np.loadtxt(paths[2], delimiter=",")
    assert plane.shape == (2, 3)
    np.testing.assert_allclose(plane, data[2], rtol=1e-8)
