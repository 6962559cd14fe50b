import numpy as np
import pytest

from rlseg import DataError
from rlseg.stream import MAGIC, check_stream, read_step, write_step


@pytest.fixture
def sample(rng):
    feats = rng.standard_normal((17, 5)).astype(np.float32)
    labels = rng.integers(-1, 3, 17).astype(np.int32)
    coords = rng.standard_normal((17, 3)).astype(np.float32)
    return feats, labels, coords


class TestRoundTrip:
    def test_payloads_bit_identical(self, tmp_path, sample):
        feats, labels, coords = sample
        write_step(tmp_path, 2, feats, labels, coords)
        rfeats, rlabels, rcoords, sidecar = read_step(tmp_path, 2)
        assert rfeats.tobytes() == feats.tobytes()
        assert rcoords.tobytes() == coords.tobytes()
        np.testing.assert_array_equal(rlabels, labels.astype(np.int64))
        assert sidecar["n_rows"] == 17 and sidecar["d_encoder"] == 5
        assert sidecar["has_coords"] is True

    def test_without_coords(self, tmp_path, sample):
        feats, labels, _ = sample
        write_step(tmp_path, 1, feats, labels)
        rfeats, rlabels, rcoords, sidecar = read_step(tmp_path, 1)
        assert rcoords is None
        assert sidecar["has_coords"] is False
        assert rfeats.tobytes() == feats.tobytes()

    def test_eval_split_uses_step_zero(self, tmp_path, sample):
        feats, labels, _ = sample
        jpath, bpath = write_step(tmp_path, 0, feats, labels)
        assert jpath.endswith("eval.json") and bpath.endswith("eval.bin")
        read_step(tmp_path, 0)

    def test_rewrite_is_byte_identical(self, tmp_path, sample):
        feats, labels, coords = sample
        _, bpath = write_step(tmp_path, 1, feats, labels, coords)
        first = open(bpath, "rb").read()
        write_step(tmp_path, 1, feats, labels, coords)
        assert open(bpath, "rb").read() == first


class TestValidation:
    def test_magic_enforced(self, tmp_path, sample):
        feats, labels, _ = sample
        _, bpath = write_step(tmp_path, 1, feats, labels)
        raw = open(bpath, "rb").read()
        with open(bpath, "wb") as f:
            f.write(b"BADMAGIC" + raw[len(MAGIC):])
        with pytest.raises(DataError, match="magic"):
            read_step(tmp_path, 1)

    def test_truncated_payload_rejected(self, tmp_path, sample):
        feats, labels, _ = sample
        _, bpath = write_step(tmp_path, 1, feats, labels)
        raw = open(bpath, "rb").read()
        open(bpath, "wb").write(raw[:-4])
        with pytest.raises(DataError, match="truncated"):
            read_step(tmp_path, 1)

    def test_trailing_bytes_rejected(self, tmp_path, sample):
        feats, labels, _ = sample
        _, bpath = write_step(tmp_path, 1, feats, labels)
        with open(bpath, "ab") as f:
            f.write(b"\x00")
        with pytest.raises(DataError, match="trailing"):
            read_step(tmp_path, 1)

    def test_missing_file_rejected(self, tmp_path):
        with pytest.raises(DataError, match="missing"):
            read_step(tmp_path, 3)

    def test_label_shape_mismatch_rejected(self, tmp_path, sample):
        feats, labels, _ = sample
        with pytest.raises(DataError):
            write_step(tmp_path, 1, feats, labels[:-1])


class TestCheckStream:
    def test_clean_stream_passes(self, tmp_path, sample):
        feats, labels, coords = sample
        write_step(tmp_path, 1, feats, labels, coords)
        write_step(tmp_path, 2, feats, labels, coords)
        write_step(tmp_path, 0, feats, labels, coords)
        report = check_stream(tmp_path)
        assert report["ok"], report["problems"]
        assert report["steps"] == [1, 2]

    def test_empty_directory_fails(self, tmp_path):
        report = check_stream(tmp_path)
        assert not report["ok"]

    def test_undeclared_label_flagged(self, tmp_path, sample):
        feats, labels, _ = sample
        write_step(tmp_path, 1, feats, labels, class_ids_present=[0])
        report = check_stream(tmp_path)
        assert not report["ok"]
        assert any("missing from sidecar" in p for p in report["problems"])

    def test_nonfinite_features_flagged(self, tmp_path, sample):
        feats, labels, _ = sample
        feats = feats.copy()
        feats[0, 0] = np.nan
        write_step(tmp_path, 1, feats, labels)
        report = check_stream(tmp_path)
        assert not report["ok"]
        assert any("non-finite" in p for p in report["problems"])

    def test_corrupt_magic_reported_not_raised(self, tmp_path, sample):
        feats, labels, _ = sample
        _, bpath = write_step(tmp_path, 1, feats, labels)
        raw = open(bpath, "rb").read()
        open(bpath, "wb").write(b"XXXXXXXX" + raw[8:])
        report = check_stream(tmp_path)
        assert not report["ok"]
