import json
import struct

import numpy as np
import pytest

from frnplc.weights import (ARCH_ID, MAGIC, BadMagicError, NonFiniteWeightsError,
                            SchemaVersionError, TruncatedArchiveError, WeightArchive,
                            WeightArchiveError, default_metadata, load_weights,
                            save_weights)


def _write_archive_independently(path, version="1"):
    """Minimal writer coded straight from the documented layout."""
    data = np.arange(6, dtype="<f4").reshape(2, 3)
    header = {
        "schema_version": version,
        "metadata": {"schema_version": version, "arch": ARCH_ID},
        "tensors": [{"name": "t", "shape": [2, 3], "offset": 0}],
    }
    hbytes = json.dumps(header, sort_keys=True).encode()
    payload_base = (len(MAGIC) + 8 + len(hbytes) + 63) // 64 * 64
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<Q", len(hbytes)))
        fh.write(hbytes)
        fh.write(b"\0" * (payload_base - len(MAGIC) - 8 - len(hbytes)))
        fh.write(data.tobytes())
    return data


def test_reads_independently_written_file(tmp_path):
    path = tmp_path / "manual.frnw"
    data = _write_archive_independently(path)
    loaded = load_weights(path)
    assert np.array_equal(loaded.entries["t"], data)


def random_arch(seed=0):
    rng = np.random.default_rng(seed)
    entries = {
        "a.weight": rng.standard_normal((7, 3)).astype(np.float32),
        "a.bias": rng.standard_normal(7).astype(np.float32),
        "b.weight": rng.standard_normal((2, 5, 3, 3)).astype(np.float32),
    }
    return WeightArchive(entries=entries, metadata=default_metadata({"note": "test"}))


class TestRoundTrip:
    def test_bit_exact(self, tmp_path):
        arch = random_arch()
        path = tmp_path / "w.frnw"
        save_weights(arch, path)
        loaded = load_weights(path)
        assert set(loaded.entries) == set(arch.entries)
        for name, tensor in arch.entries.items():
            assert loaded.entries[name].dtype == np.float32
            assert np.array_equal(loaded.entries[name], tensor)
        assert loaded.metadata["arch"] == ARCH_ID
        assert loaded.metadata["note"] == "test"

    def test_payload_alignment(self, tmp_path):
        path = tmp_path / "w.frnw"
        save_weights(random_arch(), path)
        blob = path.read_bytes()
        (hlen,) = struct.unpack_from("<Q", blob, len(MAGIC))
        header = json.loads(blob[len(MAGIC) + 8 : len(MAGIC) + 8 + hlen])
        for rec in header["tensors"]:
            assert rec["offset"] % 64 == 0

    def test_deterministic_bytes(self, tmp_path):
        p1, p2 = tmp_path / "1.frnw", tmp_path / "2.frnw"
        save_weights(random_arch(3), p1)
        save_weights(random_arch(3), p2)
        assert p1.read_bytes() == p2.read_bytes()


class TestErrors:
    def test_bad_magic(self, tmp_path):
        path = tmp_path / "bad"
        path.write_bytes(b"NOTMAGIC" + b"\0" * 64)
        with pytest.raises(BadMagicError):
            load_weights(path)

    def test_truncated_preamble(self, tmp_path):
        path = tmp_path / "short"
        path.write_bytes(MAGIC[:4])
        with pytest.raises(TruncatedArchiveError):
            load_weights(path)

    def test_truncated_payload(self, tmp_path):
        path = tmp_path / "w.frnw"
        save_weights(random_arch(), path)
        blob = path.read_bytes()
        path.write_bytes(blob[: len(blob) - 40])
        with pytest.raises(TruncatedArchiveError):
            load_weights(path)

    def test_version_mismatch(self, tmp_path):
        path = tmp_path / "w.frnw"
        _write_archive_independently(path, version="99")
        with pytest.raises(SchemaVersionError):
            load_weights(path)

    def test_nan_rejected_on_save(self):
        bad = np.ones(4, dtype=np.float32)
        bad[2] = np.nan
        with pytest.raises(NonFiniteWeightsError, match="non-finite"):
            WeightArchive(entries={"t": bad}, metadata=default_metadata())

    def test_nan_rejected_on_load(self, tmp_path):
        path = tmp_path / "w.frnw"
        arch = random_arch()
        save_weights(arch, path)
        # Corrupt one payload float to NaN directly in the file.
        blob = bytearray(path.read_bytes())
        (hlen,) = struct.unpack_from("<Q", blob, len(MAGIC))
        header = json.loads(bytes(blob[len(MAGIC) + 8 : len(MAGIC) + 8 + hlen]))
        payload_base = (len(MAGIC) + 8 + hlen + 63) // 64 * 64
        offset = payload_base + header["tensors"][0]["offset"]
        blob[offset : offset + 4] = struct.pack("<f", float("nan"))
        path.write_bytes(bytes(blob))
        with pytest.raises(NonFiniteWeightsError):
            load_weights(path)

    def test_metadata_required(self):
        with pytest.raises(WeightArchiveError):
            WeightArchive(entries={}, metadata={"schema_version": "1"})
