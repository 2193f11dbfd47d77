"""Flat binary container for named float32 tensors.

Layout, fixed by contract with any exporter:

    bytes 0..7    magic ``FRNWTS01``
    bytes 8..15   little-endian u64: header length in bytes
    header        UTF-8 JSON: {"schema_version", "metadata", "tensors"}
                  where each tensor record is {"name", "shape", "offset"}
    payload       raw little-endian float32 tensor data; the payload base and
                  every per-tensor offset (relative to that base) are aligned
                  to 64 bytes

Metadata must carry at least ``schema_version`` and ``arch``; the gate
ordering of recurrent cells is recorded there so exporters cannot silently
disagree with the inference code.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field

import numpy as np

MAGIC = b"FRNWTS01"
SCHEMA_VERSION = "1"
ARCH_ID = "frn-v1"
_ALIGN = 64

#: Conventions every archive produced for this engine must declare.
CELL_CONVENTIONS = {
    "lstm_gate_order": "i,f,g,o",
    "gru_gate_order": "r,z,n",
    "gru_new_gate": "reset_before_matmul",
    "dtype": "float32-le",
}


class WeightArchiveError(Exception):
    """Base class for malformed or inconsistent weight archives."""


class BadMagicError(WeightArchiveError):
    pass


class SchemaVersionError(WeightArchiveError):
    pass


class NonFiniteWeightsError(WeightArchiveError):
    pass


class TruncatedArchiveError(WeightArchiveError):
    pass


class MissingTensorError(WeightArchiveError):
    pass


@dataclass
class WeightArchive:
    entries: dict[str, np.ndarray]
    metadata: dict[str, str] = field(default_factory=dict)

    def __post_init__(self) -> None:
        for key in ("schema_version", "arch"):
            if key not in self.metadata:
                raise WeightArchiveError(f"metadata missing required key {key!r}")
        clean = {}
        for name, tensor in self.entries.items():
            arr = np.ascontiguousarray(tensor, dtype=np.float32)
            if not np.all(np.isfinite(arr)):
                raise NonFiniteWeightsError(f"non-finite weights in tensor {name!r}")
            clean[name] = arr
        self.entries = clean

    def require(self, name: str) -> np.ndarray:
        if name not in self.entries:
            raise MissingTensorError(f"missing tensor {name!r}")
        return self.entries[name]

    def n_parameters(self) -> int:
        return sum(t.size for t in self.entries.values())


def default_metadata(extra: dict[str, str] | None = None) -> dict[str, str]:
    md = {"schema_version": SCHEMA_VERSION, "arch": ARCH_ID}
    md.update(CELL_CONVENTIONS)
    if extra:
        md.update({str(k): str(v) for k, v in extra.items()})
    return md


def _aligned(n: int) -> int:
    return (n + _ALIGN - 1) // _ALIGN * _ALIGN


def save_weights(archive: WeightArchive, path) -> None:
    """Serialize; ``load_weights(save_weights(a)) == a`` bit-exactly."""
    records = []
    offset = 0
    for name, tensor in archive.entries.items():
        records.append({"name": name, "shape": list(tensor.shape), "offset": offset})
        offset = _aligned(offset + tensor.nbytes)
    header = {
        "schema_version": archive.metadata["schema_version"],
        "metadata": archive.metadata,
        "tensors": records,
    }
    header_bytes = json.dumps(header, sort_keys=True).encode("utf-8")
    payload_base = _aligned(len(MAGIC) + 8 + len(header_bytes))
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<Q", len(header_bytes)))
        fh.write(header_bytes)
        fh.write(b"\0" * (payload_base - len(MAGIC) - 8 - len(header_bytes)))
        for record, tensor in zip(records, archive.entries.values()):
            fh.seek(payload_base + record["offset"])
            fh.write(tensor.astype("<f4", copy=False).tobytes())


def load_weights(path) -> WeightArchive:
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < len(MAGIC) + 8:
        raise TruncatedArchiveError("truncated archive: shorter than the fixed preamble")
    if blob[: len(MAGIC)] != MAGIC:
        raise BadMagicError("bad magic: not a weight archive")
    (header_len,) = struct.unpack_from("<Q", blob, len(MAGIC))
    header_end = len(MAGIC) + 8 + header_len
    if len(blob) < header_end:
        raise TruncatedArchiveError("truncated archive: incomplete header")
    try:
        header = json.loads(blob[len(MAGIC) + 8 : header_end].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise WeightArchiveError(f"unreadable header: {exc}") from exc
    version = str(header.get("schema_version"))
    if version != SCHEMA_VERSION:
        raise SchemaVersionError(f"unsupported schema_version {version!r}")
    metadata = {str(k): str(v) for k, v in header.get("metadata", {}).items()}
    payload_base = _aligned(header_end)
    entries: dict[str, np.ndarray] = {}
    for record in header.get("tensors", []):
        name = record["name"]
        if name in entries:
            raise WeightArchiveError(f"duplicate tensor name {name!r}")
        shape = tuple(int(d) for d in record["shape"])
        count = int(np.prod(shape, dtype=np.int64)) if shape else 1
        start = payload_base + int(record["offset"])
        end = start + 4 * count
        if end > len(blob):
            raise TruncatedArchiveError(f"truncated archive: tensor {name!r} payload missing")
        flat = np.frombuffer(blob, dtype="<f4", count=count, offset=start)
        tensor = flat.reshape(shape).astype(np.float32, copy=True)
        if not np.all(np.isfinite(tensor)):
            raise NonFiniteWeightsError(f"non-finite weights in tensor {name!r}")
        entries[name] = tensor
    return WeightArchive(entries=entries, metadata=metadata)
