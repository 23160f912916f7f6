"""Versioned binary checkpoint container with integrity checking.

File layout (all integers little-endian):

    bytes 0..3    magic b"MACK"
    bytes 4..7    uint32 container version (currently 1)
    bytes 8..15   uint64 header length in bytes
    header        canonical JSON (utf-8, sorted keys, compact separators):
                  {"format_version": 1, "kind": str, "config": {...},
                   "tensors": [{"name","dtype","shape","offset","nbytes"}, ...],
                   "extra": {...}}
    payload       raw little-endian tensor bytes, at the offsets the header
                  declares (offsets relative to payload start, contiguous)
    trailer       32-byte SHA-256 digest over every preceding byte

Tensors are stored and returned as numpy arrays; offsets follow header order.
Canonical JSON plus fixed offsets make identical states byte-identical files.
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

MAGIC = b"MACK"
VERSION = 1
_DIGEST_LEN = 32

_ALLOWED_DTYPES = {"<f4", "<f8", "<i4", "<i8", "|u1"}


class CheckpointError(ValueError):
    """Raised for malformed, corrupt, or incompatible checkpoint files."""


@dataclass(frozen=True)
class Checkpoint:
    """Decoded checkpoint: a kind tag, a config dict, named tensors, extras."""

    kind: str
    config: dict
    tensors: dict
    extra: dict


def _canonical_dtype(arr: np.ndarray) -> str:
    dt = arr.dtype.newbyteorder("<") if arr.dtype.byteorder == ">" else arr.dtype
    s = dt.str
    if s == "|u1":
        return s
    if s not in _ALLOWED_DTYPES:
        raise CheckpointError(f"unsupported tensor dtype {arr.dtype}")
    return s


def save_checkpoint(
    path: str | Path,
    kind: str,
    config: dict,
    tensors: dict,
    extra: dict | None = None,
) -> None:
    """Serialize named numpy arrays plus JSON metadata to one file."""
    entries = []
    blobs = []
    offset = 0
    for name, arr in tensors.items():
        arr = np.ascontiguousarray(arr)
        dtype = _canonical_dtype(arr)
        blob = arr.astype(dtype, copy=False).tobytes()
        entries.append(
            {
                "name": str(name),
                "dtype": dtype,
                "shape": list(arr.shape),
                "offset": offset,
                "nbytes": len(blob),
            }
        )
        blobs.append(blob)
        offset += len(blob)
    header_obj = {
        "format_version": VERSION,
        "kind": kind,
        "config": config,
        "tensors": entries,
        "extra": extra or {},
    }
    header = json.dumps(header_obj, sort_keys=True, separators=(",", ":")).encode("utf-8")
    body = bytearray()
    body += MAGIC
    body += VERSION.to_bytes(4, "little")
    body += len(header).to_bytes(8, "little")
    body += header
    for blob in blobs:
        body += blob
    digest = hashlib.sha256(bytes(body)).digest()
    with open(path, "wb") as f:
        f.write(bytes(body) + digest)


def load_checkpoint(path: str | Path) -> Checkpoint:
    """Read and verify a checkpoint; raises CheckpointError on any defect."""
    try:
        raw = Path(path).read_bytes()
    except OSError as e:
        raise CheckpointError(f"cannot read checkpoint {path}: {e}")
    if len(raw) < 16 + _DIGEST_LEN:
        raise CheckpointError(f"{path}: file too short to be a checkpoint")
    if raw[:4] != MAGIC:
        raise CheckpointError(f"{path}: bad magic {raw[:4]!r}")
    version = int.from_bytes(raw[4:8], "little")
    if version != VERSION:
        raise CheckpointError(f"{path}: unsupported container version {version}")
    body, digest = raw[:-_DIGEST_LEN], raw[-_DIGEST_LEN:]
    if hashlib.sha256(body).digest() != digest:
        raise CheckpointError(f"{path}: checksum mismatch, file is corrupt")
    header_len = int.from_bytes(raw[8:16], "little")
    if 16 + header_len > len(body):
        raise CheckpointError(f"{path}: truncated header")
    try:
        header = json.loads(body[16 : 16 + header_len].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise CheckpointError(f"{path}: bad header JSON: {e}")
    if header.get("format_version") != VERSION:
        raise CheckpointError(f"{path}: header format_version mismatch")
    payload = body[16 + header_len :]
    tensors = {}
    for ent in header["tensors"]:
        off, nbytes = ent["offset"], ent["nbytes"]
        if off < 0 or off + nbytes > len(payload):
            raise CheckpointError(f"{path}: tensor {ent['name']!r} exceeds payload")
        if ent["dtype"] not in _ALLOWED_DTYPES:
            raise CheckpointError(f"{path}: tensor {ent['name']!r} has bad dtype")
        arr = np.frombuffer(payload[off : off + nbytes], dtype=ent["dtype"])
        shape = tuple(ent["shape"])
        if arr.size != int(np.prod(shape, dtype=np.int64)):
            raise CheckpointError(f"{path}: tensor {ent['name']!r} size/shape mismatch")
        tensors[ent["name"]] = arr.reshape(shape).copy()
    return Checkpoint(
        kind=header["kind"],
        config=header["config"],
        tensors=tensors,
        extra=header.get("extra", {}),
    )
