"""CKPT1 checkpoint container.

Layout (little-endian throughout)::

    0..4    b"CKPT1"
    5       version byte 0x01
    6..13   u64 index length N
    14..    N bytes of UTF-8 JSON: [{"name", "shape", "offset", "nbytes"}, ...]
            sorted by name, offsets relative to the payload start
    ...     payload: concatenated f32 data
"""

from __future__ import annotations

import json
import os
import struct
from collections.abc import Mapping
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import _kernels
from .errors import BadMagic, IndexMismatch, RejectedValue, TruncatedFile

MAGIC = b"CKPT1"
VERSION = 1
_HEADER = len(MAGIC) + 1 + 8
_F32 = np.dtype("<f4")


class TensorMap(Mapping):
    """Immutable, name-sorted mapping of tensor name to f32 array."""

    def __init__(self, entries=None):
        items = {}
        for name, value in dict(entries or {}).items():
            if not isinstance(name, str) or not name:
                raise ValueError(f"tensor names must be non-empty strings, got {name!r}")
            arr = np.array(value, dtype=np.float32, copy=True)
            arr.setflags(write=False)
            items[name] = arr
        self._entries = {name: items[name] for name in sorted(items)}

    def __getitem__(self, name):
        return self._entries[name]

    def __iter__(self):
        return iter(self._entries)

    def __len__(self):
        return len(self._entries)

    def __repr__(self):
        shapes = ", ".join(f"{k}{list(v.shape)}" for k, v in self._entries.items())
        return f"TensorMap({shapes})"

    def __eq__(self, other):
        """Bit-exact equality of names, shapes and raw data."""
        if not isinstance(other, TensorMap):
            return NotImplemented
        if list(self) != list(other):
            return False
        return all(
            a.shape == b.shape and a.tobytes() == b.tobytes()
            for a, b in zip(self._entries.values(), other._entries.values())
        )

    __hash__ = None

    def shapes(self):
        return {k: tuple(v.shape) for k, v in self._entries.items()}

    def num_elements(self):
        return sum(v.size for v in self._entries.values())


@dataclass(frozen=True)
class CheckpointMeta:
    epoch: int | None
    path: Path
    content_digest: int

    @property
    def digest_hex(self):
        return f"{self.content_digest:016x}"


def encode(tm: TensorMap) -> tuple[bytes, bytes]:
    """Serialize to (header+index, payload) bytes."""
    index = []
    chunks = []
    offset = 0
    for name, arr in tm.items():
        if not np.all(np.isfinite(arr)):
            raise RejectedValue(f"tensor {name!r} contains NaN or Inf")
        data = arr.astype(_F32, copy=False).tobytes()
        index.append({"name": name, "shape": list(arr.shape), "offset": offset, "nbytes": len(data)})
        chunks.append(data)
        offset += len(data)
    blob = json.dumps(index, separators=(",", ":"), ensure_ascii=False).encode("utf-8")
    head = MAGIC + bytes([VERSION]) + struct.pack("<Q", len(blob)) + blob
    return head, b"".join(chunks)


def payload_digest(payload) -> int:
    return _kernels.fnv1a64(payload)


def write_checkpoint(tm: TensorMap, path, epoch=None) -> CheckpointMeta:
    head, payload = encode(tm)
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "wb") as fh:
        fh.write(head)
        fh.write(payload)
    os.replace(tmp, path)
    return CheckpointMeta(epoch=epoch, path=path, content_digest=payload_digest(payload))


def decode(raw: bytes) -> TensorMap:
    if len(raw) < len(MAGIC) or raw[: len(MAGIC)] != MAGIC:
        raise BadMagic("file does not start with b'CKPT1'")
    if len(raw) < _HEADER:
        raise TruncatedFile("header shorter than 14 bytes")
    if raw[len(MAGIC)] != VERSION:
        raise BadMagic(f"unsupported version byte {raw[len(MAGIC)]}")
    (n_index,) = struct.unpack_from("<Q", raw, len(MAGIC) + 1)
    if len(raw) < _HEADER + n_index:
        raise TruncatedFile(f"index declares {n_index} bytes, file too short")
    try:
        index = json.loads(raw[_HEADER : _HEADER + n_index].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise IndexMismatch(f"unreadable index: {exc}") from None
    payload = memoryview(raw)[_HEADER + n_index :]

    entries = {}
    expected = 0
    for item in index:
        try:
            name, shape = item["name"], [int(d) for d in item["shape"]]
            offset, nbytes = int(item["offset"]), int(item["nbytes"])
        except (KeyError, TypeError, ValueError):
            raise IndexMismatch(f"malformed index entry {item!r}") from None
        if any(d < 0 for d in shape) or nbytes != 4 * int(np.prod(shape, dtype=np.int64)) or offset != expected:
            raise IndexMismatch(f"entry {name!r}: shape {shape}, offset {offset}, nbytes {nbytes} inconsistent")
        if name in entries:
            raise IndexMismatch(f"duplicate tensor name {name!r}")
        expected = offset + nbytes
        if expected > len(payload):
            raise TruncatedFile(f"payload ends before tensor {name!r} ({len(payload)} < {expected} bytes)")
        entries[name] = np.frombuffer(payload[offset:expected], dtype=_F32).reshape(shape)
    if expected != len(payload):
        raise IndexMismatch(f"payload has {len(payload)} bytes, index accounts for {expected}")
    return TensorMap(entries)


def read_checkpoint(path) -> TensorMap:
    with open(path, "rb") as fh:
        return decode(fh.read())


def checkpoint_meta(path, epoch=None) -> CheckpointMeta:
    """Digest an existing file without re-encoding it."""
    raw = Path(path).read_bytes()
    decode(raw)
    (n_index,) = struct.unpack_from("<Q", raw, len(MAGIC) + 1)
    return CheckpointMeta(epoch=epoch, path=Path(path), content_digest=payload_digest(raw[_HEADER + n_index :]))


@dataclass(frozen=True)
class CompatibilityReport:
    """Outcome of a structural comparison. ``kind`` is Ok, MissingName or ShapeMismatch."""

    kind: str = "Ok"
    name: str | None = None
    shapes: tuple = ()

    @property
    def ok(self):
        return self.kind == "Ok"

    def __str__(self):
        if self.ok:
            return "Ok"
        if self.kind == "MissingName":
            return f'MissingName("{self.name}")'
        a, b = self.shapes
        return f'ShapeMismatch("{self.name}", {list(a)}, {list(b)})'


def validate_compatible(tms) -> CompatibilityReport:
    tms = list(tms)
    if not tms:
        raise ValueError("validate_compatible needs at least one TensorMap")
    ref = tms[0].shapes()
    for other in tms[1:]:
        shapes = other.shapes()
        missing = sorted(set(ref) ^ set(shapes))
        if missing:
            return CompatibilityReport("MissingName", missing[0])
        for name, shape in ref.items():
            if shapes[name] != shape:
                return CompatibilityReport("ShapeMismatch", name, (shape, shapes[name]))
    return CompatibilityReport()
