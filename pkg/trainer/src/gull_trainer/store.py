"""Independent reader/writer for the .gullw named-tensor container.

Implements the documented byte layout directly (magic GULW, version u8,
length-prefixed JSON metadata, manifest of name/shape entries, float32
little-endian payload) so that weight files cross the codec/trainer boundary
as a format contract rather than shared code.
"""

from __future__ import annotations

import json
import struct

import numpy as np

MAGIC = b"GULW"
VERSION = 1


class StoreFormatError(ValueError):
    pass


def write_store(tensors: dict[str, np.ndarray], metadata: dict) -> bytes:
    meta = json.dumps(metadata, sort_keys=True).encode()
    parts = [MAGIC, struct.pack("<BI", VERSION, len(meta)), meta,
             struct.pack("<I", len(tensors))]
    payload = []
    for name, tensor in tensors.items():
        arr = np.ascontiguousarray(tensor, dtype="<f4")
        encoded = name.encode()
        parts.append(struct.pack("<H", len(encoded)))
        parts.append(encoded)
        parts.append(struct.pack("<B", arr.ndim))
        parts.append(struct.pack(f"<{arr.ndim}I", *arr.shape))
        payload.append(arr.tobytes())
    return b"".join(parts + payload)


def write_store_file(path, tensors: dict[str, np.ndarray], metadata: dict) -> None:
    with open(path, "wb") as f:
        f.write(write_store(tensors, metadata))


def read_store(data: bytes) -> tuple[dict[str, np.ndarray], dict]:
    pos = 0

    def take(n):
        nonlocal pos
        if pos + n > len(data):
            raise StoreFormatError("truncated container")
        out = data[pos:pos + n]
        pos += n
        return out

    if take(4) != MAGIC:
        raise StoreFormatError("bad magic")
    version, meta_len = struct.unpack("<BI", take(5))
    if version != VERSION:
        raise StoreFormatError(f"unsupported version {version}")
    metadata = json.loads(take(meta_len).decode())
    (count,) = struct.unpack("<I", take(4))
    manifest = []
    for _ in range(count):
        (name_len,) = struct.unpack("<H", take(2))
        name = take(name_len).decode()
        (ndim,) = struct.unpack("<B", take(1))
        shape = struct.unpack(f"<{ndim}I", take(4 * ndim))
        manifest.append((name, shape))
    tensors = {}
    for name, shape in manifest:
        size = int(np.prod(shape, dtype=np.int64)) if shape else 1
        tensors[name] = np.frombuffer(take(size * 4), dtype="<f4").reshape(shape).copy()
    if pos != len(data):
        raise StoreFormatError("trailing bytes")
    return tensors, metadata


def read_store_file(path) -> tuple[dict[str, np.ndarray], dict]:
    with open(path, "rb") as f:
        return read_store(f.read())
