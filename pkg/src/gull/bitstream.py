"""Bit-exact .gull stream format: 14-byte header plus packed code indices.

No entropy coding: every frame spends exactly 12 + 6*(h-1) bits per valid
subband. Header layout (integers little-endian):

    magic "GULL" | version u8 | model_type u8 (0 speech, 1 music)
    | input_sr_code u8 | target_sr_code u8 | num_hierarchies u8
    | frame_count u32 | reserved u8

Payload bits are packed MSB-first in (frame, band, hierarchy) order; the
final byte is zero-padded. Decoder width/depth never appear in the stream;
they are receiver-local choices.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from . import config as cfg
from .errors import (BadMagicError, BadVersionError, HeaderFieldError,
                     TruncatedStreamError)

MAGIC = b"GULL"
VERSION = 1
HEADER_SIZE = 14

MODEL_TYPE_CODES = {cfg.SPEECH: 0, cfg.MUSIC: 1}
MODEL_TYPE_NAMES = {v: k for k, v in MODEL_TYPE_CODES.items()}

# sr code tables are the paper variants' supported input rates, in order
SR_TABLES = {
    cfg.SPEECH: (8000, 16000, 24000, 32000, 48000),
    cfg.MUSIC: (16000, 24000, 32000, 44100),
}


@dataclass(frozen=True)
class StreamHeader:
    model_type: str
    input_sr: int
    target_sr: int
    num_hierarchies: int
    frame_count: int

    def __post_init__(self):
        if self.model_type not in MODEL_TYPE_CODES:
            raise HeaderFieldError(f"unknown model type {self.model_type!r}")
        table = SR_TABLES[self.model_type]
        if self.input_sr not in table:
            raise HeaderFieldError(f"input rate {self.input_sr} not in {table}")
        if self.target_sr not in table:
            raise HeaderFieldError(f"target rate {self.target_sr} not in {table}")
        if self.target_sr < self.input_sr:
            raise HeaderFieldError("target rate below input rate")
        if not 1 <= self.num_hierarchies <= 5:
            raise HeaderFieldError(f"hierarchy count {self.num_hierarchies} outside 1..5")
        if not 0 <= self.frame_count < 2 ** 32:
            raise HeaderFieldError("frame count out of u32 range")


@dataclass
class FrameCodes:
    """Quantized indices, shape (T, K_hat, h); first hierarchy uses 12 bits."""
    indices: np.ndarray

    def __post_init__(self):
        self.indices = np.asarray(self.indices, dtype=np.int64)
        if self.indices.ndim != 3:
            raise HeaderFieldError("frame codes must be (T, K_hat, h)")

    @property
    def frame_count(self) -> int:
        return self.indices.shape[0]


def _bit_widths(h: int) -> list[int]:
    return [12] + [6] * (h - 1)


def payload_bits(k_hat: int, h: int, frame_count: int) -> int:
    return frame_count * k_hat * sum(_bit_widths(h))


def _pack_indices(indices: np.ndarray, widths: list[int]) -> bytes:
    """MSB-first packing of (T, K, h) indices; zero-pads the final byte."""
    T, K, _ = indices.shape
    total = sum(widths)
    bits = np.zeros((T, K, total), dtype=np.uint8)
    offset = 0
    for level, width in enumerate(widths):
        vals = indices[:, :, level]
        for b in range(width):
            bits[:, :, offset + b] = (vals >> (width - 1 - b)) & 1
        offset += width
    return np.packbits(bits.reshape(-1)).tobytes()


def _unpack_indices(payload: bytes, T: int, K: int, widths: list[int]) -> np.ndarray:
    total = sum(widths)
    nbits = T * K * total
    bits = np.unpackbits(np.frombuffer(payload, dtype=np.uint8))
    if bits[nbits:].any():
        raise TruncatedStreamError("nonzero padding bits")
    bits = bits[:nbits].reshape(T, K, total).astype(np.int64)
    indices = np.empty((T, K, len(widths)), dtype=np.int64)
    offset = 0
    for level, width in enumerate(widths):
        weights = 1 << np.arange(width - 1, -1, -1, dtype=np.int64)
        indices[:, :, level] = bits[:, :, offset:offset + width] @ weights
        offset += width
    return indices


def serialize(header: StreamHeader, frames: FrameCodes) -> bytes:
    """Header + MSB-first packed payload; final byte zero-padded."""
    T, k_hat, h = frames.indices.shape
    if T != header.frame_count:
        raise HeaderFieldError(f"header says {header.frame_count} frames, got {T}")
    if h != header.num_hierarchies:
        raise HeaderFieldError(f"header says h={header.num_hierarchies}, got {h}")
    if k_hat != expected_k_hat(header):
        raise HeaderFieldError(
            f"{k_hat} bands inconsistent with input rate {header.input_sr}")
    widths = _bit_widths(h)
    for level, width in enumerate(widths):
        col = frames.indices[:, :, level]
        if col.size and (col.min() < 0 or col.max() >= (1 << width)):
            raise HeaderFieldError(f"hierarchy {level + 1} index overflows {width} bits")
    table = SR_TABLES[header.model_type]
    head = MAGIC + struct.pack(
        "<BBBBBIB", VERSION, MODEL_TYPE_CODES[header.model_type],
        table.index(header.input_sr), table.index(header.target_sr),
        header.num_hierarchies, header.frame_count, 0)
    return head + _pack_indices(frames.indices, widths)


def expected_k_hat(header: StreamHeader) -> int:
    return cfg.valid_subbands(cfg.build_config(header.model_type), header.input_sr)


def deserialize(data: bytes) -> tuple[StreamHeader, FrameCodes]:
    """Strict inverse of serialize; rejects malformed input with typed errors."""
    if len(data) < 4:
        raise TruncatedStreamError("shorter than the magic")
    if data[:4] != MAGIC:
        raise BadMagicError("not a GULL stream")
    if len(data) < HEADER_SIZE:
        raise TruncatedStreamError("truncated header")
    version, mt_code, in_code, tgt_code, h, frame_count, _reserved = struct.unpack(
        "<BBBBBIB", data[4:HEADER_SIZE])
    if version != VERSION:
        raise BadVersionError(f"unsupported stream version {version}")
    if mt_code not in MODEL_TYPE_NAMES:
        raise HeaderFieldError(f"unknown model type code {mt_code}")
    table = SR_TABLES[MODEL_TYPE_NAMES[mt_code]]
    if in_code >= len(table) or tgt_code >= len(table):
        raise HeaderFieldError("sample-rate code out of table")
    header = StreamHeader(
        model_type=MODEL_TYPE_NAMES[mt_code],
        input_sr=table[in_code],
        target_sr=table[tgt_code],
        num_hierarchies=h,
        frame_count=frame_count,
    )
    k_hat = expected_k_hat(header)
    nbits = payload_bits(k_hat, h, frame_count)
    expected_len = HEADER_SIZE + (nbits + 7) // 8
    if len(data) < expected_len:
        raise TruncatedStreamError(
            f"payload needs {expected_len - HEADER_SIZE} bytes, "
            f"found {len(data) - HEADER_SIZE}")
    if len(data) > expected_len:
        raise TruncatedStreamError(f"{len(data) - expected_len} trailing bytes")
    indices = _unpack_indices(data[HEADER_SIZE:], frame_count, k_hat, _bit_widths(h))
    return header, FrameCodes(indices)
