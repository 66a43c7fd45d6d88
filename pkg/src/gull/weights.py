"""Portable named-tensor container (.gullw) and shape validation.

The container is a flat map of dot-path tensor names to float32 arrays plus a
small string/float metadata dict. Byte layout (all integers little-endian):

    magic "GULW" | version u8 | meta_len u32 | metadata JSON (sorted keys)
    | tensor_count u32
    | per tensor: name_len u16, name utf-8, ndim u8, dims u32 * ndim
    | payload: float32 row-major tensor data, manifest order

The metadata carries model_type, the config hash and text, the RMVN epsilon,
and the EMA decay so the codec and any external trainer agree on the few
scalars that are not tensors.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field

import numpy as np

from . import config as cfg
from .errors import WeightsFormatError, WeightsShapeError, WeightsVersionError

MAGIC = b"GULW"
VERSION = 1

DEFAULT_RMVN_EPS = 1e-5

# Discriminator topology shared with the losses module.
DISC_WINDOWS = (256, 512, 1024, 2048, 4096)
DISC_CHANNELS = (32, 32, 64, 64, 128, 128)


@dataclass
class ParamStore:
    tensors: dict[str, np.ndarray] = field(default_factory=dict)
    metadata: dict[str, str | float | int] = field(default_factory=dict)

    def add(self, name: str, value: np.ndarray) -> None:
        if name in self.tensors:
            raise WeightsShapeError(f"duplicate tensor name {name!r}")
        self.tensors[name] = np.ascontiguousarray(value, dtype=np.float32)

    def __getitem__(self, name: str) -> np.ndarray:
        try:
            return self.tensors[name]
        except KeyError:
            raise WeightsShapeError(f"missing tensor {name!r}") from None

    def get_f64(self, name: str) -> np.ndarray:
        return self[name].astype(np.float64)

    def __contains__(self, name: str) -> bool:
        return name in self.tensors


def save(store: ParamStore) -> bytes:
    """Serialize deterministically; load(save(s)) round-trips bit-exactly."""
    meta = json.dumps(store.metadata, sort_keys=True).encode()
    out = [MAGIC, struct.pack("<BI", VERSION, len(meta)), meta,
           struct.pack("<I", len(store.tensors))]
    payload = []
    for name, tensor in store.tensors.items():
        encoded = name.encode()
        out.append(struct.pack("<H", len(encoded)))
        out.append(encoded)
        out.append(struct.pack("<B", tensor.ndim))
        out.append(struct.pack(f"<{tensor.ndim}I", *tensor.shape))
        payload.append(np.ascontiguousarray(tensor, dtype="<f4").tobytes())
    return b"".join(out + payload)


def save_file(store: ParamStore, path) -> None:
    with open(path, "wb") as f:
        f.write(save(store))


class _Reader:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.data):
            raise WeightsFormatError("truncated weights container")
        chunk = self.data[self.pos:self.pos + n]
        self.pos += n
        return chunk

    def unpack(self, fmt: str):
        return struct.unpack(fmt, self.take(struct.calcsize(fmt)))


def load(data: bytes) -> ParamStore:
    """Parse a .gullw byte sequence with strict validation."""
    r = _Reader(data)
    if r.take(4) != MAGIC:
        raise WeightsFormatError("not a GULW container")
    (version,) = r.unpack("<B")
    if version != VERSION:
        raise WeightsVersionError(f"unsupported weights version {version}")
    (meta_len,) = r.unpack("<I")
    try:
        metadata = json.loads(r.take(meta_len).decode())
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise WeightsFormatError(f"corrupt metadata: {e}") from e
    if not isinstance(metadata, dict):
        raise WeightsFormatError("metadata must be a JSON object")
    (count,) = r.unpack("<I")
    manifest = []
    for _ in range(count):
        (name_len,) = r.unpack("<H")
        try:
            name = r.take(name_len).decode()
        except UnicodeDecodeError as e:
            raise WeightsFormatError("tensor name is not UTF-8") from e
        (ndim,) = r.unpack("<B")
        shape = r.unpack(f"<{ndim}I")
        manifest.append((name, shape))
    store = ParamStore(metadata=metadata)
    for name, shape in manifest:
        size = int(np.prod(shape, dtype=np.int64)) if shape else 1
        raw = r.take(size * 4)
        if name in store.tensors:
            raise WeightsFormatError(f"duplicate tensor name {name!r}")
        store.tensors[name] = np.frombuffer(raw, dtype="<f4").reshape(shape).copy()
    if r.pos != len(data):
        raise WeightsFormatError(f"{len(data) - r.pos} trailing bytes after payload")
    return store


def load_file(path) -> ParamStore:
    with open(path, "rb") as f:
        return load(f.read())


# ---------------------------------------------------------------------------
# tensor-name contract

def lstm_shapes(prefix: str, in_dim: int, hidden: int) -> dict[str, tuple[int, ...]]:
    return {
        f"{prefix}.weight_ih": (4 * hidden, in_dim),
        f"{prefix}.weight_hh": (4 * hidden, hidden),
        f"{prefix}.bias_ih": (4 * hidden,),
        f"{prefix}.bias_hh": (4 * hidden,),
    }


def expected_shapes(config: cfg.ModelConfig) -> dict[str, tuple[int, ...]]:
    """Every tensor the codec consumes for this config, name -> shape."""
    N, M = config.embed_dim, config.rnn_hidden
    V, W, H = config.elastic_aux_dim, config.elastic_width, config.num_hierarchies
    hid = config.tac_hidden
    shapes: dict[str, tuple[int, ...]] = {}
    for k, G in enumerate(config.band_layout.bin_counts):
        feat = 2 * G + 1
        shapes[f"frontend.band{k}.rmvn.alpha"] = (feat,)
        shapes[f"frontend.band{k}.rmvn.beta"] = (feat,)
        shapes[f"frontend.band{k}.embed.weight"] = (N, feat)
        shapes[f"frontend.band{k}.embed.bias"] = (N,)
        shapes[f"recon.band{k}.glu.weight"] = (4 * G, N)
        shapes[f"recon.band{k}.glu.bias"] = (4 * G,)
        shapes[f"vq.band{k}.codebook"] = (2 ** config.bits_per_hierarchy[0], N)
        shapes[f"vq.band{k}.ema_size"] = (2 ** config.bits_per_hierarchy[0],)
        shapes[f"vq.band{k}.ema_sum"] = (2 ** config.bits_per_hierarchy[0], N)
        for h in range(2, H + 1):
            shapes[f"vq.band{k}.h{h}.rotations"] = (2 ** config.bits_per_hierarchy[h - 1], N)
    for i in range(config.num_encoder_layers):
        for direction in ("time", "band"):
            base = f"enc.block{i}.{direction}"
            shapes[f"{base}.rmvn.alpha"] = (N,)
            shapes[f"{base}.rmvn.beta"] = (N,)
            shapes.update(lstm_shapes(f"{base}.cell", N, M))
            shapes[f"{base}.proj.weight"] = (N, M)
            shapes[f"{base}.proj.bias"] = (N,)
    for i in range(config.num_decoder_layers):
        for direction in ("time", "band"):
            base = f"dec.block{i}.{direction}"
            shapes[f"{base}.rmvn.alpha"] = (N,)
            shapes[f"{base}.rmvn.beta"] = (N,)
            shapes.update(lstm_shapes(f"{base}.cell", N, M))
            shapes[f"{base}.head.weight"] = ((N + V) * W, M)
            shapes[f"{base}.head.bias"] = ((N + V) * W,)
            shapes[f"{base}.tac.u.weight"] = (hid, V)
            shapes[f"{base}.tac.u.bias"] = (hid,)
            shapes[f"{base}.tac.q.weight"] = (hid, hid)
            shapes[f"{base}.tac.q.bias"] = (hid,)
            shapes[f"{base}.tac.b.weight"] = (1, 2 * hid)
            shapes[f"{base}.tac.b.bias"] = (1,)
    return shapes


def optional_shapes(config: cfg.ModelConfig) -> dict[str, tuple[int, ...]]:
    """Tensors that may be present (training state, discriminators)."""
    shapes: dict[str, tuple[int, ...]] = {}
    for k in range(config.num_bands):
        shapes[f"vq.band{k}.age"] = (2 ** config.bits_per_hierarchy[0],)
    for win in DISC_WINDOWS:
        c_in = 2
        for i, c_out in enumerate(DISC_CHANNELS):
            shapes[f"disc.r{win}.block{i}.weight"] = (c_out, c_in, 3, 3)
            shapes[f"disc.r{win}.block{i}.sn_u"] = (c_out,)
            c_in = c_out
        shapes[f"disc.r{win}.score.weight"] = (1, DISC_CHANNELS[-1], 1, 1)
        shapes[f"disc.r{win}.score.sn_u"] = (1,)
    return shapes


@dataclass
class ValidationReport:
    missing: list[str] = field(default_factory=list)
    extra: list[str] = field(default_factory=list)
    mismatched: list[str] = field(default_factory=list)  # "name: got X expected Y"
    invariant_violations: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not (self.missing or self.extra or self.mismatched
                    or self.invariant_violations)


def validate_shapes(store: ParamStore, config: cfg.ModelConfig) -> ValidationReport:
    """Check the store against the config's tensor contract and invariants."""
    required = expected_shapes(config)
    optional = optional_shapes(config)
    report = ValidationReport()
    for name, shape in required.items():
        if name not in store.tensors:
            report.missing.append(name)
        elif store.tensors[name].shape != shape:
            report.mismatched.append(
                f"{name}: got {store.tensors[name].shape}, expected {shape}")
    for name, tensor in store.tensors.items():
        if name in required:
            continue
        if name in optional:
            if tensor.shape != optional[name]:
                report.mismatched.append(
                    f"{name}: got {tensor.shape}, expected {optional[name]}")
        else:
            report.extra.append(name)
    for k in range(config.num_bands):
        name = f"vq.band{k}.codebook"
        if name in store.tensors and store.tensors[name].shape == required[name]:
            norms = np.linalg.norm(store.tensors[name].astype(np.float64), axis=1)
            if np.any(np.abs(norms - 1.0) > 1e-6):
                report.invariant_violations.append(f"{name}: rows not unit-norm")
        for h in range(2, config.num_hierarchies + 1):
            name = f"vq.band{k}.h{h}.rotations"
            if (name in store.tensors and store.tensors[name].shape == required[name]
                    and np.any(store.tensors[name][0] != 0.0)):
                report.invariant_violations.append(f"{name}: row 0 not zero")
    report.missing.sort()
    report.extra.sort()
    return report


def random_param_store(config: cfg.ModelConfig, seed: int = 0,
                       include_discriminators: bool = False) -> ParamStore:
    """Random but structurally valid weights, for tests and smoke runs."""
    rng = np.random.default_rng(seed)
    store = ParamStore(metadata={
        "model_type": config.model_type,
        "config_hash": cfg.config_hash(config),
        "config_text": cfg.to_text(config),
        "rmvn_eps": DEFAULT_RMVN_EPS,
        "ema_decay": 0.99,
    })
    shapes = dict(expected_shapes(config))
    if include_discriminators:
        shapes.update(optional_shapes(config))
    for name, shape in shapes.items():
        if name.endswith("rmvn.alpha"):
            value = np.ones(shape)
        elif name.endswith(("rmvn.beta", ".age")):
            value = np.zeros(shape)
        elif name.endswith("codebook"):
            value = rng.standard_normal(shape)
            value /= np.linalg.norm(value, axis=1, keepdims=True)
        elif name.endswith("ema_size"):
            value = np.ones(shape)
        elif name.endswith("ema_sum"):
            value = store[name.replace("ema_sum", "codebook")].astype(np.float64)
        elif name.endswith("rotations"):
            value = rng.standard_normal(shape) * 0.5
            value[0] = 0.0
        elif name.endswith("sn_u"):
            value = rng.standard_normal(shape)
            value /= max(np.linalg.norm(value), 1e-12)
        elif name.endswith("bias") or name.endswith("bias_ih") or name.endswith("bias_hh"):
            value = np.zeros(shape)
        else:
            fan_in = shape[-1] if len(shape) == 2 else int(np.prod(shape[1:]))
            value = rng.standard_normal(shape) / np.sqrt(max(fan_in, 1))
        store.add(name, value)
    return store
