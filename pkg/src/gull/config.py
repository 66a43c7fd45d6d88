"""Model variants, subband layouts, and bitrate accounting.

Two built-in variants exist: ``speech`` (48 kHz operating rate, 10 subbands)
and ``music`` (44.1 kHz, 20 subbands). The frequency axis of the operating-rate
spectrogram is partitioned into contiguous subbands; an input at a lower sample
rate only occupies the first few ("valid") subbands, which is what makes the
codec sample-rate agnostic.

Configs serialize to a flat key-value text format (see ``to_text``/``from_text``)
so the codec and external tools can agree on one canonical description; its
SHA-256 is used to pair weight files with configs.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

from .errors import ConfigError

SPEECH = "speech"
MUSIC = "music"

FRAME_RATE_HZ = 100  # 1000 / hop_ms for the 10 ms hop used by both variants


@dataclass(frozen=True)
class BandLayout:
    """Partition of the frequency axis into contiguous subbands.

    bin_counts[k] is the number of FFT bins owned by subband k;
    band_edges_hz[k] is its (low, high) frequency range. Bands tile
    [0, operating_sr/2] with no gaps or overlaps. The DC bin is assigned
    to the first subband, so bin_counts[0] is one larger than its Hz
    width divided by the bin width.
    """

    bin_counts: tuple[int, ...]
    band_edges_hz: tuple[tuple[float, float], ...]

    @property
    def num_bands(self) -> int:
        return len(self.bin_counts)

    @property
    def total_bins(self) -> int:
        return sum(self.bin_counts)

    def band_offsets(self) -> list[int]:
        """Starting bin index of each subband."""
        offsets, acc = [], 0
        for g in self.bin_counts:
            offsets.append(acc)
            acc += g
        return offsets


@dataclass(frozen=True)
class ModelConfig:
    model_type: str
    operating_sr: int
    band_layout: BandLayout
    window_ms: int = 20
    hop_ms: int = 10
    embed_dim: int = 64
    num_encoder_layers: int = 4
    num_decoder_layers: int = 4
    rnn_hidden: int = 128
    elastic_width: int = 10
    elastic_aux_dim: int = 16
    tac_hidden: int = 16
    num_hierarchies: int = 5
    bits_per_hierarchy: tuple[int, ...] = (12, 6, 6, 6, 6)
    supported_input_srs: tuple[int, ...] = ()

    def __post_init__(self):
        if self.model_type not in (SPEECH, MUSIC):
            raise ConfigError(f"unknown model_type {self.model_type!r}")
        if len(self.bits_per_hierarchy) != self.num_hierarchies:
            raise ConfigError("bits_per_hierarchy length must equal num_hierarchies")
        if any(b < 1 for b in self.bits_per_hierarchy):
            raise ConfigError("bits_per_hierarchy entries must be >= 1")
        win = self.operating_sr * self.window_ms
        if win % 1000 or (win // 1000) % 2:
            raise ConfigError("window length must be an even sample count")
        if self.band_layout.total_bins != self.num_bins:
            raise ConfigError(
                f"band layout covers {self.band_layout.total_bins} bins, "
                f"expected F={self.num_bins}"
            )
        edges = self.band_layout.band_edges_hz
        if edges[0][0] != 0 or edges[-1][1] != self.operating_sr / 2:
            raise ConfigError("band edges must span 0..Nyquist")
        for (_, hi), (lo, _) in zip(edges, edges[1:]):
            if hi != lo:
                raise ConfigError("band edges must be contiguous")
        for sr in self.supported_input_srs:
            if sr > self.operating_sr:
                raise ConfigError("supported input rates cannot exceed operating rate")

    @property
    def window_size(self) -> int:
        return self.operating_sr * self.window_ms // 1000

    @property
    def hop_size(self) -> int:
        return self.operating_sr * self.hop_ms // 1000

    @property
    def num_bins(self) -> int:
        """F: one-sided FFT bin count of the analysis window."""
        return self.window_size // 2 + 1

    @property
    def num_bands(self) -> int:
        return self.band_layout.num_bands

    @property
    def frame_rate(self) -> int:
        return 1000 // self.hop_ms


def _layout_from_widths(operating_sr: int, window_size: int, widths_hz: list[float]) -> BandLayout:
    """Build a layout from per-band widths in Hz; the DC bin goes to band 0."""
    bin_hz = operating_sr / window_size
    counts, edges, lo = [], [], 0.0
    for i, w in enumerate(widths_hz):
        g = round(w / bin_hz) + (1 if i == 0 else 0)
        counts.append(g)
        edges.append((lo, lo + w))
        lo += w
    return BandLayout(tuple(counts), tuple(edges))


def build_config(model_type: str) -> ModelConfig:
    """Construct one of the two built-in model variants."""
    if model_type == SPEECH:
        widths = [2000.0] * 8 + [4000.0] * 2
        return ModelConfig(
            model_type=SPEECH,
            operating_sr=48000,
            band_layout=_layout_from_widths(48000, 960, widths),
            supported_input_srs=(8000, 16000, 24000, 32000, 48000),
        )
    if model_type == MUSIC:
        # ten 400 Hz + four 1 kHz + four 2 kHz + one 4 kHz + the 20k..22.05k remainder
        widths = [400.0] * 10 + [1000.0] * 4 + [2000.0] * 4 + [4000.0] + [2050.0]
        return ModelConfig(
            model_type=MUSIC,
            operating_sr=44100,
            band_layout=_layout_from_widths(44100, 882, widths),
            supported_input_srs=(16000, 24000, 32000, 44100),
        )
    raise ConfigError(f"unknown model_type {model_type!r}")


def valid_subbands(config: ModelConfig, input_sr: int) -> int:
    """Number of subbands fully below the Nyquist of ``input_sr``."""
    if input_sr not in config.supported_input_srs:
        raise ConfigError(
            f"{config.model_type} model does not support {input_sr} Hz input "
            f"(supported: {list(config.supported_input_srs)})"
        )
    nyq = input_sr / 2
    return sum(1 for (_, hi) in config.band_layout.band_edges_hz if hi <= nyq)


def bits_per_frame(config: ModelConfig, h: int) -> int:
    """Payload bits one subband contributes per frame at hierarchy depth h."""
    if not 1 <= h <= config.num_hierarchies:
        raise ConfigError(f"hierarchy count {h} outside 1..{config.num_hierarchies}")
    return sum(config.bits_per_hierarchy[:h])


def bitrate_bps(config: ModelConfig, input_sr: int, h: int) -> int:
    """Payload bitrate in bits/s, excluding header overhead."""
    k_hat = valid_subbands(config, input_sr)
    return k_hat * config.frame_rate * bits_per_frame(config, h)


# ---------------------------------------------------------------------------
# key-value text serialization

_INT_FIELDS = (
    "operating_sr", "window_ms", "hop_ms", "embed_dim", "num_encoder_layers",
    "num_decoder_layers", "rnn_hidden", "elastic_width", "elastic_aux_dim",
    "tac_hidden", "num_hierarchies",
)


def to_text(config: ModelConfig) -> str:
    """Canonical key-value rendering; hashes of this text pair weights to configs."""
    lines = [f"model_type = {config.model_type}"]
    for name in _INT_FIELDS:
        lines.append(f"{name} = {getattr(config, name)}")
    lines.append("bits_per_hierarchy = " + ",".join(str(b) for b in config.bits_per_hierarchy))
    lines.append("supported_input_srs = " + ",".join(str(s) for s in config.supported_input_srs))
    lines.append("bin_counts = " + ",".join(str(g) for g in config.band_layout.bin_counts))
    lines.append("band_edges_hz = " + ",".join(
        f"{_fmt_hz(lo)}:{_fmt_hz(hi)}" for lo, hi in config.band_layout.band_edges_hz))
    return "\n".join(lines) + "\n"


def _fmt_hz(x: float) -> str:
    return str(int(x)) if float(x).is_integer() else repr(float(x))


def from_text(text: str) -> ModelConfig:
    """Parse the key-value format produced by ``to_text``."""
    kv: dict[str, str] = {}
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"bad config line {raw!r}")
        key, val = line.split("=", 1)
        kv[key.strip()] = val.strip()
    try:
        counts = tuple(int(g) for g in kv.pop("bin_counts").split(","))
        edges = tuple(
            (float(p.split(":")[0]), float(p.split(":")[1]))
            for p in kv.pop("band_edges_hz").split(",")
        )
        kwargs = {"model_type": kv.pop("model_type"),
                  "band_layout": BandLayout(counts, edges)}
        for name in _INT_FIELDS:
            kwargs[name] = int(kv.pop(name))
        kwargs["bits_per_hierarchy"] = tuple(int(b) for b in kv.pop("bits_per_hierarchy").split(","))
        kwargs["supported_input_srs"] = tuple(int(s) for s in kv.pop("supported_input_srs").split(","))
    except (KeyError, ValueError, IndexError) as e:
        raise ConfigError(f"malformed config text: {e}") from e
    if kv:
        raise ConfigError(f"unknown config keys: {sorted(kv)}")
    return ModelConfig(**kwargs)


def config_hash(config: ModelConfig) -> str:
    return hashlib.sha256(to_text(config).encode()).hexdigest()


def is_paper_variant(config: ModelConfig) -> bool:
    """True when the config matches one of the two built-in variants."""
    return config == build_config(config.model_type)
