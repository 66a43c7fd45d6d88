"""Toy training configuration and the key-value config text it exports.

The exported text uses the same flat key=value schema the codec parses, so a
toy-trained weight file is self-describing on the other side of the fence.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field


@dataclass(frozen=True)
class BandSpec:
    bin_counts: tuple[int, ...]
    band_edges_hz: tuple[tuple[float, float], ...]


@dataclass(frozen=True)
class ToyModelSpec:
    """Reduced-size codec dimensions; defaults give a 8 kHz 4-band toy."""
    model_type: str = "speech"
    operating_sr: int = 8000
    window_ms: int = 20
    hop_ms: int = 10
    embed_dim: int = 16
    num_encoder_layers: int = 2
    num_decoder_layers: int = 2
    rnn_hidden: int = 32
    elastic_width: int = 4
    elastic_aux_dim: int = 8
    tac_hidden: int = 8
    num_hierarchies: int = 3
    bits_per_hierarchy: tuple[int, ...] = (6, 4, 4)
    supported_input_srs: tuple[int, ...] = (2000, 4000, 8000)
    bands: BandSpec = BandSpec(
        bin_counts=(21, 20, 20, 20),
        band_edges_hz=((0, 1000), (1000, 2000), (2000, 3000), (3000, 4000)),
    )

    @property
    def window_size(self) -> int:
        return self.operating_sr * self.window_ms // 1000

    @property
    def hop_size(self) -> int:
        return self.operating_sr * self.hop_ms // 1000

    @property
    def num_bins(self) -> int:
        return self.window_size // 2 + 1

    @property
    def num_bands(self) -> int:
        return len(self.bands.bin_counts)

    def valid_subbands(self, input_sr: int) -> int:
        nyq = input_sr / 2
        return sum(1 for (_, hi) in self.bands.band_edges_hz if hi <= nyq)


def config_text(spec: ToyModelSpec) -> str:
    def fmt(x):
        return str(int(x)) if float(x).is_integer() else repr(float(x))

    lines = [f"model_type = {spec.model_type}"]
    for name in ("operating_sr", "window_ms", "hop_ms", "embed_dim",
                 "num_encoder_layers", "num_decoder_layers", "rnn_hidden",
                 "elastic_width", "elastic_aux_dim", "tac_hidden",
                 "num_hierarchies"):
        lines.append(f"{name} = {getattr(spec, name)}")
    lines.append("bits_per_hierarchy = " + ",".join(map(str, spec.bits_per_hierarchy)))
    lines.append("supported_input_srs = " + ",".join(map(str, spec.supported_input_srs)))
    lines.append("bin_counts = " + ",".join(map(str, spec.bands.bin_counts)))
    lines.append("band_edges_hz = " + ",".join(
        f"{fmt(lo)}:{fmt(hi)}" for lo, hi in spec.bands.band_edges_hz))
    return "\n".join(lines) + "\n"


def config_hash(spec: ToyModelSpec) -> str:
    return hashlib.sha256(config_text(spec).encode()).hexdigest()


@dataclass
class ToyTrainConfig:
    model: ToyModelSpec = field(default_factory=ToyModelSpec)
    iterations: int = 200
    batch_size: int = 2
    segment_seconds: float = 0.5
    # full-scale recipes pair 1e-3 codec / 1e-4 discriminator rates with
    # hundreds of thousands of iterations; the 200-iteration toy regime
    # needs the faster codec rate to show measurable convergence
    lr_codec: float = 3e-3
    lr_disc: float = 1e-4
    commit_weight: float = 0.2
    ema_decay: float = 0.99
    laplace_eps: float = 1e-5
    rmvn_eps: float = 1e-5
    seed: int = 0
    train_dtype: str = "float32"
    # reduced discriminator bank for toy-scale speed; the full five-window
    # bank is exercised by fixture emission, not the training loop
    disc_windows: tuple[int, ...] = (256, 512, 1024)
    recon_windows: tuple[int, ...] = (32, 64, 128, 256, 512, 1024, 2048)
    recon_mels: tuple[int, ...] = (5, 10, 20, 40, 80, 160, 320)
