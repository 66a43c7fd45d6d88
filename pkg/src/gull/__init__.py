"""Gull: a streaming subband neural audio codec.

Feature extraction, encoding, spherical residual vector quantization,
elastic decoding, and a bit-packed stream format, built on numpy. See
config.build_config for the two model variants and codec.bind_params for
running the pipeline from a .gullw weight store.
"""

from .config import ModelConfig, BandLayout, build_config, valid_subbands, bitrate_bps
from .dsp import AudioBuffer, Spectrogram, resample, stft, istft
from .weights import ParamStore, load_file, save_file, random_param_store, validate_shapes

__version__ = "0.1.0"

__all__ = [
    "ModelConfig", "BandLayout", "build_config", "valid_subbands", "bitrate_bps",
    "AudioBuffer", "Spectrogram", "resample", "stft", "istft",
    "ParamStore", "load_file", "save_file", "random_param_store", "validate_shapes",
    "__version__",
]
