import numpy as np
import pytest

from gull import codec
from gull import config as cfg
from gull.config import BandLayout, ModelConfig
from gull.weights import random_param_store


@pytest.fixture(scope="session")
def speech_config():
    return cfg.build_config("speech")


@pytest.fixture(scope="session")
def music_config():
    return cfg.build_config("music")


def make_tiny_config() -> ModelConfig:
    """Reduced-dimension config for fast forward-pass tests.

    8 kHz operating rate, 4 bands of 1 kHz (F=81), N=16, M=32, W=4, H=3.
    """
    layout = BandLayout(
        bin_counts=(21, 20, 20, 20),
        band_edges_hz=((0, 1000), (1000, 2000), (2000, 3000), (3000, 4000)),
    )
    return ModelConfig(
        model_type="speech",
        operating_sr=8000,
        band_layout=layout,
        embed_dim=16,
        num_encoder_layers=2,
        num_decoder_layers=2,
        rnn_hidden=32,
        elastic_width=4,
        elastic_aux_dim=8,
        tac_hidden=8,
        num_hierarchies=3,
        bits_per_hierarchy=(6, 4, 4),
        supported_input_srs=(2000, 4000, 8000),
    )


@pytest.fixture(scope="session")
def tiny_config():
    return make_tiny_config()


@pytest.fixture(scope="session")
def tiny_store(tiny_config):
    return random_param_store(tiny_config, seed=11)


@pytest.fixture(scope="session")
def tiny_params(tiny_store):
    return codec.bind_params(tiny_store)


@pytest.fixture(scope="session")
def speech_params(speech_config):
    return codec.bind_params(random_param_store(speech_config, seed=3))


def random_unit_vectors(n: int, dim: int, seed: int = 0) -> np.ndarray:
    rng = np.random.default_rng(seed)
    v = rng.standard_normal((n, dim))
    return v / np.linalg.norm(v, axis=1, keepdims=True)
