"""Toy-scale autodiff trainer for the Gull codec.

Trains reduced-size models on synthetic audio, verifies gradients by finite
differences, exports .gullw weight stores, and emits forward-parity fixtures
consumed by the codec's test suite.
"""

from .configs import ToyModelSpec, ToyTrainConfig

__version__ = "0.1.0"
__all__ = ["ToyModelSpec", "ToyTrainConfig", "__version__"]
