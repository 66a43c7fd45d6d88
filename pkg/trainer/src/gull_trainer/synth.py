"""Synthetic training audio: random sinusoid mixtures plus filtered noise."""

from __future__ import annotations

import numpy as np


def make_segment(rng: np.random.Generator, num_samples: int, sample_rate: int,
                 max_freq: float | None = None) -> np.ndarray:
    max_freq = max_freq or 0.45 * sample_rate
    t = np.arange(num_samples) / sample_rate
    x = np.zeros(num_samples)
    for _ in range(int(rng.integers(2, 6))):
        freq = rng.uniform(60.0, max_freq)
        amp = rng.uniform(0.05, 0.4)
        phase = rng.uniform(0, 2 * np.pi)
        x += amp * np.sin(2 * np.pi * freq * t + phase)
    # one-pole lowpassed noise with a random cutoff
    noise = rng.standard_normal(num_samples)
    a = rng.uniform(0.5, 0.95)
    shaped = np.empty_like(noise)
    acc = 0.0
    for i, n in enumerate(noise):
        acc = a * acc + (1 - a) * n
        shaped[i] = acc
    x += rng.uniform(0.02, 0.2) * shaped / max(np.std(shaped), 1e-9)
    return x * rng.uniform(0.3, 1.2)


def make_batch(rng: np.random.Generator, batch: int, num_samples: int,
               sample_rate: int, max_freq: float | None = None) -> np.ndarray:
    return np.stack([make_segment(rng, num_samples, sample_rate, max_freq)
                     for _ in range(batch)])
