"""Criterion 12: seeded toy training converges and exports valid weights."""

import numpy as np
import pytest
import torch

from gull_trainer.configs import ToyTrainConfig
from gull_trainer.train import DivergenceError, train_toy


@pytest.fixture(scope="module")
def trained(tmp_path_factory):
    path = tmp_path_factory.mktemp("trained") / "toy.gullw"
    config = ToyTrainConfig(iterations=200, seed=0)
    result = train_toy(config, weights_path=path)
    return config, result, path


def test_criterion_12_loss_reduction(trained):
    _, result, _ = trained
    assert len(result.losses) == 200
    early = result.moving_average(10)
    late = result.moving_average(len(result.losses))
    reduction = 1 - late / early
    assert reduction >= 0.20, f"only {100 * reduction:.1f}% loss reduction"
    print(f"[PASS] criterion 12a: 200 seeded iterations reduce the loss "
          f"{100 * reduction:.1f}% (MA10 {early:.2f} -> {late:.2f})")


def test_criterion_12_export_validates(trained):
    gull = pytest.importorskip(
        "gull", reason="codec package not installed; weight validation is its call")
    from gull import codec
    from gull.weights import load_file, validate_shapes

    _, _, path = trained
    store = load_file(path)
    params = codec.bind_params(store)
    report = validate_shapes(store, params.config)
    assert report.ok, (report.missing, report.mismatched, report.invariant_violations)
    print("[PASS] criterion 12b: exported weights pass codec-side shape validation")


def test_commitment_decreases_on_fixed_data(trained):
    _, result, _ = trained
    early = np.mean([p["commit"] for p in result.parts[:20]])
    late = np.mean([p["commit"] for p in result.parts[-20:]])
    assert late < early
    print(f"[PASS] commitment loss decreased {early:.3f} -> {late:.3f}")


def test_seeded_determinism():
    a = train_toy(ToyTrainConfig(iterations=12, seed=5))
    b = train_toy(ToyTrainConfig(iterations=12, seed=5))
    assert a.losses == b.losses
    c = train_toy(ToyTrainConfig(iterations=12, seed=6))
    assert a.losses != c.losses
    print("[PASS] loss curve reproduces exactly under a fixed seed")


def test_divergence_aborts_with_report():
    config = ToyTrainConfig(iterations=3, seed=0)
    import gull_trainer.train as train_mod
    from gull_trainer.model import GullModel

    original = GullModel.encode

    def poisoned(self, signal, k_hat):
        out = original(self, signal, k_hat)
        return out * torch.nan
    GullModel.encode = poisoned
    try:
        with pytest.raises(DivergenceError):
            train_toy(config)
    finally:
        GullModel.encode = original
