"""Finite-difference verification of analytic gradients.

Central differences with step 1e-4 in float64 against autograd, for the
commitment loss with respect to rotation vectors and for the reconstruction
and feature-matching losses with respect to decoder-side weights. Quantizer
indices are frozen before differentiation (they are piecewise constant, so
the comparison happens on the smooth branch the optimizer actually sees).
"""

from __future__ import annotations

import numpy as np
import torch

from . import losses as tlosses
from .configs import ToyModelSpec
from .model import GullModel

FD_STEP = 1e-4


def central_difference(fn, param: torch.Tensor, positions, step: float = FD_STEP):
    grads = {}
    with torch.no_grad():
        for pos in positions:
            original = param[pos].item()
            param[pos] = original + step
            hi = float(fn())
            param[pos] = original - step
            lo = float(fn())
            param[pos] = original
            grads[pos] = (hi - lo) / (2 * step)
    return grads


def relative_error(analytic: float, numeric: float) -> float:
    scale = max(abs(analytic), abs(numeric), 1e-8)
    return abs(analytic - numeric) / scale


def _fixed_index_commitment(band, c: torch.Tensor, indices: torch.Tensor):
    """Commitment loss with frozen indices; differentiable in the rotations."""
    def fn():
        e = band.codebook[indices[:, 0]]
        estimates = [e]
        for level in range(indices.shape[1] - 1):
            o_hat = band._unit_rows(band.full_rotations(level))[indices[:, level + 1]]
            e = e - 2.0 * (e * o_hat).sum(dim=1, keepdim=True) * o_hat
            estimates.append(e)
        wrapped = [est.T[None, :, None, :] for est in estimates]  # (1, N, 1, n)
        return tlosses.commitment_loss(c.T[None, :, None, :], wrapped)
    return fn


def _rotation_pull_term(band, c: torch.Tensor, indices: torch.Tensor):
    """The rotation-side commitment term alone (encoder side frozen).

    Stop-gradient marks the other terms constant with respect to the
    rotations, so this is the functional whose finite differences the
    analytic d l_commit / d o must match.
    """
    def fn():
        e = band.codebook[indices[:, 0]]
        deeper = []
        for level in range(indices.shape[1] - 1):
            o_hat = band._unit_rows(band.full_rotations(level))[indices[:, level + 1]]
            e = e - 2.0 * (e * o_hat).sum(dim=1, keepdim=True) * o_hat
            deeper.append(torch.linalg.vector_norm(c.detach() - e, dim=1))
        return torch.stack(deeper).mean()
    return fn


def check_commitment_rotations(seed: int = 0, samples: int = 6) -> float:
    """Max relative error of d l_commit / d o on a 1-band N=4 H=2 toy."""
    spec = ToyModelSpec(
        embed_dim=4, rnn_hidden=8, elastic_width=2, elastic_aux_dim=4,
        tac_hidden=4, num_hierarchies=2, bits_per_hierarchy=(3, 2),
        num_encoder_layers=1, num_decoder_layers=1,
        bands=type(ToyModelSpec().bands)((81,), ((0, 4000),)),
    )
    model = GullModel(spec, seed=seed, disc_windows=(256,)).double()
    band = model.srvq.bands[0]
    rng = np.random.default_rng(seed)
    c = torch.from_numpy(rng.standard_normal((samples, 4)))
    c = c / torch.linalg.vector_norm(c, dim=1, keepdim=True)
    with torch.no_grad():
        indices, _ = band.quantize(c, h=2)

    # analytic: autograd through the full loss (gradient flows only via the
    # non-stopped rotation term); numeric: finite differences of that term
    loss = _fixed_index_commitment(band, c, indices)()
    band.rotations[0].grad = None
    loss.backward()
    analytic = band.rotations[0].grad.clone()

    rng_pos = np.random.default_rng(seed + 1)
    positions = [(int(rng_pos.integers(band.rotations[0].shape[0])),
                  int(rng_pos.integers(band.rotations[0].shape[1])))
                 for _ in range(8)]
    numeric = central_difference(_rotation_pull_term(band, c, indices),
                                 band.rotations[0].data, positions)
    return max(relative_error(float(analytic[pos]), g) for pos, g in numeric.items())


def check_zero_gradient_at_fixed_point(seed: int = 0) -> float:
    """c equal to every estimate: the commitment gradient must vanish."""
    spec = ToyModelSpec(
        embed_dim=4, rnn_hidden=8, elastic_width=2, elastic_aux_dim=4,
        tac_hidden=4, num_hierarchies=2, bits_per_hierarchy=(3, 2),
        num_encoder_layers=1, num_decoder_layers=1,
        bands=type(ToyModelSpec().bands)((81,), ((0, 4000),)),
    )
    model = GullModel(spec, seed=seed).double()
    band = model.srvq.bands[0]
    c = band.codebook[:3].clone().requires_grad_(True)
    indices = torch.stack([torch.arange(3), torch.zeros(3, dtype=torch.long)], dim=1)
    loss = _fixed_index_commitment(band, c, indices)()
    loss.backward()
    assert float(loss.detach()) == 0.0
    grads = [c.grad.abs().max(), band.rotations[0].grad.abs().max()
             if band.rotations[0].grad is not None else torch.tensor(0.0)]
    return float(max(grads))


def check_codebook_receives_no_gradient(seed: int = 0) -> bool:
    """The first commitment term must not push gradients into the codes."""
    spec = ToyModelSpec(
        embed_dim=4, rnn_hidden=8, elastic_width=2, elastic_aux_dim=4,
        tac_hidden=4, num_hierarchies=2, bits_per_hierarchy=(3, 2),
        num_encoder_layers=1, num_decoder_layers=1,
        bands=type(ToyModelSpec().bands)((81,), ((0, 4000),)),
    )
    model = GullModel(spec, seed=seed).double()
    band = model.srvq.bands[0]
    codes = band.codebook.clone().requires_grad_(True)
    rng = np.random.default_rng(seed)
    c = torch.from_numpy(rng.standard_normal((4, 4))).requires_grad_(True)
    j = torch.randint(0, codes.shape[0], (4,))
    e1 = codes[j]
    term1 = torch.linalg.vector_norm(c - e1.detach(), dim=1).mean()
    term1.backward()
    assert c.grad is not None  # the encoder side does receive gradient
    return codes.grad is None or bool((codes.grad == 0).all())


def _tiny_model(seed: int = 0) -> GullModel:
    spec = ToyModelSpec(
        embed_dim=6, rnn_hidden=8, elastic_width=2, elastic_aux_dim=4,
        tac_hidden=4, num_hierarchies=2, bits_per_hierarchy=(3, 2),
        num_encoder_layers=1, num_decoder_layers=1,
        bands=type(ToyModelSpec().bands)(
            (41, 40), ((0, 2000), (2000, 4000))),
    )
    return GullModel(spec, seed=seed, disc_windows=(128,)).double()


def check_reconstruction_gradients(seed: int = 0) -> float:
    """d l_Rec / d (decoder head, GLU) weights vs finite differences."""
    model = _tiny_model(seed)
    spec = model.spec
    rng = np.random.default_rng(seed)
    R = torch.from_numpy(rng.standard_normal((1, 6, 2, 6)))
    target = torch.from_numpy(rng.standard_normal((1, 6 * spec.hop_size)))

    def loss_fn():
        decoded = model.decode(R, w=2, d=1, k_bar=2)
        return tlosses.reconstruction_loss(decoded, target, spec.operating_sr,
                                           (32, 64, 128), (5, 10, 20))

    params = {
        "head": model.decoder.blocks[0]["time"].head.weight,
        "glu": model.recon.glu[0].weight,
        "tac_u": model.decoder.blocks[0]["time"].tac.u.weight,
    }
    worst = 0.0
    for i, (name, param) in enumerate(params.items()):
        loss = loss_fn()
        for p in params.values():
            p.grad = None
        loss.backward()
        analytic = param.grad.clone()
        rng_pos = np.random.default_rng(seed + 10 + i)
        positions = [(int(rng_pos.integers(param.shape[0])),
                      int(rng_pos.integers(param.shape[1]))) for _ in range(4)]
        numeric = central_difference(loss_fn, param.data, positions)
        for pos, g in numeric.items():
            worst = max(worst, relative_error(float(analytic[pos]), g))
    return worst


def check_feature_matching_gradients(seed: int = 0) -> float:
    """d l_FM / d decoder weights vs finite differences."""
    model = _tiny_model(seed)
    spec = model.spec
    rng = np.random.default_rng(seed)
    R = torch.from_numpy(rng.standard_normal((1, 6, 2, 6)))
    target = torch.from_numpy(rng.standard_normal((1, 6 * spec.hop_size)))
    with torch.no_grad():
        _, real_feats = model.discriminators(target)

    def loss_fn():
        decoded = model.decode(R, w=2, d=1, k_bar=2)
        _, fake_feats = model.discriminators(decoded)
        return tlosses.feature_matching_loss(fake_feats, real_feats)

    param = model.decoder.blocks[0]["time"].head.weight
    loss = loss_fn()
    param.grad = None
    loss.backward()
    analytic = param.grad.clone()
    rng_pos = np.random.default_rng(seed + 99)
    positions = [(int(rng_pos.integers(param.shape[0])),
                  int(rng_pos.integers(param.shape[1]))) for _ in range(4)]
    numeric = central_difference(loss_fn, param.data, positions)
    return max(relative_error(float(analytic[pos]), g)
               for pos, g in numeric.items())


def run_all(seed: int = 0) -> dict[str, float]:
    return {
        "commitment_rotations": check_commitment_rotations(seed),
        "fixed_point_gradient": check_zero_gradient_at_fixed_point(seed),
        "reconstruction": check_reconstruction_gradients(seed),
        "feature_matching": check_feature_matching_gradients(seed),
        "codebook_isolated": 0.0 if check_codebook_receives_no_gradient(seed) else 1.0,
    }
