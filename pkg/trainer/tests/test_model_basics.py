import numpy as np
import torch

from gull_trainer.model import gain_shape, istft, stft, unit_normalize


def test_stft_istft_roundtrip():
    rng = np.random.default_rng(0)
    x = torch.from_numpy(rng.standard_normal((2, 4000)))
    spec = stft(x, 160, 80)
    assert spec.shape == (2, 81, 50)
    back = istft(spec, 160, 80)
    err = back[:, 80:3920] - x[:, 80:3920]
    snr = 10 * torch.log10((x[:, 80:3920] ** 2).sum() / (err ** 2).sum())
    assert float(snr) >= 60.0


def test_gain_shape_floor():
    zero = torch.zeros(1, 5, dtype=torch.complex128)
    g = gain_shape(zero)
    assert torch.allclose(g[0, -1], torch.tensor(np.log(1e-8)))
    assert torch.all(g[0, :-1] == 0)


def test_encoder_unit_norm(toy_model):
    rng = np.random.default_rng(1)
    E = torch.from_numpy(rng.standard_normal((1, 16, 4, 8)))
    C = toy_model.encoder(E)
    norms = torch.linalg.vector_norm(C, dim=1)
    assert torch.allclose(norms, torch.ones_like(norms), atol=1e-9)


def test_quantize_error_non_increasing(toy_model):
    rng = np.random.default_rng(2)
    c = torch.from_numpy(rng.standard_normal((64, 16)))
    c = unit_normalize(c, dim=1)
    band = toy_model.srvq.bands[0]
    _, estimates = band.quantize(c, h=3)
    errors = [float(torch.linalg.vector_norm(c - e, dim=1).mean())
              for e in estimates]
    assert errors[0] >= errors[1] >= errors[2]


def test_quantize_dequantize_replay(toy_model):
    rng = np.random.default_rng(3)
    c = unit_normalize(torch.from_numpy(rng.standard_normal((32, 16))), dim=1)
    band = toy_model.srvq.bands[1]
    idx, est = band.quantize(c, h=3)
    deq = band.dequantize(idx)
    assert torch.equal(deq, est[-1])


def test_rotation_row0_is_identity(toy_model):
    band = toy_model.srvq.bands[0]
    full = band.full_rotations(0)
    assert torch.all(full[0] == 0)
    e = unit_normalize(torch.from_numpy(np.random.default_rng(4).standard_normal((1, 16))), 1)
    idx = torch.zeros(1, 2, dtype=torch.long)
    idx[0, 0] = 5
    assert torch.allclose(band.dequantize(idx), band.codebook[5:6])


def test_decoder_widths_and_depths(toy_model):
    rng = np.random.default_rng(5)
    R = torch.from_numpy(rng.standard_normal((1, 16, 4, 6)))
    outs = {}
    for w in (1, 4):
        for d in (1, 2):
            out = toy_model.decoder(R, w, d)
            assert out.shape == R.shape
            assert torch.isfinite(out).all()
            outs[(w, d)] = out
    assert not torch.allclose(outs[(1, 1)], outs[(4, 2)])


def test_decode_superres_shape(toy_model):
    rng = np.random.default_rng(6)
    R = torch.from_numpy(rng.standard_normal((1, 16, 2, 6)))
    audio = toy_model.decode(R, w=2, d=1, k_bar=4)
    assert audio.shape == (1, 6 * 80)
    assert torch.isfinite(audio).all()


def test_discriminator_energy_insensitive(toy_model):
    rng = np.random.default_rng(7)
    spec = torch.from_numpy(rng.standard_normal((1, 129, 6))
                            + 1j * rng.standard_normal((1, 129, 6)))
    disc = toy_model.discriminators.discs[0]
    s1, _ = disc(spec)
    s2, _ = disc(4.0 * spec)
    assert torch.equal(s1, s2)


def test_ema_update_moves_codes(toy_model):
    import copy
    band = copy.deepcopy(toy_model.srvq.bands[0])
    target = unit_normalize(torch.from_numpy(
        np.random.default_rng(8).standard_normal((1, 16))), 1)[0]
    for _ in range(400):
        band.ema_update(torch.zeros(4, dtype=torch.long), target.expand(4, 16),
                        decay=0.98, laplace_eps=1e-5)
    assert float(torch.linalg.vector_norm(band.codebook[0] - target)) <= 1e-3


def test_dead_code_replacement(toy_model):
    import copy
    band = copy.deepcopy(toy_model.srvq.bands[0])
    band.age[:] = 150
    gen = torch.Generator().manual_seed(0)
    batch = torch.from_numpy(np.random.default_rng(9).standard_normal((8, 16)))
    replaced = band.replace_dead(batch, gen)
    assert replaced == band.codebook.shape[0]
    assert torch.all(band.age == 0)
    norms = torch.linalg.vector_norm(band.codebook, dim=1)
    assert torch.allclose(norms, torch.ones_like(norms), atol=1e-9)
