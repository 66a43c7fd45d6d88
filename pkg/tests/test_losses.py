import numpy as np
import pytest

from gull.errors import GullError, ShapeError
from gull.losses import (RECON_MEL_BANDS, RECON_WINDOWS, conv2d,
                         discriminator_forward, discriminator_stack,
                         feature_matching_loss, lsgan_losses, magnitude_mae,
                         mel_filterbank, mel_mae, multi_resolution_forward,
                         reconstruction_loss, spectral_normalize,
                         total_generator_loss)
from gull.weights import DISC_WINDOWS, random_param_store


@pytest.fixture(scope="module")
def disc_store(speech_config):
    return random_param_store(speech_config, seed=21, include_discriminators=True)


def naive_conv2d(x, weight, stride, padding=1):
    """Loop oracle for the vectorized convolution."""
    c_out, c_in, kh, kw = weight.shape
    xp = np.pad(x, ((0, 0), (padding, padding), (padding, padding)))
    H = (xp.shape[1] - kh) // stride[0] + 1
    W = (xp.shape[2] - kw) // stride[1] + 1
    out = np.zeros((c_out, H, W))
    for co in range(c_out):
        for i in range(H):
            for j in range(W):
                patch = xp[:, i * stride[0]:i * stride[0] + kh,
                           j * stride[1]:j * stride[1] + kw]
                out[co, i, j] = np.sum(patch * weight[co])
    return out


class TestConv:
    @pytest.mark.parametrize("stride", [(1, 1), (2, 2)])
    def test_matches_loop_oracle(self, stride):
        rng = np.random.default_rng(0)
        x = rng.standard_normal((3, 9, 7))
        w = rng.standard_normal((5, 3, 3, 3))
        assert np.allclose(conv2d(x, w, stride), naive_conv2d(x, w, stride), atol=1e-12)

    def test_spectral_normalize_bounds_sigma(self):
        rng = np.random.default_rng(1)
        w = rng.standard_normal((8, 4, 3, 3)) * 3.0
        u = rng.standard_normal(8)
        u /= np.linalg.norm(u)
        # after a few power iterations the estimate converges to sigma
        for _ in range(50):
            mat = w.reshape(8, -1)
            v = mat.T @ u
            v /= np.linalg.norm(v)
            u = mat @ v
            u /= np.linalg.norm(u)
        wn = spectral_normalize(w, u)
        sigma = np.linalg.svd(wn.reshape(8, -1), compute_uv=False)[0]
        assert abs(sigma - 1.0) <= 1e-3


class TestMelFilterbank:
    @pytest.mark.parametrize("window,n_mels", list(zip(RECON_WINDOWS, RECON_MEL_BANDS)))
    def test_rows_nonneg_and_nonzero(self, window, n_mels):
        fb = mel_filterbank(window // 2 + 1, n_mels, 48000)
        assert fb.shape == (n_mels, window // 2 + 1)
        assert np.all(fb >= 0)
        assert np.all(fb.sum(axis=1) > 0)


class TestDiscriminator:
    def test_zero_input_zero_activations(self, disc_store):
        params = discriminator_stack(disc_store, 256)
        score, feats = discriminator_forward(np.zeros((129, 10), dtype=complex), params)
        assert np.all(score == 0)
        assert len(feats) == 6
        assert all(np.all(f == 0) for f in feats)

    def test_scale_invariance(self, disc_store):
        rng = np.random.default_rng(2)
        spec = rng.standard_normal((129, 10)) + 1j * rng.standard_normal((129, 10))
        params = discriminator_stack(disc_store, 256)
        s1, f1 = discriminator_forward(spec, params)
        # power-of-two scaling leaves the normalized input bit-identical
        s2, f2 = discriminator_forward(4.0 * spec, params)
        assert np.array_equal(s1, s2)
        assert all(np.array_equal(a, b) for a, b in zip(f1, f2))
        # arbitrary positive scaling agrees to rounding noise
        s3, _ = discriminator_forward(10.0 * spec, params)
        assert np.allclose(s1, s3, atol=1e-12)

    def test_multi_resolution_shapes(self, disc_store):
        rng = np.random.default_rng(3)
        scores, feats = multi_resolution_forward(rng.standard_normal(12000), disc_store)
        assert len(scores) == len(DISC_WINDOWS)
        assert all(len(f) == 6 for f in feats)

    def test_bad_input_shape(self, disc_store):
        with pytest.raises(ShapeError):
            discriminator_forward(np.zeros(10, dtype=complex),
                                  discriminator_stack(disc_store, 256))


class TestLsgan:
    def test_perfect_discrimination_zero_loss(self):
        d, g = lsgan_losses(np.ones((4, 5)), np.zeros((4, 5)))
        assert d == 0.0
        assert g == 0.0

    def test_inverted_constants(self):
        d, g = lsgan_losses(np.zeros((3, 3)), np.ones((3, 3)))
        assert d == 2.0
        assert g == 1.0

    def test_matches_brute_force_on_random(self):
        rng = np.random.default_rng(4)
        reals = [rng.standard_normal((3, 7)) for _ in range(5)]
        fakes = [rng.standard_normal((3, 7)) for _ in range(5)]
        d, g = lsgan_losses(reals, fakes)
        d_ref = np.mean([np.mean((r - 1) ** 2) + np.mean(f ** 2)
                         for r, f in zip(reals, fakes)])
        g_ref = np.mean([np.mean(f ** 2) for f in fakes])
        assert abs(d - d_ref) <= 1e-6
        assert abs(g - g_ref) <= 1e-6


class TestReconstructionLoss:
    def test_identical_signals_zero(self):
        x = np.random.default_rng(5).standard_normal(4000)
        assert reconstruction_loss(x, x, 8000) == 0.0

    def test_zero_decoded_unit_magnitude_terms(self):
        x = np.random.default_rng(6).standard_normal(4000)
        total = reconstruction_loss(np.zeros_like(x), x, 8000)
        # each of the 7 resolutions contributes exactly 1.0 magnitude MAE
        # plus 1.0 mel MAE (|0 - y|/mean(y) averages to 1 for both)
        assert np.isclose(total, 14.0, atol=1e-9)

    def test_hand_toy_spectrogram(self):
        S = np.array([[1 + 0j, 0 + 0j], [0 + 1j, 2 + 0j]])
        X = np.array([[2 + 0j, 0 + 0j], [0 + 2j, 2 + 0j]])
        # |S|=[[1,0],[1,2]], |X|=[[2,0],[2,2]]; MAE=0.5, mean|X|=1.5
        assert np.isclose(magnitude_mae(S, X), 0.5 / 1.5)

    def test_mel_toy(self):
        fb = np.array([[1.0, 1.0]])
        S = np.array([[1 + 0j], [0 + 0j]])
        X = np.array([[3 + 0j], [1 + 0j]])
        # mel(S)=1, mel(X)=4 -> |1-4|/4
        assert np.isclose(mel_mae(S, X, fb), 3 / 4)

    def test_zero_reference_rejected(self):
        with pytest.raises(GullError):
            reconstruction_loss(np.ones(1000), np.zeros(1000), 8000)


class TestFeatureMatching:
    def test_identical_features_zero(self):
        rng = np.random.default_rng(7)
        feats = [[rng.standard_normal((2, 4, 4)) for _ in range(6)] for _ in range(5)]
        assert feature_matching_loss(feats, feats) == 0.0

    def test_doubled_features_unit_loss(self):
        rng = np.random.default_rng(8)
        real = [[np.abs(rng.standard_normal((2, 4, 4))) + 0.1 for _ in range(6)]
                for _ in range(5)]
        fake = [[2.0 * layer for layer in disc] for disc in real]
        assert np.isclose(feature_matching_loss(fake, real), 1.0)

    def test_matches_loop_oracle(self):
        rng = np.random.default_rng(9)
        real = [[rng.standard_normal((2, 3, 3)) for _ in range(6)] for _ in range(5)]
        fake = [[rng.standard_normal((2, 3, 3)) for _ in range(6)] for _ in range(5)]
        ref = np.mean([
            np.mean([np.mean(np.abs(fs - fx)) / np.mean(np.abs(fx))
                     for fs, fx in zip(fd, rd)])
            for fd, rd in zip(fake, real)])
        assert abs(feature_matching_loss(fake, real) - ref) <= 1e-6


class TestTotalLoss:
    def test_zero_parts(self):
        assert total_generator_loss(0, 0, 0, 0) == 0.0

    def test_unit_parts_alpha(self):
        assert np.isclose(total_generator_loss(1, 1, 1, 1), 3.2)

    def test_random_parts_direct_sum(self):
        rng = np.random.default_rng(10)
        a, b, c, d = rng.uniform(0, 5, 4)
        assert np.isclose(total_generator_loss(a, b, c, d), a + b + c + 0.2 * d)
