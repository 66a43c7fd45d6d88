import subprocess
import sys

import numpy as np
import pytest

from gull.cli import align_by_correlation, main, read_wav, snr_db, write_wav
from gull.dsp import AudioBuffer
from gull.weights import random_param_store, save_file


@pytest.fixture(scope="module")
def weights_path(tmp_path_factory, speech_config):
    path = tmp_path_factory.mktemp("weights") / "speech.gullw"
    save_file(random_param_store(speech_config, seed=3), path)
    return str(path)


@pytest.fixture(scope="module")
def wav_path(tmp_path_factory):
    path = tmp_path_factory.mktemp("audio") / "in.wav"
    t = np.arange(4000) / 16000
    write_wav(str(path), AudioBuffer(0.4 * np.sin(2 * np.pi * 523 * t), 16000))
    return str(path)


def run_cli(*args):
    return main(list(args))


class TestWavIO:
    def test_float_roundtrip(self, tmp_path):
        path = str(tmp_path / "x.wav")
        samples = np.random.default_rng(0).uniform(-0.5, 0.5, 1000)
        write_wav(path, AudioBuffer(samples, 16000))
        back = read_wav(path)
        assert back.sample_rate == 16000
        assert np.allclose(back.samples, samples, atol=1e-7)

    def test_pcm16_roundtrip(self, tmp_path):
        path = str(tmp_path / "x16.wav")
        samples = np.random.default_rng(1).uniform(-0.5, 0.5, 1000)
        write_wav(path, AudioBuffer(samples, 8000), pcm16=True)
        back = read_wav(path)
        assert np.max(np.abs(back.samples - samples)) <= 0.5 / 32768


class TestEncodeDecode:
    def test_encode_decode_inspect(self, tmp_path, weights_path, wav_path, capsys):
        gull_path = str(tmp_path / "out.gull")
        assert run_cli("encode", wav_path, gull_path, "--weights", weights_path,
                       "--hierarchies", "2") == 0
        printed = capsys.readouterr().out
        assert "7.2 kbps" in printed  # 2.4 x 3 at 16 kHz speech, h=2

        wav_out = str(tmp_path / "out.wav")
        assert run_cli("decode", gull_path, wav_out, "--weights", weights_path,
                       "--width", "2", "--depth", "1") == 0
        decoded = read_wav(wav_out)
        assert decoded.sample_rate == 16000
        assert abs(len(decoded.samples) - 4000) <= 480 // 3  # one hop at 16 kHz

        assert run_cli("inspect", gull_path) == 0
        report = capsys.readouterr().out
        assert "model_type: speech" in report
        assert "frames: 25" in report
        assert "valid_subbands: 4" in report

    def test_decode_both_extremes(self, tmp_path, weights_path, wav_path):
        gull_path = str(tmp_path / "x.gull")
        run_cli("encode", wav_path, gull_path, "--weights", weights_path,
                "--hierarchies", "1")
        for w, d in ((1, 1), (10, 4)):
            out = str(tmp_path / f"out{w}{d}.wav")
            assert run_cli("decode", gull_path, out, "--weights", weights_path,
                           "--width", str(w), "--depth", str(d)) == 0

    def test_superres_decode(self, tmp_path, weights_path, wav_path):
        gull_path = str(tmp_path / "sr.gull")
        assert run_cli("encode", wav_path, gull_path, "--weights", weights_path,
                       "--hierarchies", "1", "--target-sr", "48000") == 0
        out = str(tmp_path / "sr.wav")
        assert run_cli("decode", gull_path, out, "--weights", weights_path,
                       "--width", "1", "--depth", "1") == 0
        assert read_wav(out).sample_rate == 48000

    def test_silent_input(self, tmp_path, weights_path):
        silent = str(tmp_path / "silent.wav")
        write_wav(silent, AudioBuffer(np.zeros(2000), 16000))
        assert run_cli("encode", silent, str(tmp_path / "s.gull"),
                       "--weights", weights_path, "--hierarchies", "1") == 0

    def test_unsupported_rate_exit_code(self, tmp_path, weights_path):
        bad = str(tmp_path / "bad.wav")
        write_wav(bad, AudioBuffer(np.zeros(1000), 44100))
        assert run_cli("encode", bad, str(tmp_path / "b.gull"),
                       "--weights", weights_path) == 2

    def test_corrupt_stream_exit_code(self, tmp_path, weights_path):
        bad = tmp_path / "bad.gull"
        bad.write_bytes(b"GULLxxxx")
        assert run_cli("decode", str(bad), str(tmp_path / "o.wav"),
                       "--weights", weights_path) == 4

    def test_bad_weights_exit_code(self, tmp_path, wav_path):
        bad = tmp_path / "bad.gullw"
        bad.write_bytes(b"not a weights file")
        assert run_cli("encode", wav_path, str(tmp_path / "o.gull"),
                       "--weights", str(bad)) == 5

    def test_no_partial_output_on_failure(self, tmp_path, weights_path, wav_path):
        gull_path = tmp_path / "y.gull"
        run_cli("encode", wav_path, str(gull_path), "--weights", weights_path,
                "--hierarchies", "1")
        data = bytearray(gull_path.read_bytes())
        data[:4] = b"XXXX"
        (tmp_path / "z.gull").write_bytes(bytes(data))
        target = tmp_path / "never.wav"
        assert run_cli("decode", str(tmp_path / "z.gull"), str(target),
                       "--weights", weights_path) == 4
        assert not target.exists()

    def test_bitrate_flag(self, tmp_path, weights_path, wav_path, capsys):
        # 16 kHz speech: 4 bands * 100 fps * 12 bits = 4.8 kbps at h=1
        assert run_cli("encode", wav_path, str(tmp_path / "r.gull"),
                       "--weights", weights_path, "--bitrate", "4.8") == 0
        assert "h=1" in capsys.readouterr().out
        assert run_cli("encode", wav_path, str(tmp_path / "r.gull"),
                       "--weights", weights_path, "--bitrate", "99") == 2


class TestEval:
    def test_identical_files_capped(self, tmp_path, wav_path, capsys):
        assert run_cli("eval", wav_path, wav_path) == 0
        assert "snr_db: 99.00" in capsys.readouterr().out

    def test_zero_decoded_zero_db(self, tmp_path, wav_path, capsys):
        ref = read_wav(wav_path)
        zero = str(tmp_path / "zero.wav")
        write_wav(zero, AudioBuffer(np.zeros_like(ref.samples), ref.sample_rate))
        assert run_cli("eval", wav_path, zero) == 0
        assert "snr_db: 0.00" in capsys.readouterr().out

    def test_known_noise_level(self, tmp_path, capsys):
        rng = np.random.default_rng(2)
        x = rng.standard_normal(8000) * 0.2
        noise = rng.standard_normal(8000)
        noise *= 0.1 * np.linalg.norm(x) / np.linalg.norm(noise)
        a, b = str(tmp_path / "a.wav"), str(tmp_path / "b.wav")
        write_wav(a, AudioBuffer(x, 8000))
        write_wav(b, AudioBuffer(x + noise, 8000))
        assert run_cli("eval", a, b) == 0
        out = capsys.readouterr().out
        snr = float([l for l in out.splitlines() if l.startswith("snr_db")][0].split()[-1])
        assert abs(snr - 20.0) <= 0.1

    def test_alignment_search(self):
        rng = np.random.default_rng(3)
        x = rng.standard_normal(5000)
        assert align_by_correlation(x, x[37:], max_shift=100) == 37

    def test_snr_definition(self):
        x = np.ones(100)
        assert snr_db(x, np.zeros(100)) == 0.0


class TestSubprocess:
    def test_module_entrypoint(self, tmp_path, weights_path, wav_path):
        proc = subprocess.run(
            [sys.executable, "-m", "gull.cli", "encode", wav_path,
             str(tmp_path / "sub.gull"), "--weights", weights_path,
             "--hierarchies", "1"],
            capture_output=True, text=True)
        assert proc.returncode == 0
        assert "kbps" in proc.stdout

    def test_usage_error_code(self):
        proc = subprocess.run([sys.executable, "-m", "gull.cli", "nonsense"],
                              capture_output=True, text=True)
        assert proc.returncode == 2
