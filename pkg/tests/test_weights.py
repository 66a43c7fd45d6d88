import numpy as np
import pytest

from gull import config as cfg
from gull.errors import (WeightsFormatError, WeightsShapeError,
                         WeightsVersionError)
from gull.weights import (ParamStore, expected_shapes, load, random_param_store,
                          save, validate_shapes)


def small_store(seed=0):
    rng = np.random.default_rng(seed)
    store = ParamStore(metadata={"model_type": "speech", "rmvn_eps": 1e-5})
    store.add("a.weight", rng.standard_normal((3, 4)).astype(np.float32))
    store.add("a.bias", rng.standard_normal(3).astype(np.float32))
    store.add("scalarish", np.float32(2.5).reshape(()))
    return store


class TestRoundTrip:
    def test_empty_store(self):
        store = ParamStore(metadata={"note": "empty"})
        back = load(save(store))
        assert back.tensors == {}
        assert back.metadata == {"note": "empty"}

    def test_random_store_bit_exact(self):
        store = small_store()
        back = load(save(store))
        assert list(back.tensors) == list(store.tensors)
        for name in store.tensors:
            assert np.array_equal(back.tensors[name], store.tensors[name])
            assert back.tensors[name].dtype == np.float32
        assert back.metadata == store.metadata

    def test_save_deterministic(self):
        assert save(small_store()) == save(small_store())

    def test_full_config_store_roundtrip(self, tiny_config, tiny_store):
        back = load(save(tiny_store))
        assert validate_shapes(back, tiny_config).ok


class TestLoadValidation:
    def test_truncated(self):
        data = save(small_store())
        with pytest.raises(WeightsFormatError):
            load(data[:-3])

    def test_bad_magic(self):
        data = save(small_store())
        with pytest.raises(WeightsFormatError):
            load(b"NOPE" + data[4:])

    def test_bad_version(self):
        data = bytearray(save(small_store()))
        data[4] = 99
        with pytest.raises(WeightsVersionError):
            load(bytes(data))

    def test_trailing_garbage(self):
        with pytest.raises(WeightsFormatError):
            load(save(small_store()) + b"\x00")

    def test_corrupt_metadata(self):
        store = small_store()
        data = bytearray(save(store))
        # metadata begins at offset 9; smash its first byte
        data[9] = 0xFF
        with pytest.raises(WeightsFormatError):
            load(bytes(data))

    def test_duplicate_name_rejected(self):
        store = small_store()
        with pytest.raises(WeightsShapeError):
            store.add("a.weight", np.zeros(2, dtype=np.float32))


class TestValidateShapes:
    def test_complete_store_ok(self, tiny_config, tiny_store):
        report = validate_shapes(tiny_store, tiny_config)
        assert report.ok
        assert report.missing == [] and report.extra == []

    def test_missing_tensor_named(self, tiny_config, tiny_store):
        broken = ParamStore(dict(tiny_store.tensors), dict(tiny_store.metadata))
        del broken.tensors["vq.band0.codebook"]
        report = validate_shapes(broken, tiny_config)
        assert report.missing == ["vq.band0.codebook"]

    def test_extra_tensor_named(self, tiny_config, tiny_store):
        extra = ParamStore(dict(tiny_store.tensors), dict(tiny_store.metadata))
        extra.add("mystery.blob", np.zeros(3, dtype=np.float32))
        report = validate_shapes(extra, tiny_config)
        assert report.extra == ["mystery.blob"]

    def test_shape_mismatch_named(self, tiny_config, tiny_store):
        broken = ParamStore(dict(tiny_store.tensors), dict(tiny_store.metadata))
        broken.tensors["enc.block0.time.proj.bias"] = np.zeros(7, dtype=np.float32)
        report = validate_shapes(broken, tiny_config)
        assert any("enc.block0.time.proj.bias" in m for m in report.mismatched)

    def test_non_unit_codebook_flagged(self, tiny_config, tiny_store):
        broken = ParamStore(dict(tiny_store.tensors), dict(tiny_store.metadata))
        bad = broken.tensors["vq.band0.codebook"].copy()
        bad[5] *= 2.0
        broken.tensors["vq.band0.codebook"] = bad
        report = validate_shapes(broken, tiny_config)
        assert any("unit-norm" in v for v in report.invariant_violations)

    def test_nonzero_rotation_row0_flagged(self, tiny_config, tiny_store):
        broken = ParamStore(dict(tiny_store.tensors), dict(tiny_store.metadata))
        bad = broken.tensors["vq.band0.h2.rotations"].copy()
        bad[0] = 1.0
        broken.tensors["vq.band0.h2.rotations"] = bad
        report = validate_shapes(broken, tiny_config)
        assert any("row 0" in v for v in report.invariant_violations)


class TestRandomStore:
    def test_paper_variant_contract(self, speech_config):
        store = random_param_store(speech_config, seed=1)
        assert validate_shapes(store, speech_config).ok
        assert set(store.tensors) >= set(expected_shapes(speech_config))

    def test_metadata_fields(self, tiny_config, tiny_store):
        assert tiny_store.metadata["model_type"] == "speech"
        assert tiny_store.metadata["config_hash"] == cfg.config_hash(tiny_config)
        assert "rmvn_eps" in tiny_store.metadata
        assert "ema_decay" in tiny_store.metadata
