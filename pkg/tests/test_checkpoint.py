import hashlib
import struct
import warnings

import numpy as np
import pytest

from salsa.autograd import Rng
from salsa.exceptions import DataError, DimensionError, IntegrityError
from salsa.io import latest_checkpoint, load_checkpoint, save_checkpoint
from salsa.io.checkpoint import MAGIC
from salsa.models import Mode, SalsaModel
from salsa.training import Adam, TrainConfig, Trainer


@pytest.fixture
def trained(arae_model, toy_batch):
    trainer = Trainer(arae_model, TrainConfig(mode=Mode.ARAE, n_critic=1))
    trainer.arae_step(toy_batch)
    trainer.step, trainer.epoch = 1, 1
    return trainer


def test_round_trip_restores_every_tensor(trained, tmp_path):
    path = trained.save(tmp_path / "run" / "epoch-000001.ckpt")
    ckpt = load_checkpoint(path)
    assert ckpt.mode is Mode.ARAE and ckpt.arch == trained.model.arch
    assert ckpt.step == 1 and ckpt.epoch == 1
    assert ckpt.train["n_critic"] == 1
    model = ckpt.build_model()
    for name in trained.model.store.names():
        assert np.array_equal(model.store[name].data, trained.model.store[name].data), name
    for name, state in trained.model.store.spectral_items():
        restored = model.store.spectral_state(name)
        assert np.array_equal(restored.u, state.u) and restored.sigma == state.sigma
    for group, opt in trained.optimizers.items():
        assert ckpt.adam[group]["steps"] == opt.steps
        for name in opt.names:
            assert np.array_equal(ckpt.adam[group]["m"][name], opt.m[name])
    assert Rng.from_state(ckpt.rng_state).random(3).tolist() == Rng.from_state(trained.rng.get_state()).random(3).tolist()


def test_identical_state_gives_identical_bytes(trained, tmp_path):
    a = trained.save(tmp_path / "a.ckpt").read_bytes()
    b = trained.save(tmp_path / "b.ckpt").read_bytes()
    assert a == b
    assert a[:8] == MAGIC and struct.unpack("<I", a[8:12])[0] == 1
    assert hashlib.sha256(a[:-32]).digest() == a[-32:]


def test_corruption_is_detected(trained, tmp_path):
    raw = bytearray(trained.save(tmp_path / "ok.ckpt").read_bytes())
    flipped = bytearray(raw)
    flipped[len(raw) // 2] ^= 0xFF
    (tmp_path / "flipped.ckpt").write_bytes(bytes(flipped))
    with pytest.raises(IntegrityError, match="checksum"):
        load_checkpoint(tmp_path / "flipped.ckpt")

    (tmp_path / "magic.ckpt").write_bytes(b"NOTSALSA" + bytes(raw[8:]))
    with pytest.raises(IntegrityError):
        load_checkpoint(tmp_path / "magic.ckpt")

    (tmp_path / "short.ckpt").write_bytes(bytes(raw[:10]))
    with pytest.raises(IntegrityError):
        load_checkpoint(tmp_path / "short.ckpt")


def test_unknown_version_is_rejected(trained, tmp_path):
    raw = bytearray(trained.save(tmp_path / "ok.ckpt").read_bytes())
    body = bytes(raw[:8]) + struct.pack("<I", 2) + bytes(raw[12:-32])
    (tmp_path / "v2.ckpt").write_bytes(body + hashlib.sha256(body).digest())
    with pytest.raises(IntegrityError, match="version"):
        load_checkpoint(tmp_path / "v2.ckpt")


def test_truncated_body_with_valid_checksum_is_rejected(trained, tmp_path):
    raw = trained.save(tmp_path / "ok.ckpt").read_bytes()
    body = raw[:-32][:-8]
    (tmp_path / "cut.ckpt").write_bytes(body + hashlib.sha256(body).digest())
    with pytest.raises(IntegrityError, match="truncated"):
        load_checkpoint(tmp_path / "cut.ckpt")


def test_missing_file_is_a_data_error(tmp_path):
    with pytest.raises(DataError):
        load_checkpoint(tmp_path / "nope.ckpt")


def test_shape_mismatch_on_restore(aae_model, tmp_path, toy_arch):
    path = save_checkpoint(tmp_path / "small.ckpt", aae_model)
    ckpt = load_checkpoint(path)
    bigger = SalsaModel.build(toy_arch.with_vocab(20), Mode.AAE, Rng(0))
    with pytest.raises(DimensionError):
        bigger.store.load(ckpt.params)


def test_latest_checkpoint_ignores_final(tmp_path, aae_model):
    assert latest_checkpoint(tmp_path) is None
    for name in ("epoch-000002.ckpt", "epoch-000010.ckpt", "final.ckpt"):
        save_checkpoint(tmp_path / name, aae_model)
    assert latest_checkpoint(tmp_path).name == "epoch-000010.ckpt"


def test_optimizer_state_round_trip(aae_model, tmp_path):
    opt = Adam(aae_model.store, aae_model.phase_names("ae"), lr=0.1)
    opt.steps[opt.names[0]] = 7
    opt.m[opt.names[0]] += 0.5
    ckpt = load_checkpoint(save_checkpoint(tmp_path / "opt.ckpt", aae_model, optimizers={"ae": opt}))
    fresh = Adam(aae_model.store, aae_model.phase_names("ae"), lr=0.1)
    fresh.load_state_dict(ckpt.adam["ae"])
    assert fresh.steps == opt.steps
    np.testing.assert_array_equal(fresh.m[opt.names[0]], opt.m[opt.names[0]])


def test_load_emits_no_warnings(trained, tmp_path):
    path = trained.save(tmp_path / "quiet.ckpt")
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        ckpt = load_checkpoint(path)
    assert all(isinstance(sigma, float) for _, sigma in ckpt.specnorm.values())
