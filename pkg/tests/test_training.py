from dataclasses import replace

import numpy as np
import pandas as pd
import pytest

from salsa.autograd import Rng
from salsa.config import build_run_config
from salsa.data import TokenBatch, TokenSequence, encode_corpus, synthesize_corpus, train_bpe
from salsa.exceptions import ConfigError, TrainingDivergenceError
from salsa.io import latest_checkpoint, load_checkpoint
from salsa.models import Mode, SalsaModel, reconstruction_accuracy
from salsa.nn import ParameterStore
from salsa.training import Adam, TrainConfig, TrainLog, Trainer, adam_step, clip_grad_norm, loops, train_aae, train_arae


# -- optimizer -----------------------------------------------------------------------------------

def test_adam_moves_by_learning_rate_under_constant_gradient():
    data, m, v = np.array([1.0]), np.zeros(1), np.zeros(1)
    for t in (1, 2, 3):
        data, m, v = adam_step(data, np.array([0.5]), m, v, t, lr=0.1)
    assert data[0] == pytest.approx(0.7, abs=1e-6)


def test_adam_matches_hand_unrolled_update():
    store = ParameterStore()
    store.add("w", np.array([1.0, -2.0]))
    opt = Adam(store, ["w"], lr=0.01, beta1=0.5, beta2=0.9, eps=1e-8)
    grads = [np.array([0.3, -0.1]), np.array([-0.2, 0.4])]
    m = v = np.zeros(2)
    expected = np.array([1.0, -2.0])
    for t, g in enumerate(grads, start=1):
        store["w"].grad = g.copy()
        opt.step()
        m = 0.5 * m + 0.5 * g
        v = 0.9 * v + (1 - 0.9) * g * g
        expected = expected - 0.01 * (m / (1 - 0.5**t)) / (np.sqrt(v / (1 - 0.9**t)) + 1e-8)
    np.testing.assert_allclose(store["w"].data, expected, rtol=0, atol=1e-15)
    assert opt.steps == {"w": 2}


def test_adam_skips_missing_gradients_and_rejects_non_finite():
    store = ParameterStore()
    store.add("a", np.ones(2))
    store.add("b", np.ones(2))
    opt = Adam(store, ["a", "b"], lr=0.1)
    store["a"].grad = np.ones(2)
    opt.step()
    assert opt.steps == {"a": 1, "b": 0}
    np.testing.assert_array_equal(store["b"].data, np.ones(2))

    before = store["a"].data.copy()
    store["a"].grad = np.ones(2)
    store["b"].grad = np.array([np.nan, 0.0])
    with pytest.raises(TrainingDivergenceError) as info:
        opt.step()
    assert info.value.name == "b"
    np.testing.assert_array_equal(store["a"].data, before)


def test_clip_grad_norm():
    store = ParameterStore()
    store.add("a", np.zeros(2))
    store.add("b", np.zeros(1))
    store["a"].grad = np.array([3.0, 0.0])
    store["b"].grad = np.array([4.0])
    assert clip_grad_norm(store, ["a", "b"], 1.0) == pytest.approx(5.0)
    np.testing.assert_allclose(store["a"].grad, [0.6, 0.0])
    np.testing.assert_allclose(store["b"].grad, [0.8])
    assert clip_grad_norm(store, ["a", "b"], 10.0) == pytest.approx(1.0)


# -- loss log ------------------------------------------------------------------------------------

def test_train_log_appends_and_summarizes(tmp_path):
    log = TrainLog(tmp_path / "log.csv", wall_time=False)
    log.record(0, 0, "ae", "reconstruction", 2.0)
    log.record(1, 0, "ae", "reconstruction", 4.0)
    log.flush()
    log.record(2, 1, "discriminator", "discriminator", 1.0)
    log.flush()
    frame = TrainLog.read(tmp_path / "log.csv")
    assert list(frame.columns) == ["step", "epoch", "phase", "loss", "value", "wall_time"]
    assert len(frame) == 3 and (frame["wall_time"] == 0.0).all()
    assert log.epoch_summary(0)["reconstruction"] == pytest.approx(3.0)
    assert TrainLog().frame().empty


# -- trainer -------------------------------------------------------------------------------------

def toy_corpus(arch, n=8, seed=0):
    rng = Rng(seed)
    lengths = [int(rng.integers(2, arch.max_len)) for _ in range(n)]
    return [TokenSequence.from_tokens(rng.integers(4, arch.vocab_size, k).tolist(), arch.max_len) for k in lengths]


def record_steps(trainer, monkeypatch):
    calls = []
    for group, opt in trainer.optimizers.items():
        original = opt.step

        def step(names=None, group=group, original=original):
            calls.append((group, list(names)))
            original(names)

        monkeypatch.setattr(opt, "step", step)
    return calls


def test_aae_phase_ownership(aae_model, toy_batch, monkeypatch):
    trainer = Trainer(aae_model, TrainConfig(mode=Mode.AAE, prefetch_depth=0))
    calls = record_steps(trainer, monkeypatch)
    trainer.aae_step(toy_batch)
    assert [group for group, _ in calls] == ["ae", "gan", "ae"]
    ae, disc, enc = (names for _, names in calls)
    assert all(n.startswith(("embedding.", "encoder.", "decoder.")) for n in ae)
    assert all(n.startswith("discriminator.") for n in disc)
    assert all(n.startswith(("embedding.", "encoder.")) for n in enc) and any(n.startswith("encoder.") for n in enc)
    assert set(trainer.log.frame()["loss"]) == {"reconstruction", "discriminator", "encoder_adversarial"}


def test_aae_without_adversarial_weight_skips_encoder_phase(aae_model, toy_batch, monkeypatch):
    trainer = Trainer(aae_model, TrainConfig(mode=Mode.AAE, lam=0.0))
    calls = record_steps(trainer, monkeypatch)
    trainer.aae_step(toy_batch)
    assert [group for group, _ in calls] == ["ae", "gan"]


def test_arae_phase_ownership(arae_model, toy_batch, monkeypatch):
    trainer = Trainer(arae_model, TrainConfig(mode=Mode.ARAE, n_critic=3))
    calls = record_steps(trainer, monkeypatch)
    before = arae_model.store.snapshot()
    trainer.arae_step(toy_batch)
    assert [group for group, _ in calls] == ["ae", "gan", "gan", "gan", "ae", "gan"]
    assert all(n.startswith("discriminator.") for _, names in calls[1:4] for n in names)
    assert all(n.startswith("generator.") for n in calls[5][1])
    after = arae_model.store.snapshot()
    assert not np.array_equal(before["generator.out.bias"], after["generator.out.bias"])
    assert not np.array_equal(before["decoder.out.bias"], after["decoder.out.bias"])


def test_trainer_rejects_mode_mismatch(aae_model):
    with pytest.raises(ConfigError):
        Trainer(aae_model, TrainConfig(mode=Mode.ARAE))
    with pytest.raises(ConfigError):
        train_arae(TrainConfig(mode=Mode.AAE), [], aae_model)


def test_non_finite_loss_aborts_with_diagnostic_checkpoint(aae_model, toy_batch, tmp_path):
    trainer = Trainer(aae_model, TrainConfig(mode=Mode.AAE), out_dir=tmp_path)
    aae_model.store["decoder.out.bias"].data[:] = np.nan
    with pytest.raises(TrainingDivergenceError) as info:
        trainer.aae_step(toy_batch)
    assert info.value.name == "reconstruction"
    assert (tmp_path / "diverged.ckpt").exists()



def test_non_finite_gradient_writes_diverged_checkpoint(aae_model, toy_batch, tmp_path, monkeypatch):
    trainer = Trainer(aae_model, TrainConfig(mode=Mode.AAE), out_dir=tmp_path)
    before = aae_model.store.snapshot()

    def poison(store, names, max_norm):
        store[names[0]].grad[...] = np.inf

    monkeypatch.setattr(loops, "clip_grad_norm", poison)
    with pytest.raises(TrainingDivergenceError):
        trainer.aae_step(toy_batch)
    assert (tmp_path / "diverged.ckpt").exists()
    saved = load_checkpoint(tmp_path / "diverged.ckpt")
    for name, value in before.items():
        assert np.array_equal(saved.params[name], value), name

@pytest.mark.parametrize("mode", [Mode.AAE, Mode.ARAE])
def test_resume_reproduces_uninterrupted_run(toy_arch, mode, tmp_path):
    arch = replace(toy_arch, dropout_p=0.1)
    corpus = toy_corpus(arch)
    config = TrainConfig(mode=mode, epochs=2, batch_size=4, n_critic=2, seed=3, log_wall_time=False)

    straight = SalsaModel.build(arch, mode, Rng(1))
    Trainer(straight, config, out_dir=tmp_path / "a").fit(corpus, progress=False)

    first = SalsaModel.build(arch, mode, Rng(1))
    Trainer(first, config, out_dir=tmp_path / "b").fit(corpus, epochs=1, progress=False)
    resumed = SalsaModel.build(arch, mode, Rng(1))
    trainer = Trainer(resumed, config, out_dir=tmp_path / "b")
    trainer.resume(latest_checkpoint(tmp_path / "b"))
    assert trainer.epoch == 1
    trainer.fit(corpus, progress=False)

    for name in straight.store.names():
        assert np.array_equal(straight.store[name].data, resumed.store[name].data), name
    assert (tmp_path / "a" / "train_log.csv").read_bytes() == (tmp_path / "b" / "train_log.csv").read_bytes()
    assert load_checkpoint(tmp_path / "a" / "final.ckpt").step == trainer.step


@pytest.mark.parametrize("mode", [Mode.AAE, Mode.ARAE])
def test_resume_after_interruption_between_checkpoints(toy_arch, mode, tmp_path):
    arch = replace(toy_arch, dropout_p=0.1)
    corpus = toy_corpus(arch)
    config = TrainConfig(mode=mode, epochs=4, batch_size=4, n_critic=2, seed=5, checkpoint_every=2, log_wall_time=False)

    straight = SalsaModel.build(arch, mode, Rng(1))
    Trainer(straight, config, out_dir=tmp_path / "a").fit(corpus, progress=False)

    # stopped after epoch 3; the newest epoch checkpoint is epoch 2
    interrupted = SalsaModel.build(arch, mode, Rng(1))
    Trainer(interrupted, config, out_dir=tmp_path / "b").fit(corpus, epochs=3, progress=False)
    assert latest_checkpoint(tmp_path / "b").name == "epoch-000002.ckpt"

    resumed = SalsaModel.build(arch, mode, Rng(1))
    trainer = Trainer(resumed, config, out_dir=tmp_path / "b")
    trainer.resume(latest_checkpoint(tmp_path / "b"))
    assert sorted(trainer.log.frame()["epoch"].unique()) == [0, 1]
    trainer.fit(corpus, progress=False)

    for name in straight.store.names():
        assert np.array_equal(straight.store[name].data, resumed.store[name].data), name
    a = pd.read_csv(tmp_path / "a" / "train_log.csv")
    b = pd.read_csv(tmp_path / "b" / "train_log.csv")
    assert len(a) == len(b) == len(trainer.log.rows)
    assert (tmp_path / "a" / "train_log.csv").read_bytes() == (tmp_path / "b" / "train_log.csv").read_bytes()


def test_fresh_run_replaces_old_log(aae_model, toy_arch, tmp_path):
    corpus = toy_corpus(toy_arch)
    config = TrainConfig(mode=Mode.AAE, epochs=1, batch_size=4, log_wall_time=False)
    Trainer(aae_model, config, out_dir=tmp_path).fit(corpus, progress=False)
    first = (tmp_path / "train_log.csv").read_bytes()
    Trainer(SalsaModel.build(toy_arch, Mode.AAE, Rng(1)), config, out_dir=tmp_path).fit(corpus, progress=False)
    assert (tmp_path / "train_log.csv").read_bytes() == first


def test_log_rewind_keeps_earlier_epochs(tmp_path):
    log = TrainLog(tmp_path / "log.csv", wall_time=False)
    for epoch in range(3):
        log.record(epoch, epoch, "ae", "reconstruction", 0.5 + epoch)
    log.flush()
    log.rewind(1)
    assert [row["epoch"] for row in log.rows] == [0]
    assert pd.read_csv(tmp_path / "log.csv")["epoch"].tolist() == [0]
    log.restart()
    assert log.rows == [] and not (tmp_path / "log.csv").exists()


def test_fit_writes_schedule(aae_model, tmp_path):
    corpus = toy_corpus(aae_model.arch)
    config = TrainConfig(mode=Mode.AAE, epochs=3, batch_size=4, checkpoint_every=2)
    model, log = train_aae(config, corpus, aae_model, out_dir=tmp_path, progress=False)
    assert sorted(p.name for p in tmp_path.glob("*.ckpt")) == ["epoch-000002.ckpt", "final.ckpt"]
    frame = pd.read_csv(tmp_path / "train_log.csv")
    assert sorted(frame["epoch"].unique()) == [0, 1, 2]
    assert set(frame["phase"]) == {"ae", "discriminator", "encoder", "eval"}
    assert model is aae_model and len(log.rows) == len(frame)


def test_metric_hook_logs_self_bleu(aae_model, tiny_bpe, tmp_path):
    arch = aae_model.arch.with_vocab(tiny_bpe.vocab_size)
    model = SalsaModel.build(arch, Mode.AAE, Rng(0))
    corpus = encode_corpus(["the cat sat", "a dog ran"], tiny_bpe, arch.max_len)
    config = TrainConfig(mode=Mode.AAE, epochs=1, batch_size=2, metric_hook=True, metric_samples=6)
    trainer = Trainer(model, config, bpe=tiny_bpe)
    trainer.fit(corpus, progress=False)
    frame = trainer.log.frame()
    metric = frame[frame["phase"] == "metric"]
    assert set(metric["loss"]) <= {"self_bleu_2"}
    assert metric["epoch"].tolist() in ([], [0])
    assert ((metric["value"] >= 0.0) & (metric["value"] <= 1.0)).all()


@pytest.mark.slow
@pytest.mark.parametrize("mode", [Mode.AAE, Mode.ARAE])
def test_overfit_small_synthetic_corpus(mode):
    sentences = synthesize_corpus(64, seed=0)
    bpe = train_bpe(sentences, 200)
    run = build_run_config({"mode": mode.value, "epochs": 300, "batch_size": 32, "seed": 0}, preset="desk")
    arch = run.arch.with_vocab(bpe.vocab_size)
    corpus = encode_corpus(sentences, bpe, arch.max_len)
    model = SalsaModel.build(arch, mode, Rng(0))
    trainer = Trainer(model, run.train)
    best = 0.0
    for epoch in range(1, 301):
        trainer.fit(corpus, epochs=epoch, progress=False)
        best = max(best, reconstruction_accuracy(model, [TokenBatch.stack(corpus)]))
        if best >= 0.99:
            break
    assert best >= 0.99
    assert np.isfinite(trainer.log.frame()["value"]).all()
