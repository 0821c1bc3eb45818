import pandas as pd
import pytest
import yaml
from typer.testing import CliRunner

from salsa.cli import app
from salsa.data import read_corpus
from salsa.io import load_checkpoint

runner = CliRunner()

TOY_RUN = {
    "mode": "aae",
    "seed": 0,
    "bpe_vocab": 80,
    "max_tokens": 30,
    "d_model": 16,
    "n_heads": 4,
    "n_blocks_ae": 1,
    "n_blocks_gan": 1,
    "d_ff": 32,
    "max_len": 8,
    "d_code": 8,
    "d_noise": 5,
    "dropout_p": 0.0,
    "epochs": 1,
    "batch_size": 16,
    "prefetch_depth": 0,
    "log_wall_time": False,
}


@pytest.fixture(autouse=True)
def workspace(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    monkeypatch.setenv("SALSA_LOG_DIR", str(tmp_path / "logs"))
    return tmp_path


def invoke(*args):
    return runner.invoke(app, ["-f", "test.log", *map(str, args)], obj={})


def test_synth_writes_sentences(workspace):
    result = invoke("synth", "--n", 25, "--seed", 3, "--out", workspace / "corpus.txt")
    assert result.exit_code == 0, result.output
    assert len(read_corpus(workspace / "corpus.txt")) == 25
    assert (workspace / "logs" / "test.log").exists()


def test_invalid_log_level(workspace):
    result = runner.invoke(app, ["-l", "LOUD", "synth", "--out", str(workspace / "c.txt")], obj={})
    assert result.exit_code == 1


def test_bpe(workspace):
    invoke("synth", "--n", 30, "--out", workspace / "corpus.txt")
    result = invoke("bpe", workspace / "corpus.txt", "--vocab-size", 60, "--out", workspace / "models" / "bpe.txt")
    assert result.exit_code == 0, result.output
    assert (workspace / "models" / "bpe.txt").exists()

    too_small = invoke("bpe", workspace / "corpus.txt", "--vocab-size", 5, "--out", workspace / "small.txt")
    assert too_small.exit_code == 1


def test_missing_corpus_is_a_usage_error(workspace):
    result = invoke("bpe", workspace / "nope.txt", "--out", workspace / "bpe.txt")
    assert result.exit_code == 1


@pytest.fixture
def trained_run(workspace):
    invoke("synth", "--n", 40, "--out", workspace / "corpus.txt")
    config = workspace / "run.yaml"
    config.write_text(yaml.safe_dump({**TOY_RUN, "corpus": "corpus.txt", "checkpoint_dir": "run"}), encoding="utf-8")
    result = invoke("train", "--config", config)
    assert result.exit_code == 0, result.output
    return workspace / "run"


def test_train_writes_checkpoints_and_log(trained_run):
    assert (trained_run / "final.ckpt").exists()
    assert (trained_run / "epoch-000001.ckpt").exists()
    assert (trained_run / "bpe.txt").exists()
    ckpt = load_checkpoint(trained_run / "final.ckpt")
    assert ckpt.epoch == 1 and ckpt.arch.d_model == 16
    assert ckpt.run["vocab_size"] == ckpt.arch.vocab_size
    log = pd.read_csv(trained_run / "train_log.csv")
    assert {"ae", "discriminator", "encoder"} <= set(log["phase"])


def test_train_without_corpus_fails(workspace):
    config = workspace / "run.yaml"
    config.write_text(yaml.safe_dump(TOY_RUN), encoding="utf-8")
    assert invoke("train", "--config", config).exit_code == 1


def test_train_rejects_unknown_keys(workspace):
    config = workspace / "run.yaml"
    config.write_text(yaml.safe_dump({**TOY_RUN, "epochz": 2}), encoding="utf-8")
    assert invoke("train", "--config", config).exit_code == 1


def test_generate(trained_run, workspace):
    final = trained_run / "final.ckpt"
    empty = invoke("generate", final, "--n", 0, "--out", workspace / "none.txt")
    assert empty.exit_code == 0, empty.output
    assert (workspace / "none.txt").read_text(encoding="utf-8").strip() == ""

    for name in ("a.txt", "b.txt"):
        result = invoke("generate", final, "--n", 4, "--seed", 7, "--out", workspace / name)
        assert result.exit_code == 0, result.output
    assert (workspace / "a.txt").read_bytes() == (workspace / "b.txt").read_bytes()

    bad = invoke("generate", final, "--strategy", "beam", "--out", workspace / "c.txt")
    assert bad.exit_code == 1


def test_generate_rejects_corrupt_checkpoint(workspace):
    (workspace / "junk.ckpt").write_bytes(b"not a checkpoint at all, just bytes" * 3)
    result = invoke("generate", workspace / "junk.ckpt", "--bpe", workspace / "junk.ckpt", "--out", workspace / "o.txt")
    assert result.exit_code == 2


def test_evaluate(workspace):
    invoke("synth", "--n", 30, "--seed", 1, "--out", workspace / "train.txt")
    invoke("synth", "--n", 10, "--seed", 2, "--out", workspace / "test.txt")
    invoke("synth", "--n", 10, "--seed", 3, "--out", workspace / "generated.txt")
    invoke("bpe", workspace / "train.txt", "--vocab-size", 60, "--out", workspace / "bpe.txt")
    result = invoke(
        "evaluate", workspace / "generated.txt", workspace / "train.txt", workspace / "test.txt",
        "--bpe", workspace / "bpe.txt", "--out", workspace / "report.csv",
        "--lm-epochs", 1, "--lm-hidden", 8, "--n-jobs", 1, "--name", "synthetic",
    )
    assert result.exit_code == 0, result.output
    report = pd.read_csv(workspace / "report.csv", index_col="metric")
    assert list(report.columns) == ["synthetic"]
    assert 0.0 <= report.loc["BLEU-2", "synthetic"] <= 1.0
    assert (workspace / "report.txt").exists()


def test_evaluate_missing_file(workspace):
    result = invoke("evaluate", workspace / "a.txt", workspace / "b.txt", workspace / "c.txt",
                    "--bpe", workspace / "bpe.txt", "--out", workspace / "r.csv")
    assert result.exit_code == 1


@pytest.mark.parametrize(
    "args",
    [
        ["train", "--bogus"],
        ["synth", "--n", "ten", "--out", "c.txt"],
        ["synth"],
        ["no-such-command"],
        [],
    ],
)
def test_usage_errors_exit_with_one(args):
    result = invoke(*args)
    assert result.exit_code == 1, result.output
