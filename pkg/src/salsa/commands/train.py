import logging
from dataclasses import replace
from pathlib import Path
from typing import Annotated, Optional

import typer

from salsa.autograd import Rng
from salsa.config import RunConfig, load_run_config
from salsa.data.bpe import BpeModel, train_bpe
from salsa.data.corpus import read_corpus
from salsa.data.sequences import encode_corpus, filter_corpus
from salsa.exceptions import ConfigError, DataError, SalsaError
from salsa.io.checkpoint import latest_checkpoint
from salsa.models.salsa import SalsaModel
from salsa.training.loops import Trainer

logger = logging.getLogger(__name__)

app = typer.Typer()


def prepare_bpe(cfg: RunConfig, sentences: list[str]) -> tuple[BpeModel, Path]:
    """Load the configured BPE model, or train one on the corpus and store it beside the checkpoints."""
    if cfg.bpe is not None and cfg.bpe.exists():
        return BpeModel.load(cfg.bpe), cfg.bpe.resolve()
    path = cfg.bpe or cfg.checkpoint_dir / "bpe.txt"
    bpe = train_bpe(sentences, cfg.bpe_vocab)
    bpe.save(path)
    return bpe, path.resolve()


def run_training(cfg: RunConfig, resume: bool = False, progress: bool = True) -> Trainer:
    """Read the corpus, tokenize, build the model and train it as ``cfg`` describes.

    :raises ConfigError:
        If no corpus is configured.

    :raises DataError:
        If no sentence survives the length filter.
    """
    if cfg.corpus is None:
        raise ConfigError("no corpus configured; set 'corpus' in the run file or pass --corpus")
    sentences = read_corpus(cfg.corpus)
    bpe, bpe_path = prepare_bpe(cfg, sentences)
    kept = filter_corpus(sentences, bpe, cfg.max_tokens)
    if not kept:
        raise DataError(f"no sentence of {cfg.corpus} has at most {cfg.max_tokens} BPE tokens")
    arch = cfg.arch.with_vocab(bpe.vocab_size)
    corpus = encode_corpus(kept, bpe, arch.max_len)

    model = SalsaModel.build(arch, cfg.train.mode, Rng(cfg.train.seed).split(1)[0])
    run = {**cfg.to_dict(), "bpe": str(bpe_path), "vocab_size": bpe.vocab_size}
    trainer = Trainer(model, cfg.train, out_dir=cfg.checkpoint_dir, run_config=run, bpe=bpe)
    if resume:
        latest = latest_checkpoint(cfg.checkpoint_dir)
        if latest is None:
            logger.warning(f"No checkpoint in {cfg.checkpoint_dir}; starting from scratch")
        else:
            trainer.resume(latest)
    trainer.fit(corpus, progress=progress)
    return trainer


@app.callback(invoke_without_command=True)
def main(
    ctx: typer.Context,
    config: Annotated[
        Optional[Path],
        typer.Option("--config", "-c", exists=True, dir_okay=False, resolve_path=True, help="Flat YAML run configuration"),
    ] = None,
    preset: Annotated[Optional[str], typer.Option("--preset", "-p", help="Preset: desk or paper")] = None,
    seed: Annotated[Optional[int], typer.Option("--seed", "-s", help="Override the configured seed")] = None,
    corpus: Annotated[Optional[Path], typer.Option("--corpus", help="Override the configured corpus")] = None,
    out: Annotated[Optional[Path], typer.Option("--out", "-o", help="Override the checkpoint directory")] = None,
    resume: Annotated[bool, typer.Option("--resume/--no-resume", help="Continue from the newest epoch checkpoint")] = False,
) -> None:
    """Train an AAE or ARAE model and write checkpoints plus a loss log."""
    try:
        cfg = load_run_config(config, preset, seed)
        overrides = {k: v for k, v in (("corpus", corpus), ("checkpoint_dir", out)) if v is not None}
        if overrides:
            cfg = replace(cfg, **overrides).validate()
        trainer = run_training(cfg, resume=resume)
        typer.echo(trainer.log.epoch_summary(trainer.epoch - 1).to_string())
    except SalsaError as e:
        logger.error(f"train failed: {e}")
        raise typer.Exit(code=e.exit_code) from e
