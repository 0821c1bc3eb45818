import logging
from pathlib import Path
from typing import Annotated, Optional

import typer

from salsa.autograd import Rng
from salsa.data.bpe import BpeModel
from salsa.data.corpus import write_corpus
from salsa.exceptions import ConfigError, DataError, SalsaError
from salsa.io.checkpoint import Checkpoint, load_checkpoint
from salsa.models.salsa import SamplingStrategy, decode_texts

logger = logging.getLogger(__name__)

app = typer.Typer(context_settings={"allow_interspersed_args": True})


def checkpoint_bpe(ckpt: Checkpoint, override: Path | None = None) -> BpeModel:
    """The BPE model a checkpoint was trained with, unless ``override`` names another."""
    path = override or ckpt.run.get("bpe")
    if path is None:
        raise DataError("checkpoint does not record its BPE model; pass --bpe")
    bpe = BpeModel.load(Path(path))
    if bpe.vocab_size != ckpt.arch.vocab_size:
        raise DataError(f"BPE model {path} has {bpe.vocab_size} symbols, checkpoint expects {ckpt.arch.vocab_size}")
    return bpe


def generate_sentences(ckpt: Checkpoint, bpe: BpeModel, n: int, strategy: SamplingStrategy, seed: int) -> list[str]:
    if n < 0:
        raise ConfigError(f"cannot generate {n} sentences")
    model = ckpt.build_model()
    sequences = model.generate(n, Rng(seed), strategy)
    return decode_texts(sequences, bpe)


@app.callback(invoke_without_command=True)
def main(
    ctx: typer.Context,
    checkpoint: Annotated[Path, typer.Argument(exists=True, dir_okay=False, resolve_path=True, help="Trained checkpoint")],
    out: Annotated[Path, typer.Option("--out", "-o", dir_okay=False, help="File to write sentences to")],
    n: Annotated[int, typer.Option("--n", "-n", help="Number of sentences")] = 100,
    strategy: Annotated[str, typer.Option("--strategy", help="'greedy' or 'temp=<τ>'")] = "greedy",
    seed: Annotated[int, typer.Option("--seed", "-s", help="Random seed for prior and sampling")] = 0,
    bpe: Annotated[
        Optional[Path], typer.Option("--bpe", exists=True, dir_okay=False, help="BPE model, if not the one recorded")
    ] = None,
) -> None:
    """Sample codes from the prior or generator and decode them into sentences."""
    try:
        ckpt = load_checkpoint(checkpoint)
        sentences = generate_sentences(ckpt, checkpoint_bpe(ckpt, bpe), n, SamplingStrategy.parse(strategy), seed)
        write_corpus(sentences, out)
        logger.info(f"Wrote {len(sentences)} {ckpt.mode.value.upper()} sentences to {out}")
    except SalsaError as e:
        logger.error(f"generate failed: {e}")
        raise typer.Exit(code=e.exit_code) from e
