import logging
from pathlib import Path
from typing import Annotated

import typer

from salsa.data.bpe import train_bpe
from salsa.data.corpus import read_corpus
from salsa.exceptions import SalsaError

logger = logging.getLogger(__name__)

app = typer.Typer(context_settings={"allow_interspersed_args": True})


@app.callback(invoke_without_command=True)
def main(
    ctx: typer.Context,
    corpus: Annotated[
        Path,
        typer.Argument(exists=True, dir_okay=False, resolve_path=True, help="Training corpus, one sentence per line"),
    ],
    out: Annotated[Path, typer.Option("--out", "-o", dir_okay=False, help="BPE model file to write")],
    vocab_size: Annotated[int, typer.Option("--vocab-size", "-v", help="Target vocabulary size, reserved ids included")] = 1000,
) -> None:
    """Train a BPE tokenizer on a corpus and save it."""
    try:
        bpe = train_bpe(read_corpus(corpus), vocab_size)
        bpe.save(out)
    except SalsaError as e:
        logger.error(f"bpe failed: {e}")
        raise typer.Exit(code=e.exit_code) from e
