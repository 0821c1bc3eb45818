import logging
from pathlib import Path
from typing import Annotated

import typer

from salsa.data.corpus import write_corpus
from salsa.data.synthetic import synthesize_corpus
from salsa.exceptions import SalsaError

logger = logging.getLogger(__name__)

app = typer.Typer()


@app.callback(invoke_without_command=True)
def main(
    ctx: typer.Context,
    out: Annotated[Path, typer.Option("--out", "-o", dir_okay=False, help="Corpus file to write")],
    n: Annotated[int, typer.Option("--n", "-n", help="Number of sentences")] = 5000,
    seed: Annotated[int, typer.Option("--seed", "-s", help="Random seed")] = 0,
) -> None:
    """Write a synthetic subject-verb-object corpus, one sentence per line."""
    try:
        write_corpus(synthesize_corpus(n, seed), out)
    except SalsaError as e:
        logger.error(f"synth failed: {e}")
        raise typer.Exit(code=e.exit_code) from e
