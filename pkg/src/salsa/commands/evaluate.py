import logging
from pathlib import Path
from typing import Annotated, Optional

import typer

from salsa.data.bpe import BpeModel
from salsa.data.corpus import read_corpus
from salsa.data.sequences import encode_corpus
from salsa.exceptions import SalsaError
from salsa.metrics.bleu import bleu_tokens
from salsa.metrics.lm import LMConfig
from salsa.metrics.report import MetricReport, evaluate_generated

logger = logging.getLogger(__name__)

app = typer.Typer(context_settings={"allow_interspersed_args": True})


def evaluate_files(
    generated: Path,
    reference: Path,
    test: Path,
    bpe: BpeModel,
    lm_config: LMConfig,
    level: str = "bpe",
    n_jobs: int | None = None,
    seed: int = 0,
) -> dict[str, float]:
    """Score a generated sentence file against reference (BLEU, forward perplexity) and test (reverse perplexity) files."""
    generated_text, reference_text, test_text = read_corpus(generated), read_corpus(reference), read_corpus(test)
    logger.info(f"Evaluating {len(generated_text)} generated sentences against {len(reference_text)} references")
    return evaluate_generated(
        bleu_tokens(generated_text, bpe, level),
        bleu_tokens(reference_text, bpe, level),
        encode_corpus(generated_text, bpe, lm_config.max_len),
        encode_corpus(reference_text, bpe, lm_config.max_len),
        encode_corpus(test_text, bpe, lm_config.max_len),
        bpe.vocab_size,
        lm_config,
        n_jobs,
        seed,
    )


@app.callback(invoke_without_command=True)
def main(
    ctx: typer.Context,
    generated: Annotated[Path, typer.Argument(exists=True, dir_okay=False, help="Generated sentences")],
    reference: Annotated[Path, typer.Argument(exists=True, dir_okay=False, help="Reference (training) sentences")],
    test: Annotated[Path, typer.Argument(exists=True, dir_okay=False, help="Held-out test sentences")],
    bpe: Annotated[Path, typer.Option("--bpe", exists=True, dir_okay=False, help="BPE model file")],
    out: Annotated[Path, typer.Option("--out", "-o", dir_okay=False, help="Metric report CSV")],
    name: Annotated[Optional[str], typer.Option("--name", help="Column name in the report")] = None,
    lm_epochs: Annotated[int, typer.Option("--lm-epochs", help="Language model training epochs")] = 20,
    lm_hidden: Annotated[int, typer.Option("--lm-hidden", help="Language model LSTM width")] = 256,
    word_level: Annotated[bool, typer.Option("--word-level/--bpe-level", help="BLEU over words instead of BPE tokens")] = False,
    n_jobs: Annotated[Optional[int], typer.Option("--n-jobs", "-j", help="Self-BLEU workers (default $SALSA_N_JOBS or 1)")] = None,
    seed: Annotated[int, typer.Option("--seed", "-s", help="Language model seed")] = 0,
) -> None:
    """Compute BLEU-1..5, Self-BLEU-1..5, perplexity and reverse perplexity, and write the report."""
    try:
        lm_config = LMConfig(epochs=lm_epochs, d_hidden=lm_hidden).validate()
        scores = evaluate_files(
            generated, reference, test, BpeModel.load(bpe), lm_config, "word" if word_level else "bpe", n_jobs, seed
        )
        report = MetricReport()
        report.add_model(name or generated.stem, scores)
        report.to_csv(out)
        table = report.to_table()
        out.with_suffix(".txt").write_text(table + "\n", encoding="utf-8")
        typer.echo(table)
    except SalsaError as e:
        logger.error(f"evaluate failed: {e}")
        raise typer.Exit(code=e.exit_code) from e
