from datetime import datetime
from pathlib import Path
from typing import Optional

import click
import typer
from dotenv import load_dotenv
from typer.core import TyperGroup

from salsa.commands import bpe_app, evaluate_app, generate_app, synth_app, train_app
from salsa.logging_config import configure_logging


class SalsaGroup(TyperGroup):
    """Root command group whose usage errors exit with 1 instead of click's 2."""

    def make_context(self, *args, **kwargs):
        try:
            return super().make_context(*args, **kwargs)
        except click.UsageError as e:
            e.exit_code = 1
            raise

    def invoke(self, ctx):
        try:
            return super().invoke(ctx)
        except click.UsageError as e:
            e.exit_code = 1
            raise


app = typer.Typer(
    name="salsa",
    cls=SalsaGroup,
    help="Train and evaluate adversarial autoencoders for sentence generation",
)


def load_environment() -> None:
    """Load SALSA_* defaults from a .env file in the working directory, when there is one."""
    env_path = Path(".env")
    if env_path.exists():
        load_dotenv(env_path)


def get_default_log_filename() -> str:
    """Generate default log filename based on timestamp."""
    return f"salsa_{datetime.now().strftime('%Y%m%d')}.log"


@app.callback()
def main(
    ctx: typer.Context,
    log_level: str = typer.Option(
        "INFO",
        "--log-level",
        "-l",
        help="Logging level (DEBUG, INFO, WARNING, ERROR, CRITICAL)"
    ),
    log_file: Optional[str] = typer.Option(
        None,
        "--log-file",
        "-f",
        help="Custom log filename. If not provided, uses timestamp-based default"
    ),
) -> None:
    """Initialize environment and logging for every command."""
    ctx.obj = ctx.obj or {}
    load_environment()

    if log_file is None:
        log_file = get_default_log_filename()

    try:
        configure_logging(level=log_level, log_file=log_file, console=True, logger_name="salsa")
    except ValueError as e:
        typer.echo(str(e), err=True)
        raise typer.Exit(code=1) from e

    ctx.obj.update({
        "log_level": log_level,
        "log_file": log_file
    })


app.add_typer(synth_app, name="synth", help="Write a synthetic corpus")
app.add_typer(bpe_app, name="bpe", help="Train a BPE tokenizer")
app.add_typer(train_app, name="train", help="Train an AAE or ARAE model")
app.add_typer(generate_app, name="generate", help="Sample sentences from a checkpoint")
app.add_typer(evaluate_app, name="evaluate", help="Score generated sentences")
