from salsa.commands.bpe import app as bpe_app
from salsa.commands.evaluate import app as evaluate_app
from salsa.commands.evaluate import evaluate_files
from salsa.commands.generate import app as generate_app
from salsa.commands.generate import checkpoint_bpe, generate_sentences
from salsa.commands.synth import app as synth_app
from salsa.commands.train import app as train_app
from salsa.commands.train import prepare_bpe, run_training

__all__ = [
    "bpe_app",
    "checkpoint_bpe",
    "evaluate_app",
    "evaluate_files",
    "generate_app",
    "generate_sentences",
    "prepare_bpe",
    "run_training",
    "synth_app",
    "train_app",
]
