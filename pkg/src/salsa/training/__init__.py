from salsa.training.config import TrainConfig
from salsa.training.log import TrainLog
from salsa.training.loops import Trainer, train_aae, train_arae
from salsa.training.optim import Adam, adam_step, clip_grad_norm

__all__ = ["Adam", "TrainConfig", "TrainLog", "Trainer", "adam_step", "clip_grad_norm", "train_aae", "train_arae"]
