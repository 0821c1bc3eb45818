import logging
import time
from pathlib import Path

import pandas as pd

logger = logging.getLogger(__name__)

COLUMNS = ["step", "epoch", "phase", "loss", "value", "wall_time"]


class TrainLog:
    """Append-only loss log. Rows are buffered and written to CSV on :meth:`flush`.

    With ``wall_time=False`` the ``wall_time`` column is always 0.0, so repeated seeded runs
    produce byte-identical files.
    """

    def __init__(self, path: Path | None = None, wall_time: bool = True):
        self.path = Path(path) if path is not None else None
        self.wall_time = wall_time
        self._start = time.perf_counter()
        self._pending: list[dict] = []
        self.rows: list[dict] = []

    def record(self, step: int, epoch: int, phase: str, loss: str, value: float) -> None:
        row = {
            "step": step,
            "epoch": epoch,
            "phase": phase,
            "loss": loss,
            "value": float(value),
            "wall_time": time.perf_counter() - self._start if self.wall_time else 0.0,
        }
        self._pending.append(row)
        self.rows.append(row)

    def frame(self) -> pd.DataFrame:
        return pd.DataFrame(self.rows, columns=COLUMNS)

    def restart(self) -> None:
        """Forget every row and remove the CSV, so a fresh run never appends onto an old log."""
        self._pending.clear()
        self.rows.clear()
        if self.path is not None:
            self.path.unlink(missing_ok=True)

    def rewind(self, epoch: int) -> None:
        """Keep only rows logged before ``epoch``, in memory and on disk.

        Epochs after the last checkpoint may already be flushed; a resumed run logs them again.
        """
        self._pending.clear()
        if self.path is not None and self.path.exists():
            frame = pd.read_csv(self.path)
            frame = frame[frame["epoch"] < epoch]
            frame.to_csv(self.path, index=False, float_format="%.17g")
            self.rows = frame.to_dict("records")
        else:
            self.rows = [row for row in self.rows if row["epoch"] < epoch]
        logger.debug(f"Rewound loss log to {len(self.rows)} rows before epoch {epoch}")

    def flush(self) -> None:
        if self.path is None or not self._pending:
            self._pending.clear()
            return
        self.path.parent.mkdir(parents=True, exist_ok=True)
        new_file = not self.path.exists()
        pd.DataFrame(self._pending, columns=COLUMNS).to_csv(
            self.path, mode="a", header=new_file, index=False, float_format="%.17g"
        )
        logger.debug(f"Appended {len(self._pending)} rows to {self.path}")
        self._pending.clear()

    def epoch_summary(self, epoch: int) -> pd.Series:
        """Mean value per loss name over one epoch."""
        frame = self.frame()
        return frame[frame["epoch"] == epoch].groupby("loss")["value"].mean()

    @staticmethod
    def read(path: Path) -> pd.DataFrame:
        return pd.read_csv(path)


__all__ = ["COLUMNS", "TrainLog"]
