"""
Loss history kept during training and persisted as CSV.
"""

import logging
from pathlib import Path
from typing import Dict, List, Union

import numpy as np
import pandas as pd

from app.core.errors import EnsembleFormatError
from app.models.train_config import LossBundle

logger = logging.getLogger(__name__)

HISTORY_COLUMNS = [
    "step",
    "l_si",
    "l_s2",
    "l_skew",
    "l_flat",
    "total",
    "d_si",
    "d_s2",
    "d_skew",
    "d_flat",
    "epoch",
]


class LossHistory:
    """Ordered per-step loss records."""

    def __init__(self, records: List[Dict[str, float]] = None):
        self.records: List[Dict[str, float]] = [dict(r) for r in records or []]

    def append(self, bundle: LossBundle) -> None:
        row = {"step": bundle.step, "epoch": bundle.epoch}
        row.update(bundle.criteria())
        self.records.append(row)

    def __len__(self) -> int:
        return len(self.records)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(self.records, columns=HISTORY_COLUMNS)

    def epoch_means(self, column: str = "total") -> pd.Series:
        """Mean of one column per epoch."""
        return self.to_frame().groupby("epoch")[column].mean()

    def write_csv(self, path: Union[str, Path]) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        frame = self.to_frame()
        frame.to_csv(path, index=False, na_rep="NA", float_format="%.17g")
        logger.info(f"Wrote {len(frame)} loss records to {path}")
        return path

    def all_finite(self) -> bool:
        frame = self.to_frame()
        return bool(np.isfinite(frame[HISTORY_COLUMNS[1:-1]].to_numpy(dtype=float)).all())


def read_loss_history(path: Union[str, Path]) -> LossHistory:
    """Read a loss history CSV written by LossHistory.write_csv."""
    path = Path(path)
    if not path.exists():
        raise EnsembleFormatError(f"Loss history not found: {path}")
    frame = pd.read_csv(path, float_precision="round_trip")
    if list(frame.columns) != HISTORY_COLUMNS:
        raise EnsembleFormatError(
            f"{path}: expected columns {HISTORY_COLUMNS}, got {list(frame.columns)}"
        )
    records = frame.to_dict(orient="records")
    for record in records:
        record["step"] = int(record["step"])
        record["epoch"] = int(record["epoch"])
    return LossHistory(records)
