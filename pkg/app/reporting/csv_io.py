"""
CSV writers and readers for statistic curves, scaling exponents, increment
PDFs, comparison tables and discriminator scores.
"""

import logging
from pathlib import Path
from typing import List, Sequence, Union

import numpy as np
import pandas as pd

from app.core.errors import EnsembleFormatError
from app.models.stat_models import IncrementPdf, StatCurves, ZetaResult

logger = logging.getLogger(__name__)

FLOAT_FORMAT = "%.17g"

STAT_CURVE_COLUMNS = [
    "lag",
    "log_l_over_L",
    "log_s2_mean",
    "log_s2_std",
    "skew_mean",
    "skew_std",
    "logF3_mean",
    "logF3_std",
]
ZETA_COLUMNS = ["p", "zeta", "stderr"]
PDF_COLUMNS = ["lag", "bin_center", "log_density"]
SCORE_COLUMNS = ["realization", "segment_length", "segment_index", "score"]
COMPARE_CURVE_COLUMNS = ["lag", "abs_diff_log_s2", "abs_diff_skew", "abs_diff_logF3"]
COMPARE_ZETA_COLUMNS = ["p", "zeta_a", "zeta_b", "abs_diff"]


def write_frame(frame: pd.DataFrame, path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, index=False, na_rep="NA", float_format=FLOAT_FORMAT)
    logger.info(f"Wrote {len(frame)} rows to {path}")
    return path


def read_frame(path: Union[str, Path], columns: Sequence[str]) -> pd.DataFrame:
    """Read a CSV and require an exact column list."""
    path = Path(path)
    if not path.exists():
        raise EnsembleFormatError(f"CSV file not found: {path}")
    try:
        frame = pd.read_csv(path, na_values=["NA"], float_precision="round_trip")
    except (pd.errors.ParserError, pd.errors.EmptyDataError, UnicodeDecodeError) as e:
        raise EnsembleFormatError(f"{path}: unreadable CSV ({e})") from e
    if list(frame.columns) != list(columns):
        raise EnsembleFormatError(f"{path}: expected columns {list(columns)}, got {list(frame.columns)}")
    return frame


def stat_curves_frame(curves: StatCurves, integral_scale: float) -> pd.DataFrame:
    lags = np.asarray(curves.lags)
    return pd.DataFrame(
        {
            "lag": lags,
            "log_l_over_L": np.log10(lags / integral_scale),
            "log_s2_mean": curves.log_s2,
            "log_s2_std": curves.log_s2_std,
            "skew_mean": curves.skewness,
            "skew_std": curves.skewness_std,
            "logF3_mean": curves.log_flatness_over_3,
            "logF3_std": curves.log_flatness_over_3_std,
        },
        columns=STAT_CURVE_COLUMNS,
    )


def write_stat_curves(curves: StatCurves, integral_scale: float, path: Union[str, Path]) -> Path:
    return write_frame(stat_curves_frame(curves, integral_scale), path)


def read_stat_curves(path: Union[str, Path]) -> StatCurves:
    """Mean and spread curves back from a stat-curve CSV (no per-realization stack)."""
    frame = read_frame(path, STAT_CURVE_COLUMNS)
    return StatCurves(
        lags=[int(l) for l in frame["lag"]],
        log_s2=frame["log_s2_mean"].to_numpy(),
        skewness=frame["skew_mean"].to_numpy(),
        log_flatness_over_3=frame["logF3_mean"].to_numpy(),
        log_s2_std=frame["log_s2_std"].to_numpy(),
        skewness_std=frame["skew_std"].to_numpy(),
        log_flatness_over_3_std=frame["logF3_std"].to_numpy(),
    )


def write_zeta(result: ZetaResult, path: Union[str, Path]) -> Path:
    frame = pd.DataFrame(
        {"p": result.orders, "zeta": result.zeta, "stderr": result.stderr}, columns=ZETA_COLUMNS
    )
    return write_frame(frame, path)


def read_zeta(path: Union[str, Path]) -> pd.DataFrame:
    return read_frame(path, ZETA_COLUMNS)


def write_pdfs(pdfs: Sequence[IncrementPdf], path: Union[str, Path]) -> Path:
    """All lags stacked in one long table, NaN log densities written as NA."""
    frames = [
        pd.DataFrame(
            {"lag": pdf.lag, "bin_center": pdf.bin_centers, "log_density": pdf.log_density},
            columns=PDF_COLUMNS,
        )
        for pdf in pdfs
    ]
    frame = pd.concat(frames, ignore_index=True) if frames else pd.DataFrame(columns=PDF_COLUMNS)
    return write_frame(frame, path)


def read_pdfs(path: Union[str, Path]) -> List[IncrementPdf]:
    frame = read_frame(path, PDF_COLUMNS)
    pdfs = []
    for lag, group in frame.groupby("lag", sort=False):
        log_density = group["log_density"].to_numpy(dtype=float)
        pdfs.append(
            IncrementPdf(
                lag=int(lag),
                bin_centers=group["bin_center"].to_numpy(dtype=float),
                density=np.where(np.isfinite(log_density), np.exp(log_density), 0.0),
                log_density=log_density,
                n_bins=len(group),
            )
        )
    return pdfs


def write_scores(frame: pd.DataFrame, path: Union[str, Path]) -> Path:
    return write_frame(frame[SCORE_COLUMNS], path)


def read_scores(path: Union[str, Path]) -> pd.DataFrame:
    return read_frame(path, SCORE_COLUMNS)
