"""
Field ensemble operations: increments, segmentation, standardization,
border trimming and the binary ensemble file format.
"""

import logging
from pathlib import Path
from typing import Optional, Tuple, Union

import numpy as np
from pydantic import ValidationError

from app.core.config_loader import parse_key_value_lines
from app.core.errors import (
    DegenerateInputError,
    EnsembleFormatError,
    FieldSynthesisError,
    InvalidArgumentError,
)
from app.models.field_models import FieldEnsemble, FieldMeta

logger = logging.getLogger(__name__)

ENSEMBLE_SUFFIX = ".f32"
SIDECAR_SUFFIX = ".meta"
_OPTIONAL_META_KEYS = tuple(FieldMeta.model_fields)


def increments(field: np.ndarray, lag: int) -> np.ndarray:
    """
    Non-periodic increments field[x + lag] - field[x] along the last axis.

    Args:
        field: 1D series or R x N array
        lag: Lag in samples, 1 <= lag < N

    Returns:
        Array whose last axis has length N - lag
    """
    field = np.asarray(field)
    n = field.shape[-1]
    if lag <= 0 or lag >= n:
        raise InvalidArgumentError(f"Lag must satisfy 1 <= lag < {n}, got {lag}")
    return field[..., lag:] - field[..., :-lag]


def segment(
    series: np.ndarray,
    n: int,
    stride: int,
    l_s: float = 1.0,
    meta: Optional[FieldMeta] = None,
) -> FieldEnsemble:
    """
    Cut a long record into realizations of length n.

    Args:
        series: 1D record of M samples
        n: Realization length
        stride: Offset between consecutive realizations

    Returns:
        Ensemble with floor((M - n) / stride) + 1 realizations
    """
    series = np.asarray(series).ravel()
    if stride < 1:
        raise InvalidArgumentError(f"Stride must be >= 1, got {stride}")
    if n < 2 or n > series.size:
        raise InvalidArgumentError(
            f"Segment length {n} must lie in [2, {series.size}]"
        )
    windows = np.lib.stride_tricks.sliding_window_view(series, n)[::stride]
    return FieldEnsemble(data=windows, l_s=l_s, meta=meta or FieldMeta())


def concatenate(ens: FieldEnsemble) -> np.ndarray:
    """Join realizations end to end, inverse of segment with stride = n."""
    return ens.data.reshape(-1).copy()


def standardize(ens: FieldEnsemble) -> FieldEnsemble:
    """
    Apply one global affine map so all R x N samples have mean 0 and variance 1.

    Args:
        ens: Input ensemble

    Returns:
        Standardized ensemble in 64-bit precision
    """
    data = ens.data.astype(np.float64)
    mean = data.mean()
    std = data.std()
    if not std > 0:
        raise DegenerateInputError("Cannot standardize a zero-variance ensemble")
    return ens.with_data((data - mean) / std)


def trim_borders(field: np.ndarray, n_b: int) -> np.ndarray:
    """
    Drop n_b / 2 samples from each end of the last axis.

    Args:
        field: 1D series or R x (N + n_b) array
        n_b: Total number of border samples, even

    Returns:
        The middle samples
    """
    field = np.asarray(field)
    length = field.shape[-1]
    if n_b < 0 or n_b % 2 != 0:
        raise InvalidArgumentError(f"Border trim must be even and >= 0, got {n_b}")
    if n_b >= length:
        raise InvalidArgumentError(f"Border trim {n_b} must be below length {length}")
    half = n_b // 2
    return field[..., half : length - half]


def ensemble_paths(path: Union[str, Path]) -> Tuple[Path, Path]:
    """Resolve an ensemble stem (or .f32/.meta path) to its file pair."""
    path = Path(path)
    if path.suffix in (ENSEMBLE_SUFFIX, SIDECAR_SUFFIX):
        path = path.with_suffix("")
    return (
        path.with_name(path.name + ENSEMBLE_SUFFIX),
        path.with_name(path.name + SIDECAR_SUFFIX),
    )


def write_ensemble(ens: FieldEnsemble, path: Union[str, Path]) -> Tuple[Path, Path]:
    """
    Write an ensemble as raw little-endian float32 plus a key=value sidecar.

    Args:
        ens: Ensemble to write
        path: File stem; `.f32` and `.meta` are appended

    Returns:
        Paths of the data and sidecar files
    """
    data_path, meta_path = ensemble_paths(path)
    data_path.parent.mkdir(parents=True, exist_ok=True)

    ens.data.astype("<f4").tofile(data_path)
    lines = [
        f"realizations={ens.realizations}",
        f"samples={ens.samples}",
        f"ls={ens.l_s!r}",
    ]
    for key in _OPTIONAL_META_KEYS:
        value = getattr(ens.meta, key)
        if value is not None:
            lines.append(f"{key}={value!r}")
    meta_path.write_text("\n".join(lines) + "\n", encoding="utf-8")

    logger.info(
        f"Wrote ensemble {ens.realizations}x{ens.samples} to {data_path}"
    )
    return data_path, meta_path


def read_ensemble(path: Union[str, Path]) -> FieldEnsemble:
    """
    Read an ensemble file pair written by write_ensemble.

    Args:
        path: File stem or either file of the pair

    Returns:
        The ensemble, samples kept in float32
    """
    data_path, meta_path = ensemble_paths(path)
    if not data_path.exists():
        raise EnsembleFormatError(f"Ensemble data file not found: {data_path}")
    if not meta_path.exists():
        raise EnsembleFormatError(f"Ensemble sidecar not found: {meta_path}")

    try:
        values = parse_key_value_lines(
            meta_path.read_text(encoding="utf-8"), source=str(meta_path)
        )
    except FieldSynthesisError as e:
        raise EnsembleFormatError(str(e)) from e

    unknown = set(values) - {"realizations", "samples", "ls", *_OPTIONAL_META_KEYS}
    if unknown:
        raise EnsembleFormatError(f"{meta_path}: unknown keys {sorted(unknown)}")
    try:
        r = int(values["realizations"])
        n = int(values["samples"])
        l_s = float(values.get("ls", "1.0"))
        meta = FieldMeta(**{k: float(values[k]) for k in _OPTIONAL_META_KEYS if k in values})
    except (KeyError, ValueError) as e:
        raise EnsembleFormatError(f"{meta_path}: invalid header ({e})") from e

    raw = np.fromfile(data_path, dtype="<f4")
    if raw.size != r * n:
        raise EnsembleFormatError(
            f"{data_path}: holds {raw.size} samples, header declares {r}x{n}"
        )
    try:
        ens = FieldEnsemble(data=raw.reshape(r, n).astype(np.float32), l_s=l_s, meta=meta)
    except ValidationError as e:
        raise EnsembleFormatError(f"{data_path}: {e}") from e

    logger.info(f"Loaded ensemble {r}x{n} from {data_path}")
    return ens
