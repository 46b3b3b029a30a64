"""
Multiscale statistics of 1D fields: structure functions, skewness, flatness,
scaling exponents and increment PDFs.

Evaluation functions work on FieldEnsemble in 64-bit arithmetic. The
differentiable extractor works on torch tensors so the training losses can
backpropagate through the statistics into the generator.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Dict, List, Literal, Optional, Sequence, Tuple

import numpy as np
import torch
from scipy import stats as sps

from app.core.errors import DegenerateScaleError, InvalidArgumentError
from app.core.field_core import increments
from app.models.field_models import FieldEnsemble, ScaleGrid
from app.models.stat_models import IncrementPdf, StatCurves, ZetaResult

logger = logging.getLogger(__name__)

EPS_STAT = 1e-12
DEFAULT_FIT_RANGE = (17.0, 274.0)
DEFAULT_ORDERS = [1.0, 1.5, 2.0, 2.5, 3.0, 3.5, 4.0, 4.5, 5.0]
DEFAULT_PDF_LAGS = [2, 4, 8, 16, 64, 256, 1024, 4096, 10000]
DEFAULT_PDF_BINS = 100


def _check_lags(ens: FieldEnsemble, lags: Sequence[int]) -> None:
    for lag in lags:
        if lag < 1 or lag >= ens.samples:
            raise InvalidArgumentError(
                f"Lag {lag} outside [1, {ens.samples}) for this ensemble"
            )


def _per_lag(fn: Callable[[int], np.ndarray], lags: Sequence[int], max_workers: Optional[int]):
    # Each lag is reduced independently, so threading does not change results.
    if max_workers and max_workers > 1:
        with ThreadPoolExecutor(max_workers=max_workers) as pool:
            return list(pool.map(fn, lags))
    return [fn(lag) for lag in lags]


def _lag_increments(ens: FieldEnsemble, lag: int) -> np.ndarray:
    return increments(ens.data.astype(np.float64), lag)


def structure_function(
    ens: FieldEnsemble,
    p: float,
    grid: ScaleGrid,
    mode: Literal["signed", "absolute"] = "absolute",
    max_workers: Optional[int] = None,
) -> np.ndarray:
    """
    S_p(l) averaged over all realizations and positions.

    Args:
        ens: Input ensemble
        p: Moment order, > 0 (integer for the signed mode)
        grid: Lags to evaluate
        mode: `signed` uses (delta v)^p, `absolute` uses |delta v|^p

    Returns:
        One value per lag
    """
    if ens.realizations < 1:
        raise InvalidArgumentError("Empty ensemble")
    if p <= 0:
        raise InvalidArgumentError(f"Order p must be positive, got {p}")
    if mode == "signed" and float(p) != int(p):
        raise InvalidArgumentError(f"Signed moments need an integer order, got {p}")
    _check_lags(ens, grid.lags)

    def moment(lag: int) -> float:
        inc = _lag_increments(ens, lag)
        values = np.abs(inc) ** p if mode == "absolute" else inc ** int(p)
        return float(values.mean())

    return np.asarray(_per_lag(moment, grid.lags, max_workers))


def _signed_moments(ens: FieldEnsemble, lag: int, axis=None) -> Tuple[np.ndarray, ...]:
    inc = _lag_increments(ens, lag)
    sq = inc * inc
    return sq.mean(axis=axis), (sq * inc).mean(axis=axis), (sq * sq).mean(axis=axis)


def _require_energy(s2, lag: int) -> None:
    if np.any(np.asarray(s2) <= 0):
        raise DegenerateScaleError(f"S_2 vanishes at lag {lag}", lag=lag)


def skewness_curve(
    ens: FieldEnsemble, grid: ScaleGrid, max_workers: Optional[int] = None
) -> np.ndarray:
    """S(l) = S_3(l) / S_2(l)^(3/2) with signed moments."""
    _check_lags(ens, grid.lags)

    def skew(lag: int) -> float:
        s2, s3, _ = _signed_moments(ens, lag)
        _require_energy(s2, lag)
        return float(s3 / s2**1.5)

    return np.asarray(_per_lag(skew, grid.lags, max_workers))


def flatness_curve(
    ens: FieldEnsemble, grid: ScaleGrid, max_workers: Optional[int] = None
) -> Tuple[np.ndarray, np.ndarray]:
    """
    F(l) = S_4(l) / S_2(l)^2.

    Returns:
        The flatness and log(F / 3) per lag
    """
    _check_lags(ens, grid.lags)

    def flat(lag: int) -> float:
        s2, _, s4 = _signed_moments(ens, lag)
        _require_energy(s2, lag)
        return float(s4 / s2**2)

    flatness = np.asarray(_per_lag(flat, grid.lags, max_workers))
    return flatness, np.log(flatness / 3.0)


def fit_scaling_exponents(
    lags: Sequence[int],
    structure_functions: Dict[float, np.ndarray],
    fit_range: Tuple[float, float] = DEFAULT_FIT_RANGE,
) -> ZetaResult:
    """
    Least-squares slopes of log S_p against log l inside fit_range.

    Args:
        lags: Lags at which the structure functions were evaluated
        structure_functions: S_p(l) per order p
        fit_range: Inclusive [l_min, l_max] in samples

    Returns:
        Exponents and slope standard errors per order
    """
    lags_arr = np.asarray(lags, dtype=np.float64)
    inside = (lags_arr >= fit_range[0]) & (lags_arr <= fit_range[1])
    if inside.sum() < 3:
        raise InvalidArgumentError(
            f"Fit range {fit_range} holds {int(inside.sum())} lags, need at least 3"
        )
    log_l = np.log(lags_arr[inside])

    orders = list(structure_functions)
    zeta, stderr = [], []
    for p in orders:
        values = np.asarray(structure_functions[p], dtype=np.float64)[inside]
        if np.any(values <= 0):
            bad = int(lags_arr[inside][np.argmax(values <= 0)])
            raise DegenerateScaleError(f"S_{p} is not positive at lag {bad}", lag=bad)
        fit = sps.linregress(log_l, np.log(values))
        zeta.append(fit.slope)
        stderr.append(fit.stderr)

    return ZetaResult(
        orders=[float(p) for p in orders],
        zeta=np.asarray(zeta),
        stderr=np.asarray(stderr),
        fit_range=(float(fit_range[0]), float(fit_range[1])),
        fit_lags=[int(l) for l in lags_arr[inside]],
    )


def zeta_fit(
    ens: FieldEnsemble,
    orders: Sequence[float] = DEFAULT_ORDERS,
    fit_range: Tuple[float, float] = DEFAULT_FIT_RANGE,
    grid: Optional[ScaleGrid] = None,
    max_workers: Optional[int] = None,
) -> ZetaResult:
    """
    Scaling exponents zeta_p from absolute-moment structure functions.

    Args:
        ens: Input ensemble
        orders: Orders p
        fit_range: Inclusive [l_min, l_max] in samples
        grid: Lags to evaluate; the default grid of the ensemble when omitted

    Returns:
        The fitted exponents
    """
    grid = grid or ScaleGrid.default(ens.samples)
    _check_lags(ens, grid.lags)
    inside = [l for l in grid.lags if fit_range[0] <= l <= fit_range[1]]
    if len(inside) < 3:
        raise InvalidArgumentError(
            f"Fit range {fit_range} holds {len(inside)} grid lags, need at least 3"
        )

    def abs_moments(lag: int) -> np.ndarray:
        magnitude = np.abs(_lag_increments(ens, lag))
        return np.array([np.mean(magnitude ** p) for p in orders])

    table = np.asarray(_per_lag(abs_moments, grid.lags, max_workers))
    sp = {float(p): table[:, i] for i, p in enumerate(orders)}
    result = fit_scaling_exponents(grid.lags, sp, fit_range)
    logger.debug(f"zeta fit over {result.fit_lags}: {result.zeta}")
    return result


def standardized_increments(ens: FieldEnsemble, lag: int) -> np.ndarray:
    """Increments at one lag pooled over realizations, centered and standardized."""
    _check_lags(ens, [lag])
    pooled = _lag_increments(ens, lag).ravel()
    std = pooled.std()
    if not std > 0:
        raise DegenerateScaleError(f"Increments have zero variance at lag {lag}", lag=lag)
    return (pooled - pooled.mean()) / std


def increment_pdf(ens: FieldEnsemble, lag: int, n_bins: int = DEFAULT_PDF_BINS) -> IncrementPdf:
    """
    Histogram density of standardized increments on a symmetric support.

    Args:
        ens: Input ensemble
        lag: Lag in samples
        n_bins: Number of bins, >= 16

    Returns:
        The binned density and its log, NaN in empty bins
    """
    if n_bins < 16:
        raise InvalidArgumentError(f"n_bins must be >= 16, got {n_bins}")
    values = standardized_increments(ens, lag)
    edge = float(np.max(np.abs(values)))
    density, edges = np.histogram(values, bins=n_bins, range=(-edge, edge), density=True)
    with np.errstate(divide="ignore"):
        log_density = np.where(density > 0, np.log(density), np.nan)
    return IncrementPdf(
        lag=lag,
        bin_centers=0.5 * (edges[:-1] + edges[1:]),
        density=density,
        log_density=log_density,
        n_bins=n_bins,
    )


def stat_curves(
    ens: FieldEnsemble, grid: ScaleGrid, max_workers: Optional[int] = None
) -> StatCurves:
    """
    Per-realization log S_2, skewness and log(F/3), with ensemble mean and std.

    Args:
        ens: Input ensemble
        grid: Lags to evaluate

    Returns:
        The bundled curves
    """
    _check_lags(ens, grid.lags)

    def per_realization(lag: int) -> np.ndarray:
        s2, s3, s4 = _signed_moments(ens, lag, axis=-1)
        _require_energy(s2, lag)
        return np.stack([np.log(s2), s3 / s2**1.5, np.log(s4 / s2**2 / 3.0)], axis=-1)

    # R x |lags| x 3
    stack = np.stack(_per_lag(per_realization, grid.lags, max_workers), axis=1)
    mean = stack.mean(axis=0)
    std = stack.std(axis=0)
    return StatCurves(
        lags=list(grid.lags),
        log_s2=mean[:, 0],
        skewness=mean[:, 1],
        log_flatness_over_3=mean[:, 2],
        log_s2_std=std[:, 0],
        skewness_std=std[:, 1],
        log_flatness_over_3_std=std[:, 2],
        per_realization=stack,
    )


class CurveExtractor(torch.nn.Module):
    """
    Differentiable (log S_2, S, log(F/3)) per row of a batch.

    S_2 is floored at `eps` before the log and ratios; the floor keeps the
    gradient of the unclamped value and increments `clamp_events`.
    """

    def __init__(self, lags: Sequence[int], eps: float = EPS_STAT):
        super().__init__()
        self.lags: List[int] = [int(l) for l in lags]
        self.eps = eps
        self.clamp_events = 0

    def forward(self, batch: torch.Tensor) -> torch.Tensor:
        if batch.dim() == 3:
            batch = batch.squeeze(1)
        if batch.dim() != 2:
            raise InvalidArgumentError(f"Expected a B x N batch, got shape {tuple(batch.shape)}")
        n = batch.shape[-1]
        if self.lags[-1] >= n:
            raise InvalidArgumentError(f"Lag {self.lags[-1]} too large for N={n}")

        curves = []
        for lag in self.lags:
            inc = batch[:, lag:] - batch[:, :-lag]
            sq = inc * inc
            s2 = sq.mean(dim=-1)
            s3 = (sq * inc).mean(dim=-1)
            s4 = (sq * sq).mean(dim=-1)

            low = s2 < self.eps
            if bool(low.any()):
                self.clamp_events += int(low.sum())
                logger.warning(f"S_2 below {self.eps} at lag {lag}; clamping")
                s2 = s2 + (self.eps - s2).clamp(min=0).detach()
                s4 = s4 + (self.eps**2 - s4).clamp(min=0).detach()

            curves.append(
                torch.stack(
                    [torch.log(s2), s3 / s2.pow(1.5), torch.log(s4 / s2.pow(2) / 3.0)],
                    dim=-1,
                )
            )
        return torch.stack(curves, dim=1)


def stat_curves_differentiable(
    batch: torch.Tensor, grid: ScaleGrid, eps: float = EPS_STAT
) -> torch.Tensor:
    """
    B x |lags| x 3 stack of (log S_2, S, log(F/3)) with autograd support.

    Args:
        batch: B x N (or B x 1 x N) generator output
        grid: Lags to evaluate

    Returns:
        The curve stack, differentiable with respect to every input sample
    """
    return CurveExtractor(grid.lags, eps=eps)(batch)
