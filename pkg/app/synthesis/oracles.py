"""
Analytically characterised stochastic generators: Gaussian white noise,
fractional Brownian motion and the multifractal random walk.

They stand in for measured turbulence records during training and serve as
ground truth for the statistics engine.
"""

import logging
from typing import Callable, Dict, List, Type

import numpy as np
from scipy import linalg

from app.core.errors import EmbeddingError
from app.models.field_models import FieldEnsemble, OracleSpec
from app.synthesis.base import BaseOracle

logger = logging.getLogger(__name__)

EXACT_FALLBACK_MAX_N = 4096
_NEGATIVE_EIGEN_TOLERANCE = 1e-10


def fgn_covariance(hurst: float) -> Callable[[np.ndarray], np.ndarray]:
    """Autocovariance of unit-variance fractional Gaussian noise."""
    two_h = 2.0 * hurst

    def cov(k: np.ndarray) -> np.ndarray:
        k = np.abs(k.astype(np.float64))
        return 0.5 * (np.abs(k + 1) ** two_h - 2 * k**two_h + np.abs(k - 1) ** two_h)

    return cov


def log_covariance(lambda2: float, correlation_length: int) -> Callable[[np.ndarray], np.ndarray]:
    """lambda^2 ln(L_c / (d + 1)) for d < L_c, zero beyond."""

    def cov(k: np.ndarray) -> np.ndarray:
        d = np.abs(k.astype(np.float64))
        out = np.zeros_like(d)
        inside = d < correlation_length
        out[inside] = lambda2 * np.log(correlation_length / (d[inside] + 1.0))
        return out

    return cov


def circulant_gaussian(
    cov: Callable[[np.ndarray], np.ndarray],
    n: int,
    rngs: List[np.random.Generator],
) -> np.ndarray:
    """
    Stationary Gaussian sequences with autocovariance `cov` by circulant embedding.

    Falls back to a Cholesky factor of the Toeplitz covariance for
    n <= 4096 when the embedding has negative eigenvalues.

    Args:
        cov: Autocovariance as a function of integer lag
        n: Sequence length
        rngs: One generator per realization

    Returns:
        len(rngs) x n array
    """
    row = cov(np.arange(n + 1))
    circulant = np.concatenate([row, row[-2:0:-1]])
    m = circulant.size
    eigenvalues = np.fft.fft(circulant).real

    scale = max(float(np.max(np.abs(eigenvalues))), 1e-300)
    if eigenvalues.min() < -_NEGATIVE_EIGEN_TOLERANCE * scale:
        if n > EXACT_FALLBACK_MAX_N:
            raise EmbeddingError(
                f"Circulant embedding has negative eigenvalue {eigenvalues.min():.3e} "
                f"and N={n} is too large for exact factorization"
            )
        logger.warning(
            f"Circulant embedding not nonnegative (min {eigenvalues.min():.3e}); "
            f"using exact Toeplitz factorization for N={n}"
        )
        try:
            factor = linalg.cholesky(linalg.toeplitz(row[:n]), lower=True)
        except linalg.LinAlgError as e:
            raise EmbeddingError(f"Exact covariance factorization failed: {e}") from e
        return np.stack([factor @ rng.standard_normal(n) for rng in rngs])

    if eigenvalues.min() < 0:
        logger.debug(f"Clipping negative eigenvalues down to {eigenvalues.min():.3e}")
    weights = np.sqrt(np.clip(eigenvalues, 0.0, None) / m)

    noise = np.stack(
        [rng.standard_normal(m) + 1j * rng.standard_normal(m) for rng in rngs]
    )
    return np.fft.fft(weights * noise, axis=-1).real[:, :n]


class GaussianNoiseOracle(BaseOracle):
    """Independent standard normal samples."""

    def generate(self) -> FieldEnsemble:
        data = np.stack(
            [rng.standard_normal(self.spec.samples) for rng in self.realization_rngs()]
        )
        return FieldEnsemble(data=data)


class FbmOracle(BaseOracle):
    """Fractional Brownian motion: cumulative sum of fractional Gaussian noise."""

    def initialize(self) -> None:
        self.increment_cov = fgn_covariance(self.spec.hurst)

    def generate(self) -> FieldEnsemble:
        fgn = circulant_gaussian(
            self.increment_cov, self.spec.samples, self.realization_rngs()
        )
        return FieldEnsemble(data=np.cumsum(fgn, axis=-1))


class MrwOracle(BaseOracle):
    """
    Multifractal random walk: fractional Gaussian noise modulated by the
    exponential of a log-correlated Gaussian field, then summed.
    """

    def initialize(self) -> None:
        self.increment_cov = fgn_covariance(self.spec.hurst)
        self.omega_cov = log_covariance(self.spec.lambda2, self.spec.correlation_length)
        # Var(omega) = lambda^2 ln L_c; subtracting it keeps E[exp(2 omega')] = 1.
        self.omega_variance = self.spec.lambda2 * np.log(self.spec.correlation_length)

    def generate(self) -> FieldEnsemble:
        rngs = self.realization_rngs()
        n = self.spec.samples
        epsilon = circulant_gaussian(self.increment_cov, n, rngs)
        omega = circulant_gaussian(self.omega_cov, n, rngs)
        steps = epsilon * np.exp(omega - self.omega_variance)
        return FieldEnsemble(data=np.cumsum(steps, axis=-1))


ORACLE_CLASSES: Dict[str, Type[BaseOracle]] = {
    "gaussian": GaussianNoiseOracle,
    "fbm": FbmOracle,
    "mrw": MrwOracle,
}


def build_oracle(spec: OracleSpec) -> BaseOracle:
    """Instantiate the oracle registered for spec.kind."""
    oracle = ORACLE_CLASSES[spec.kind](spec)
    logger.info(
        f"Initialized {oracle.name}: R={spec.realizations}, N={spec.samples}, seed={spec.seed}"
    )
    return oracle


def gaussian_noise(r: int, n: int, seed: int) -> FieldEnsemble:
    """R x N iid standard normal ensemble, reproducible per seed."""
    spec = OracleSpec(kind="gaussian", realizations=r, samples=n, seed=seed)
    return build_oracle(spec).generate()


def fbm(r: int, n: int, hurst: float, seed: int) -> FieldEnsemble:
    """R fractional Brownian motion paths of N samples with Hurst exponent H."""
    spec = OracleSpec(kind="fbm", hurst=hurst, realizations=r, samples=n, seed=seed)
    return build_oracle(spec).generate()


def mrw(
    r: int, n: int, hurst: float, lambda2: float, correlation_length: int, seed: int
) -> FieldEnsemble:
    """R multifractal random walk paths of N samples."""
    spec = OracleSpec(
        kind="mrw",
        hurst=hurst,
        lambda2=lambda2,
        correlation_length=correlation_length,
        realizations=r,
        samples=n,
        seed=seed,
    )
    return build_oracle(spec).generate()
