"""
Field data models for the turbulent field synthesis system.
"""

from typing import List, Literal, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from app.core.errors import InvalidArgumentError

# Reference wind-tunnel grid turbulence values, in units of the sampling distance.
REFERENCE_INTEGRAL_SCALE = 2350.0
REFERENCE_KOLMOGOROV_SCALE = 5.0
REFERENCE_MEAN_VELOCITY = 20.5
REFERENCE_SAMPLING_FREQUENCY = 25000.0
REFERENCE_TAYLOR_REYNOLDS = 2500.0


class FieldMeta(BaseModel):
    """Opaque physical metadata carried alongside an ensemble."""

    mean_velocity: Optional[float] = Field(None, description="Mean velocity <v> in m/s")
    sampling_frequency: Optional[float] = Field(
        None, description="Sampling frequency f_s in Hz"
    )
    taylor_reynolds: Optional[float] = Field(
        None, description="Taylor-scale Reynolds number R_lambda"
    )
    integral_scale: Optional[float] = Field(
        None, description="Integral scale L in samples, if known"
    )
    kolmogorov_scale: Optional[float] = Field(
        None, description="Kolmogorov scale eta in samples, if known"
    )


class FieldEnsemble(BaseModel):
    """R realizations of N samples of a 1D field."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    data: np.ndarray = Field(..., description="R x N array of real samples")
    l_s: float = Field(1.0, gt=0, description="Sampling distance")
    meta: FieldMeta = Field(default_factory=FieldMeta, description="Physical metadata")

    @field_validator("data", mode="before")
    @classmethod
    def _check_data(cls, value) -> np.ndarray:
        data = np.array(value)
        if data.ndim == 1:
            data = data[np.newaxis, :]
        if data.ndim != 2:
            raise ValueError(f"Ensemble data must be 2D, got shape {data.shape}")
        if data.shape[0] < 1 or data.shape[1] < 2:
            raise ValueError(
                f"Ensemble needs R >= 1 and N >= 2, got shape {data.shape}"
            )
        if not np.issubdtype(data.dtype, np.floating):
            data = data.astype(np.float64)
        if not np.all(np.isfinite(data)):
            raise ValueError("Ensemble contains non-finite samples")
        data.setflags(write=False)
        return data

    @property
    def realizations(self) -> int:
        return int(self.data.shape[0])

    @property
    def samples(self) -> int:
        return int(self.data.shape[1])

    def with_data(self, data: np.ndarray) -> "FieldEnsemble":
        """Return a copy carrying new samples and the same metadata."""
        return FieldEnsemble(data=data, l_s=self.l_s, meta=self.meta)


class ScaleGrid(BaseModel):
    """Analysis lags with integral and Kolmogorov scale markers."""

    lags: List[int] = Field(..., description="Strictly increasing lags in samples")
    integral_scale: float = Field(
        REFERENCE_INTEGRAL_SCALE, gt=0, description="Integral scale L in samples"
    )
    kolmogorov_scale: float = Field(
        REFERENCE_KOLMOGOROV_SCALE, gt=0, description="Kolmogorov scale eta in samples"
    )

    @model_validator(mode="after")
    def _check_grid(self) -> "ScaleGrid":
        if not self.lags:
            raise ValueError("ScaleGrid needs at least one lag")
        if self.lags[0] < 1:
            raise ValueError(f"Smallest lag must be >= 1, got {self.lags[0]}")
        if any(b <= a for a, b in zip(self.lags, self.lags[1:])):
            raise ValueError(f"Lags must be strictly increasing: {self.lags}")
        if not self.kolmogorov_scale < self.integral_scale:
            raise ValueError(
                f"Kolmogorov scale {self.kolmogorov_scale} must be below "
                f"integral scale {self.integral_scale}"
            )
        return self

    def check_applicable(self, n: int) -> None:
        """Raise if the largest lag exceeds N/2 for a field of length n."""
        if self.lags[-1] > n / 2:
            raise InvalidArgumentError(
                f"Largest lag {self.lags[-1]} exceeds N/2 for N={n}"
            )

    @classmethod
    def default(
        cls,
        n: int,
        count: int = 24,
        integral_scale: Optional[float] = None,
        kolmogorov_scale: Optional[float] = None,
    ) -> "ScaleGrid":
        """
        Approximately log-spaced integer lags from 1 to N/4, deduplicated.

        Args:
            n: Field length the grid will be applied to
            count: Number of log-spaced points before deduplication
            integral_scale: L in samples (reference value when omitted)
            kolmogorov_scale: eta in samples (reference value when omitted)

        Returns:
            The default grid
        """
        top = n // 4
        if top < 1:
            raise InvalidArgumentError(f"Field length {n} too short for a scale grid")
        lags = np.unique(np.rint(np.geomspace(1, top, count)).astype(int))
        return cls(
            lags=[int(l) for l in lags],
            integral_scale=integral_scale or REFERENCE_INTEGRAL_SCALE,
            kolmogorov_scale=kolmogorov_scale or REFERENCE_KOLMOGOROV_SCALE,
        )


class OracleSpec(BaseModel):
    """Parameters of an analytically characterised stochastic generator."""

    kind: Literal["gaussian", "fbm", "mrw"] = Field(..., description="Oracle family")
    hurst: Optional[float] = Field(None, description="Hurst exponent H (fbm/mrw)")
    lambda2: float = Field(0.0, description="Intermittency coefficient lambda^2 (mrw)")
    correlation_length: Optional[int] = Field(
        None, description="Log-correlation length L_c in samples (mrw)"
    )
    seed: int = Field(0, ge=0, lt=2**64, description="64-bit seed")
    realizations: int = Field(..., ge=1, description="R")
    samples: int = Field(..., ge=2, description="N")

    @model_validator(mode="after")
    def _check_params(self) -> "OracleSpec":
        if self.kind in ("fbm", "mrw"):
            if self.hurst is None or not 0.0 < self.hurst < 1.0:
                raise ValueError(f"H must lie in (0, 1), got {self.hurst}")
        if self.kind == "mrw":
            if not 0.0 <= self.lambda2 <= 0.2:
                raise ValueError(
                    f"lambda^2 must lie in [0, 0.2], got {self.lambda2}"
                )
            if self.correlation_length is None or not (
                1 <= self.correlation_length <= self.samples
            ):
                raise ValueError(
                    f"L_c must lie in [1, N={self.samples}], got {self.correlation_length}"
                )
        return self
