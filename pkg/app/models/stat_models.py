"""
Statistics and report models for the turbulent field synthesis system.
"""

from pathlib import Path
from typing import List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from app.models.field_models import ScaleGrid


class StatCurves(BaseModel):
    """Per-lag log S_2, skewness and log(F/3) with ensemble spread."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    lags: List[int] = Field(..., description="Lags of the scale grid")
    log_s2: np.ndarray = Field(..., description="Ensemble mean of log S_2(l)")
    skewness: np.ndarray = Field(..., description="Ensemble mean of S(l)")
    log_flatness_over_3: np.ndarray = Field(..., description="Ensemble mean of log(F/3)")
    log_s2_std: np.ndarray = Field(..., description="Ensemble std of log S_2(l)")
    skewness_std: np.ndarray = Field(..., description="Ensemble std of S(l)")
    log_flatness_over_3_std: np.ndarray = Field(..., description="Ensemble std of log(F/3)")
    per_realization: Optional[np.ndarray] = Field(
        None, description="R x |lags| x 3 stack of (log S_2, S, log(F/3))"
    )

    def as_stack(self) -> np.ndarray:
        """Mean curves stacked as |lags| x 3."""
        return np.stack([self.log_s2, self.skewness, self.log_flatness_over_3], axis=-1)


class ZetaResult(BaseModel):
    """Fitted scaling exponents zeta_p."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    orders: List[float] = Field(..., description="Orders p")
    zeta: np.ndarray = Field(..., description="Fitted exponent per order")
    stderr: np.ndarray = Field(..., description="Slope standard error per order")
    fit_range: Tuple[float, float] = Field(..., description="[l_min, l_max] in samples")
    fit_lags: List[int] = Field(default_factory=list, description="Lags used in the fit")

    def exponent(self, p: float) -> float:
        return float(self.zeta[self.orders.index(p)])


class IncrementPdf(BaseModel):
    """Histogram of centered and standardized increments at one lag."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    lag: int = Field(..., description="Lag in samples")
    bin_centers: np.ndarray = Field(..., description="Standardized increment values")
    density: np.ndarray = Field(..., description="Normalized density per bin")
    log_density: np.ndarray = Field(
        ..., description="Natural log of the density, NaN where the bin is empty"
    )
    n_bins: int = Field(..., ge=16, description="Number of bins")

    @property
    def empty_bins(self) -> np.ndarray:
        return ~np.isfinite(self.log_density)


class LabeledInput(BaseModel):
    """An ensemble file stem with its display label."""

    path: Path = Field(..., description="Ensemble file stem or .f32 path")
    label: str = Field(..., description="Display label")


class ReportSpec(BaseModel):
    """What an analysis report covers and where it is written."""

    inputs: List[LabeledInput] = Field(..., min_length=1, description="Ensembles to analyse")
    grid: Optional[ScaleGrid] = Field(
        None, description="Scale grid; the default grid of each ensemble when omitted"
    )
    fit_range: Tuple[float, float] = Field((17.0, 274.0), description="zeta_p fit range")
    orders: List[float] = Field(
        default_factory=lambda: [1.0, 1.5, 2.0, 2.5, 3.0, 3.5, 4.0, 4.5, 5.0],
        description="Orders p of the zeta_p fit",
    )
    pdf_lags: List[int] = Field(
        default_factory=lambda: [2, 4, 8, 16, 64, 256, 1024, 4096, 10000],
        description="Lags of the increment PDFs",
    )
    n_bins: int = Field(100, ge=16, description="Histogram bins of the increment PDFs")
    integral_scale: Optional[float] = Field(
        None, description="Overrides L for the l/L axes"
    )
    single_realization: Optional[int] = Field(
        None, ge=0, description="Realization index for single-realization PDFs"
    )
    output_dir: Path = Field(..., description="Directory receiving CSVs and figures")

    @model_validator(mode="after")
    def _check_labels(self) -> "ReportSpec":
        labels = [item.label for item in self.inputs]
        if len(set(labels)) != len(labels):
            raise ValueError(f"Report labels must be unique: {labels}")
        if self.fit_range[0] >= self.fit_range[1]:
            raise ValueError(f"Empty fit range {self.fit_range}")
        return self
