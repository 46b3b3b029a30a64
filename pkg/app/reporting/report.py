"""
Analysis and comparison reports: statistic curves, scaling exponents and
increment PDFs of ensemble files, written as CSV tables and SVG figures.
"""

import logging
from pathlib import Path
from typing import Dict, List, Optional, Tuple, Union

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, Field

from app.core.errors import InvalidArgumentError
from app.core.field_core import read_ensemble, standardize
from app.core.stats_engine import increment_pdf, stat_curves, zeta_fit
from app.models.field_models import (
    REFERENCE_INTEGRAL_SCALE,
    REFERENCE_KOLMOGOROV_SCALE,
    FieldEnsemble,
    ScaleGrid,
)
from app.models.stat_models import IncrementPdf, LabeledInput, ReportSpec, StatCurves, ZetaResult
from app.reporting import csv_io, plots

logger = logging.getLogger(__name__)


class EnsembleAnalysis(BaseModel):
    """Everything computed for one labelled ensemble."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    label: str
    ensemble: FieldEnsemble
    grid: ScaleGrid
    curves: StatCurves
    zeta: ZetaResult
    pdfs: List[IncrementPdf] = Field(default_factory=list)
    single_pdfs: List[IncrementPdf] = Field(default_factory=list)
    files: Dict[str, Path] = Field(default_factory=dict)


class ComparisonReport(BaseModel):
    """Per-lag curve differences and exponent differences of two ensembles."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    curve_diffs: pd.DataFrame
    zeta_diffs: pd.DataFrame
    max_abs_diff_logF3: float
    max_abs_diff_zeta: float
    files: Dict[str, Path] = Field(default_factory=dict)


def _scales(spec: ReportSpec, ens: FieldEnsemble) -> Tuple[float, float]:
    integral = spec.integral_scale or ens.meta.integral_scale or REFERENCE_INTEGRAL_SCALE
    kolmogorov = ens.meta.kolmogorov_scale or REFERENCE_KOLMOGOROV_SCALE
    return integral, kolmogorov


def _load_inputs(spec: ReportSpec) -> List[Tuple[LabeledInput, FieldEnsemble]]:
    loaded = []
    for item in spec.inputs:
        ens = read_ensemble(item.path)
        if spec.single_realization is not None and spec.single_realization >= ens.realizations:
            raise InvalidArgumentError(
                f"Realization {spec.single_realization} requested, {item.label} has {ens.realizations}"
            )
        loaded.append((item, ens))
    return loaded


def _analyse(spec: ReportSpec, item: LabeledInput, raw: FieldEnsemble, grid: Optional[ScaleGrid]) -> EnsembleAnalysis:
    ens = standardize(raw)
    integral, kolmogorov = _scales(spec, raw)
    if grid is None:
        grid = ScaleGrid.default(ens.samples, integral_scale=integral, kolmogorov_scale=kolmogorov)
    grid.check_applicable(ens.samples)

    curves = stat_curves(ens, grid)
    zeta = zeta_fit(ens, spec.orders, spec.fit_range, grid)

    pdf_lags = [lag for lag in spec.pdf_lags if lag < ens.samples]
    skipped = sorted(set(spec.pdf_lags) - set(pdf_lags))
    if skipped:
        logger.warning(f"{item.label}: PDF lags {skipped} exceed N={ens.samples}; skipped")
    pdfs = [increment_pdf(ens, lag, spec.n_bins) for lag in pdf_lags]

    single = []
    if spec.single_realization is not None:
        k = spec.single_realization
        one = ens.with_data(ens.data[k : k + 1])
        single = [increment_pdf(one, lag, spec.n_bins) for lag in pdf_lags]

    logger.info(f"Analysed {item.label}: {ens.realizations}x{ens.samples} over {len(grid.lags)} lags")
    return EnsembleAnalysis(
        label=item.label, ensemble=ens, grid=grid, curves=curves, zeta=zeta, pdfs=pdfs, single_pdfs=single
    )


def _write_analysis(spec: ReportSpec, result: EnsembleAnalysis) -> None:
    out = Path(spec.output_dir) / result.label
    integral, _ = _scales(spec, result.ensemble)
    result.files["stat_curves"] = csv_io.write_stat_curves(result.curves, integral, out / "stat_curves.csv")
    result.files["zeta"] = csv_io.write_zeta(result.zeta, out / "zeta.csv")
    result.files["pdf"] = csv_io.write_pdfs(result.pdfs, out / "pdf.csv")
    if result.single_pdfs:
        result.files["pdf_single"] = csv_io.write_pdfs(result.single_pdfs, out / "pdf_single.csv")
        result.files["pdf_single_plot"] = plots.plot_pdfs(
            {result.label: result.single_pdfs},
            out / "pdf_single.svg",
            title=f"realization {spec.single_realization}",
        )
    result.files["realizations"] = plots.plot_realizations(result.ensemble, integral, out / "realizations.svg")


def _write_overlays(spec: ReportSpec, results: List[EnsembleAnalysis]) -> Dict[str, Path]:
    out = Path(spec.output_dir)
    integral, kolmogorov = _scales(spec, results[0].ensemble)
    files = dict(plots.plot_scale_curves({r.label: r.curves for r in results}, integral, kolmogorov, out))
    files["zeta"] = plots.plot_zeta({r.label: r.zeta for r in results}, out / "zeta.svg")
    if all(r.pdfs for r in results):
        files["pdf"] = plots.plot_pdfs({r.label: r.pdfs for r in results}, out / "pdf.svg")
    return files


def analyze(spec: ReportSpec) -> Dict[str, EnsembleAnalysis]:
    """
    Compute and write the report for every input of the spec.

    All statistics are computed before the first file is written.

    Args:
        spec: Inputs, grid, fit range and output directory

    Returns:
        Per-label analysis results with the paths they were written to
    """
    loaded = _load_inputs(spec)
    results = [_analyse(spec, item, ens, spec.grid) for item, ens in loaded]

    for result in results:
        _write_analysis(spec, result)
    overlays = _write_overlays(spec, results)
    for result in results:
        result.files.update({f"plot_{k}": v for k, v in overlays.items()})
    return {r.label: r for r in results}


def compare(spec: ReportSpec) -> ComparisonReport:
    """
    Overlay two ensembles on one shared grid and tabulate their differences.

    Args:
        spec: Exactly two inputs, A then B

    Returns:
        Curve and exponent differences with the paths of the written files
    """
    if len(spec.inputs) != 2:
        raise InvalidArgumentError(f"compare needs exactly two inputs, got {len(spec.inputs)}")
    loaded = _load_inputs(spec)
    grid = spec.grid
    if grid is None:
        n = min(ens.samples for _, ens in loaded)
        integral, kolmogorov = _scales(spec, loaded[0][1])
        grid = ScaleGrid.default(n, integral_scale=integral, kolmogorov_scale=kolmogorov)
    a, b = (_analyse(spec, item, ens, grid) for item, ens in loaded)

    curve_diffs = pd.DataFrame(
        {
            "lag": grid.lags,
            "abs_diff_log_s2": np.abs(a.curves.log_s2 - b.curves.log_s2),
            "abs_diff_skew": np.abs(a.curves.skewness - b.curves.skewness),
            "abs_diff_logF3": np.abs(a.curves.log_flatness_over_3 - b.curves.log_flatness_over_3),
        },
        columns=csv_io.COMPARE_CURVE_COLUMNS,
    )
    zeta_diffs = pd.DataFrame(
        {
            "p": a.zeta.orders,
            "zeta_a": a.zeta.zeta,
            "zeta_b": b.zeta.zeta,
            "abs_diff": np.abs(a.zeta.zeta - b.zeta.zeta),
        },
        columns=csv_io.COMPARE_ZETA_COLUMNS,
    )
    report = ComparisonReport(
        curve_diffs=curve_diffs,
        zeta_diffs=zeta_diffs,
        max_abs_diff_logF3=float(curve_diffs["abs_diff_logF3"].max()),
        max_abs_diff_zeta=float(zeta_diffs["abs_diff"].max()),
    )

    for result in (a, b):
        _write_analysis(spec, result)
    report.files.update(_write_overlays(spec, [a, b]))
    out = Path(spec.output_dir)
    report.files["compare_curves"] = csv_io.write_frame(curve_diffs, out / "compare_curves.csv")
    report.files["compare_zeta"] = csv_io.write_frame(zeta_diffs, out / "compare_zeta.csv")
    logger.info(
        f"Compared {a.label} and {b.label}: max |d log(F/3)| = {report.max_abs_diff_logF3:.4g}, "
        f"max |d zeta_p| = {report.max_abs_diff_zeta:.4g}"
    )
    return report


def read_compare_curves(path: Union[str, Path]) -> pd.DataFrame:
    return csv_io.read_frame(path, csv_io.COMPARE_CURVE_COLUMNS)
