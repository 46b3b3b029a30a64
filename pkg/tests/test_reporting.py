#!/usr/bin/env python
"""
Tests for the CSV tables, the analysis report and the two-ensemble comparison.
"""

import os
import sys

import numpy as np
import pandas as pd
import pytest
from pydantic import ValidationError

# Add the parent directory to the path so we can import from app
sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from app.core.errors import EnsembleFormatError, InvalidArgumentError
from app.core.field_core import write_ensemble
from app.core.stats_engine import increment_pdf, stat_curves
from app.models.field_models import ScaleGrid
from app.models.stat_models import LabeledInput, ReportSpec
from app.reporting import csv_io
from app.reporting.report import analyze, compare, read_compare_curves
from app.synthesis.oracles import fbm, gaussian_noise

N = 4096


@pytest.fixture(scope="module")
def stems(tmp_path_factory):
    root = tmp_path_factory.mktemp("ensembles")
    write_ensemble(gaussian_noise(16, N, seed=21), root / "gauss")
    write_ensemble(fbm(8, N, 1.0 / 3.0, seed=22), root / "fbm")
    return {"gauss": root / "gauss", "fbm": root / "fbm"}


def _spec(inputs, out, **kwargs):
    return ReportSpec(
        inputs=[LabeledInput(path=path, label=label) for label, path in inputs],
        output_dir=out,
        **kwargs,
    )


def test_stat_curve_table_round_trip(tmp_path):
    grid = ScaleGrid(lags=[1, 4, 16, 64])
    curves = stat_curves(gaussian_noise(4, 1024, seed=1), grid)
    path = csv_io.write_stat_curves(curves, grid.integral_scale, tmp_path / "curves.csv")

    frame = pd.read_csv(path)
    assert list(frame.columns) == csv_io.STAT_CURVE_COLUMNS
    np.testing.assert_allclose(frame["log_l_over_L"], np.log10(np.array([1, 4, 16, 64]) / 2350.0))

    back = csv_io.read_stat_curves(path)
    assert back.lags == [1, 4, 16, 64]
    np.testing.assert_array_equal(back.log_flatness_over_3, curves.log_flatness_over_3)
    np.testing.assert_array_equal(back.skewness_std, curves.skewness_std)


def test_pdf_table_keeps_empty_bins(tmp_path):
    ens = gaussian_noise(2, 512, seed=2)
    pdfs = [increment_pdf(ens, lag, 64) for lag in (1, 8)]
    back = csv_io.read_pdfs(csv_io.write_pdfs(pdfs, tmp_path / "pdf.csv"))
    assert [p.lag for p in back] == [1, 8]
    for original, stored in zip(pdfs, back):
        np.testing.assert_array_equal(original.empty_bins, stored.empty_bins)
        finite = ~original.empty_bins
        np.testing.assert_array_equal(original.log_density[finite], stored.log_density[finite])


def test_tables_reject_wrong_columns(tmp_path):
    path = tmp_path / "zeta.csv"
    pd.DataFrame({"p": [1.0], "zeta": [0.3]}).to_csv(path, index=False)
    with pytest.raises(EnsembleFormatError):
        csv_io.read_zeta(path)
    with pytest.raises(EnsembleFormatError):
        csv_io.read_zeta(tmp_path / "missing.csv")


def test_analyze_writes_tables_and_figures(stems, tmp_path):
    results = analyze(_spec([("gauss", stems["gauss"]), ("fbm", stems["fbm"])], tmp_path))
    assert set(results) == {"gauss", "fbm"}

    for label in results:
        for name in ("stat_curves.csv", "zeta.csv", "pdf.csv", "realizations.svg"):
            assert (tmp_path / label / name).exists(), (label, name)
    for name in ("s2.svg", "skewness.svg", "flatness.svg", "zeta.svg", "pdf.svg"):
        assert (tmp_path / name).read_text(encoding="utf-8").lstrip().startswith("<?xml")

    gauss = results["gauss"]
    assert gauss.grid.lags[0] == 1 and gauss.grid.lags[-1] == N // 4
    assert np.all(np.abs(gauss.curves.log_flatness_over_3) < 0.05)
    assert np.all(np.abs(gauss.curves.skewness) < 0.05)
    assert np.all(np.abs(gauss.zeta.zeta) < 0.05)

    stored = csv_io.read_zeta(tmp_path / "fbm" / "zeta.csv")
    np.testing.assert_array_equal(stored["zeta"].to_numpy(), results["fbm"].zeta.zeta)
    assert [p.lag for p in gauss.pdfs] == [2, 4, 8, 16, 64, 256, 1024]


def test_analyze_single_realization(stems, tmp_path):
    analyze(_spec([("gauss", stems["gauss"])], tmp_path, single_realization=3))
    assert (tmp_path / "gauss" / "pdf_single.csv").exists()
    assert (tmp_path / "gauss" / "pdf_single.svg").exists()

    with pytest.raises(InvalidArgumentError):
        analyze(_spec([("gauss", stems["gauss"])], tmp_path / "bad", single_realization=16))
    assert not (tmp_path / "bad").exists()


def test_analyze_with_explicit_grid(stems, tmp_path):
    grid = ScaleGrid(lags=[1, 2, 4, 8, 16, 32, 64, 128, 256, 512])
    results = analyze(_spec([("fbm", stems["fbm"])], tmp_path, grid=grid))
    assert results["fbm"].curves.lags == grid.lags

    with pytest.raises(InvalidArgumentError):
        analyze(_spec([("fbm", stems["fbm"])], tmp_path, grid=ScaleGrid(lags=[1, 4096])))


def test_compare_with_itself_is_exact(stems, tmp_path):
    report = compare(_spec([("a", stems["gauss"]), ("b", stems["gauss"])], tmp_path))
    assert report.max_abs_diff_logF3 == 0.0
    assert report.max_abs_diff_zeta == 0.0

    curves = read_compare_curves(tmp_path / "compare_curves.csv")
    assert (curves[["abs_diff_log_s2", "abs_diff_skew", "abs_diff_logF3"]] == 0).all().all()
    zeta = csv_io.read_frame(tmp_path / "compare_zeta.csv", csv_io.COMPARE_ZETA_COLUMNS)
    assert len(zeta) == 9


def test_compare_separates_noise_from_scaling(stems, tmp_path):
    report = compare(_spec([("gauss", stems["gauss"]), ("fbm", stems["fbm"])], tmp_path))
    assert report.max_abs_diff_zeta > 1.0
    third = report.zeta_diffs.set_index("p").loc[3.0]
    assert third["zeta_b"] == pytest.approx(1.0, abs=0.15)
    assert third["zeta_a"] == pytest.approx(0.0, abs=0.05)


def test_compare_needs_two_inputs(stems, tmp_path):
    with pytest.raises(InvalidArgumentError):
        compare(_spec([("gauss", stems["gauss"])], tmp_path))


def test_report_spec_validation(stems, tmp_path):
    with pytest.raises(ValidationError):
        _spec([("x", stems["gauss"]), ("x", stems["fbm"])], tmp_path)
    with pytest.raises(ValidationError):
        _spec([("x", stems["gauss"])], tmp_path, fit_range=(300.0, 20.0))
    with pytest.raises(ValidationError):
        _spec([("x", stems["gauss"])], tmp_path, n_bins=8)
