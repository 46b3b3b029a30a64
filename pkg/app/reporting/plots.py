"""
Report figures written as SVG files.
"""

import logging
from pathlib import Path
from typing import Dict, Mapping, Optional, Sequence, Union

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
from matplotlib.patches import Rectangle  # noqa: E402
from scipy import stats as sps  # noqa: E402

from app.models.field_models import FieldEnsemble  # noqa: E402
from app.models.stat_models import IncrementPdf, StatCurves, ZetaResult  # noqa: E402

logger = logging.getLogger(__name__)

PDF_OFFSET = 3.0


def _save(fig, path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, format="svg", bbox_inches="tight")
    plt.close(fig)
    logger.info(f"Wrote figure {path}")
    return path


def _guide_line(ax, x: np.ndarray, y: np.ndarray, slope: float, label: str) -> None:
    """Dashed line of the given slope through the middle point of a curve."""
    mid = len(x) // 2
    ax.plot(x, y[mid] + slope * (x - x[mid]), "k--", linewidth=0.8, label=label)


def plot_scale_curves(
    curves: Mapping[str, StatCurves],
    integral_scale: float,
    kolmogorov_scale: float,
    out_dir: Union[str, Path],
) -> Dict[str, Path]:
    """
    log S_2, skewness and log(F/3) against log10(l/L), one line per label,
    error bars from the ensemble spread.

    Returns:
        Written files keyed `s2`, `skewness` and `flatness`
    """
    out_dir = Path(out_dir)
    panels = {
        "s2": ("log_s2", "log_s2_std", r"$\log S_2(l)$", [(2.0, "slope 2"), (2.0 / 3.0, "slope 2/3")]),
        "skewness": ("skewness", "skewness_std", r"$\mathcal{S}(l)$", []),
        "flatness": (
            "log_flatness_over_3",
            "log_flatness_over_3_std",
            r"$\log(\mathcal{F}(l)/3)$",
            [(-0.1, "slope -0.1")],
        ),
    }
    eta = np.log10(kolmogorov_scale / integral_scale)
    written = {}
    for key, (mean_attr, std_attr, ylabel, guides) in panels.items():
        fig, ax = plt.subplots(figsize=(6, 4.5))
        for label, c in curves.items():
            x = np.log10(np.asarray(c.lags, dtype=float) / integral_scale)
            ax.errorbar(x, getattr(c, mean_attr), yerr=getattr(c, std_attr), marker="o", markersize=3, capsize=2, label=label)
        first = next(iter(curves.values()))
        x = np.log10(np.asarray(first.lags, dtype=float) / integral_scale)
        y = getattr(first, mean_attr)
        # Statistics are natural logs, the axis is log10(l/L).
        for slope, guide_label in guides:
            _guide_line(ax, x, y, slope * np.log(10.0), guide_label)
        ax.axvline(eta, color="grey", linestyle="--", linewidth=0.8)
        ax.axvline(0.0, color="grey", linestyle="--", linewidth=0.8)
        ax.set_xlabel(r"$\log_{10}(l/L)$")
        ax.set_ylabel(ylabel)
        ax.legend(fontsize="small")
        written[key] = _save(fig, out_dir / f"{key}.svg")
    return written


def plot_zeta(results: Mapping[str, ZetaResult], path: Union[str, Path]) -> Path:
    """zeta_p against p with the K41 line p/3."""
    fig, ax = plt.subplots(figsize=(5, 4.5))
    orders = np.asarray(next(iter(results.values())).orders)
    p = np.linspace(0.0, orders.max(), 50)
    ax.plot(p, p / 3.0, "k--", linewidth=0.8, label="K41 p/3")
    for label, result in results.items():
        ax.errorbar(result.orders, result.zeta, yerr=result.stderr, marker="o", capsize=2, label=label)
    ax.set_xlabel("p")
    ax.set_ylabel(r"$\zeta_p$")
    ax.legend(fontsize="small")
    return _save(fig, path)


def plot_pdfs(pdfs: Mapping[str, Sequence[IncrementPdf]], path: Union[str, Path], title: Optional[str] = None) -> Path:
    """
    Log densities of standardized increments, one lag per vertical offset,
    each with the standard Gaussian reference.
    """
    fig, ax = plt.subplots(figsize=(5, 7))
    support = np.linspace(-10, 10, 400)
    gaussian = np.log(sps.norm.pdf(support))
    for label, stack in pdfs.items():
        for i, pdf in enumerate(stack):
            offset = -PDF_OFFSET * i
            ax.plot(pdf.bin_centers, pdf.log_density + offset, marker=".", markersize=2, linewidth=0.8, label=label if i == 0 else None)
    first = next(iter(pdfs.values()))
    for i, pdf in enumerate(first):
        ax.plot(support, gaussian - PDF_OFFSET * i, "k--", linewidth=0.6, label="Gaussian" if i == 0 else None)
        ax.annotate(f"l={pdf.lag}", (support[-1], gaussian[-1] - PDF_OFFSET * i), fontsize="x-small")
    ax.set_ylim(bottom=-PDF_OFFSET * len(first) - 15)
    ax.set_xlabel(r"$\delta_l u / \sigma_l$")
    ax.set_ylabel("log PDF (shifted)")
    if title:
        ax.set_title(title)
    ax.legend(fontsize="small")
    return _save(fig, path)


def plot_realizations(ens: FieldEnsemble, integral_scale: float, path: Union[str, Path], count: int = 3) -> Path:
    """The first realizations against x/L with a box one integral scale wide."""
    fig, ax = plt.subplots(figsize=(8, 4))
    x = np.arange(ens.samples) / integral_scale
    spread = 0.0
    for i in range(min(count, ens.realizations)):
        row = np.asarray(ens.data[i], dtype=float)
        shift = spread - row.min()
        ax.plot(x, row + shift, linewidth=0.5)
        spread += row.max() - row.min() + 1.0
    ax.add_patch(Rectangle((0.0, 0.0), 1.0, spread, fill=False, linestyle="--", edgecolor="grey"))
    ax.set_xlabel(r"$x/L$")
    ax.set_ylabel("u (shifted)")
    return _save(fig, path)
