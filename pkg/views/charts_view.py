"""
Graphiques optionnels (--plot): G(0, r·e1) et histogramme de la sonde de boucles
"""

import logging

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
from matplotlib.figure import Figure

logger = logging.getLogger(__name__)

FACE_COLOR = "#2d3748"
LINE_COLOR = "#4299e1"
BAR_COLOR = "#48bb78"


def _figure(ncols: int = 1) -> Figure:
    plt.style.use("dark_background")
    fig, _ = plt.subplots(1, ncols, figsize=(6 * ncols, 4.5), facecolor=FACE_COLOR)
    for ax in fig.axes:
        ax.set_facecolor(FACE_COLOR)
        ax.grid(True, alpha=0.3)
    return fig


def _save(fig: Figure, path: str):
    fig.tight_layout()
    fig.savefig(path, dpi=150, facecolor=FACE_COLOR)
    plt.close(fig)
    logger.info("graphique écrit: %s", path)


def plot_green_table(table, path: str):
    """G le long de l'axe et moyennes sur B_n²"""
    fig = _figure(2)
    ax_axis, ax_avg = fig.axes
    ax_axis.plot(table.axis["r"], table.axis["G"], marker="o", color=LINE_COLOR)
    ax_axis.set_xlabel("r")
    ax_axis.set_ylabel("G(0, r·e1)")
    ax_axis.set_title(f"G(0,0) = {table.G00:.6f}")
    ax_avg.plot(table.box_averages["n"], table.box_averages["avg_G"], marker="s", color=BAR_COLOR)
    ax_avg.set_xlabel("n")
    ax_avg.set_ylabel("moyenne de G sur B_n²")
    _save(fig, path)


def plot_probe(report, path: str):
    """Histogramme des longueurs de boucles et fraction cumulée des arêtes"""
    fig = _figure(2)
    ax_hist, ax_frac = fig.axes
    if not report.histogram.empty:
        ax_hist.bar(report.histogram["length"], report.histogram["edges"], color=BAR_COLOR)
        ax_frac.step(report.fraction["ell"], report.fraction["fraction"], where="post", color=LINE_COLOR)
    ax_frac.axvline(report.cap, color="#f56565", linestyle="--", alpha=0.7)
    ax_hist.set_xlabel("longueur de boucle")
    ax_hist.set_ylabel("arêtes")
    ax_frac.set_xlabel("ℓ")
    ax_frac.set_ylabel("fraction des arêtes en boucles ≤ ℓ")
    ax_frac.set_ylim(0, 1.05)
    _save(fig, path)
