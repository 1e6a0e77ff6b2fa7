"""Render scaling figures and fit tables from benchmark result rows.

Figures are written to files (headless Agg backend); the numeric content
always ships alongside as delimited text so plots never carry data that
cannot be re-derived.
"""

from __future__ import annotations

import math
import os

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from .bench import ResultRow, ScalingReport, scaling_report, summarize

__all__ = ["render_scaling_figure", "render_ratio_figure", "write_fit_csv", "render_report"]


def render_scaling_figure(report: ScalingReport, path: str) -> None:
    """Log-log median TTS against problem size, with fitted power laws."""
    fig, ax = plt.subplots(figsize=(6.0, 4.5))
    for name, fit in report.fits.items():
        ns = np.asarray(fit.ns, dtype=float)
        ax.loglog(ns, fit.medians, "o", label=f"{name} (exponent {fit.exponent:.2f} +/- {fit.ci95:.2f})")
        grid = np.geomspace(ns.min(), ns.max(), 64)
        ax.loglog(grid, np.exp(fit.intercept) * grid**fit.exponent, "--", alpha=0.6)
    ax.set_xlabel("problem size n")
    ax.set_ylabel("median TTS [s]")
    ax.legend(fontsize=8)
    ax.grid(True, which="both", alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def render_ratio_figure(report: ScalingReport, path: str) -> None:
    """Median-TTS ratios of each solver against the first one."""
    if not report.ratios:
        return
    fig, ax = plt.subplots(figsize=(6.0, 4.5))
    for label, series in report.ratios.items():
        if not series:
            continue
        ns = [p[0] for p in series]
        rs = [p[1] for p in series]
        ax.semilogx(ns, rs, "o-", label=label)
    ax.axhline(1.0, color="k", lw=0.8, alpha=0.5)
    ax.set_xlabel("problem size n")
    ax.set_ylabel("median TTS ratio")
    ax.legend(fontsize=8)
    ax.grid(True, which="both", alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def write_fit_csv(report: ScalingReport, path: str) -> None:
    import csv

    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["solver", "exponent", "ci95", "stderr", "intercept", "points"])
        for name, fit in report.fits.items():
            writer.writerow([name, repr(fit.exponent), repr(fit.ci95), repr(fit.stderr), repr(fit.intercept), len(fit.ns)])


def write_summary_csv(rows: list[ResultRow], path: str) -> None:
    import csv

    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["family", "n", "solver", "median_tts"])
        for family, n, solver, med in summarize(rows):
            writer.writerow([family, n, solver, "inf" if math.isinf(med) else repr(med)])


def render_report(rows: list[ResultRow], outdir: str, min_points: int = 3) -> dict[str, str]:
    """Write the full report bundle; returns the paths that were produced."""
    os.makedirs(outdir, exist_ok=True)
    produced: dict[str, str] = {}

    summary_path = os.path.join(outdir, "summary.csv")
    write_summary_csv(rows, summary_path)
    produced["summary"] = summary_path

    try:
        report = scaling_report(rows, min_points=min_points)
    except ValueError:
        return produced  # too few sizes for a fit; summary alone is still useful

    fit_path = os.path.join(outdir, "scaling_fit.csv")
    write_fit_csv(report, fit_path)
    produced["fits"] = fit_path

    fig_path = os.path.join(outdir, "scaling_tts.png")
    render_scaling_figure(report, fig_path)
    produced["scaling_figure"] = fig_path

    if report.ratios:
        ratio_path = os.path.join(outdir, "tts_ratio.png")
        render_ratio_figure(report, ratio_path)
        produced["ratio_figure"] = ratio_path
    return produced
