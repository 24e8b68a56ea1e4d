"""Render training-history figures next to the delimited output.

Two panels mirror the convergence diagnostics used throughout: the batch
variational free energy over iterations (with its standard-error band) and
the per-spin batch means over iterations. Files are written with the Agg
backend so rendering works headless.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .training import TrainReport

_RC = {
    "figure.figsize": (6.0, 3.7),
    "font.size": 9,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "lines.linewidth": 1.2,
    "savefig.dpi": 150,
    "savefig.bbox": "tight",
}


def free_energy_figure(report: TrainReport, path, reference: float | None = None) -> Path:
    """Batch free-energy trace with a ±1 stderr band."""
    path = Path(path)
    with plt.rc_context(_RC):
        fig, ax = plt.subplots()
        it = np.arange(report.iterations)
        ax.plot(it, report.f_mean, color="C0", label="batch mean")
        ax.fill_between(
            it,
            report.f_mean - report.f_stderr,
            report.f_mean + report.f_stderr,
            color="C0",
            alpha=0.25,
            linewidth=0,
        )
        if reference is not None:
            ax.axhline(reference, color="C3", linestyle="--", label="exact")
        ax.set_xlabel("iteration")
        ax.set_ylabel("variational free energy")
        ax.legend(loc="upper right")
        fig.savefig(path)
        plt.close(fig)
    return path


def spin_means_figure(report: TrainReport, path) -> Path:
    """One line per spin: batch mean value over iterations."""
    path = Path(path)
    with plt.rc_context(_RC):
        fig, ax = plt.subplots()
        it = np.arange(report.iterations)
        n = report.spin_means.shape[1]
        for i in range(n):
            ax.plot(it, report.spin_means[:, i], alpha=0.6, linewidth=0.8)
        ax.set_xlabel("iteration")
        ax.set_ylabel("per-spin mean value")
        ax.set_ylim(-1.05, 1.05)
        fig.savefig(path)
        plt.close(fig)
    return path


def render_training_figures(
    report: TrainReport, out_dir, stem: str, reference: float | None = None
) -> list[Path]:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = [free_energy_figure(report, out_dir / f"{stem}_free_energy.png", reference)]
    if report.spin_means.size:
        paths.append(spin_means_figure(report, out_dir / f"{stem}_spin_means.png"))
    return paths


def load_report_csv(report_csv, spin_means_csv=None) -> TrainReport:
    """Rebuild a report from the emitted CSVs (for post-hoc rendering)."""
    table = np.loadtxt(report_csv, delimiter=",", skiprows=1, ndmin=2)
    iters = table.shape[0]
    if spin_means_csv:
        means = np.loadtxt(spin_means_csv, delimiter=",", skiprows=1, ndmin=2)[:, 1:]
    else:
        means = np.zeros((iters, 0))
    return TrainReport(
        f_mean=table[:, 1],
        f_stderr=table[:, 2],
        grad_norm=table[:, 3],
        lr=table[:, 4],
        beta=table[:, 5],
        spin_means=means,
    )
