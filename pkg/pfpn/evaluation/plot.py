from __future__ import annotations

from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")

from matplotlib.figure import Figure  # noqa: E402

from ..errors import InputError  # noqa: E402
from .metrics import MetricsReport  # noqa: E402


def curve_label(report: MetricsReport, index: int) -> str:
    return report.label or f"run {index + 1}"


def build_figure(reports: Sequence[MetricsReport]) -> Figure:
    """PR curves (left) and F-measure against threshold (right), one line per report."""
    if not reports:
        raise InputError("plot needs at least one report")

    fig = Figure(figsize=(10, 4.5), dpi=100)
    pr_ax, f_ax = fig.subplots(1, 2)

    for i, report in enumerate(reports):
        label = curve_label(report, i)
        pr_ax.plot(report.pr.recall, report.pr.precision, linewidth=1.5, label=label)
        f_ax.plot(report.pr.thresholds, report.pr.f_curve(), linewidth=1.5, label=label)

    pr_ax.set_xlabel("Recall")
    pr_ax.set_ylabel("Precision")
    pr_ax.set_xlim(0.0, 1.0)
    pr_ax.set_ylim(0.0, 1.05)
    pr_ax.grid(True, alpha=0.3)
    pr_ax.legend(loc="lower left")

    f_ax.set_xlabel("Threshold")
    f_ax.set_ylabel("F-measure")
    f_ax.set_xlim(0, 255)
    f_ax.set_ylim(0.0, 1.05)
    f_ax.grid(True, alpha=0.3)

    fig.tight_layout()
    return fig


def plot_reports(reports: Sequence[MetricsReport], out: Path | str) -> Path:
    out = Path(out)
    out.parent.mkdir(parents=True, exist_ok=True)
    fig = build_figure(reports)
    # no Software/timestamp metadata, so identical inputs give identical bytes
    fig.savefig(out, format="png", metadata={"Software": None})
    return out
