from .metrics import (
    BETA2,
    THRESHOLDS,
    MetricsReport,
    PRCurve,
    evaluate_predictions,
    f_measure,
    f_measure_curve,
    image_pr,
    mae,
    max_mean_f,
    pr_curve,
    s_measure,
)
from .report import evaluate_directories, evaluate_model, format_headline, read_report, write_report
from .plot import plot_reports

__all__ = [
    "BETA2",
    "THRESHOLDS",
    "MetricsReport",
    "PRCurve",
    "evaluate_predictions",
    "f_measure",
    "f_measure_curve",
    "image_pr",
    "mae",
    "max_mean_f",
    "pr_curve",
    "s_measure",
    "evaluate_directories",
    "evaluate_model",
    "format_headline",
    "read_report",
    "write_report",
    "plot_reports",
]
