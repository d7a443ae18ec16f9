from __future__ import annotations

import json
import logging
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
from pydantic import ValidationError
from torch import nn

from ..config import NUM_WORKERS
from ..data.dataset import SALIENCY_SUFFIXES, match_pairs, read_mask, read_saliency
from ..data.types import Sample
from ..errors import InputError
from ..model.inference import predict_saliency
from ..schemas import MetricsReportFile, PRRow
from ..workers import ordered_map
from .metrics import MetricsReport, PRCurve, evaluate_predictions

logger = logging.getLogger(__name__)


def to_file(report: MetricsReport) -> MetricsReportFile:
    f = report.pr.f_curve()
    rows = [
        PRRow(threshold=int(t), precision=float(p), recall=float(r), f=float(fv))
        for t, p, r, fv in zip(report.pr.thresholds, report.pr.precision, report.pr.recall, f)
    ]
    return MetricsReportFile(
        label=report.label,
        num_images=report.num_images,
        mae=report.mae,
        max_f=report.max_f,
        mean_f=report.mean_f,
        mean_f_nondegenerate=report.mean_f_nondegenerate,
        s_measure=report.s_measure,
        pr=rows,
    )


def from_file(data: MetricsReportFile) -> MetricsReport:
    pr = PRCurve(
        thresholds=np.array([r.threshold for r in data.pr]),
        precision=np.array([r.precision for r in data.pr]),
        recall=np.array([r.recall for r in data.pr]),
    )
    return MetricsReport(
        mae=data.mae,
        max_f=data.max_f,
        mean_f=data.mean_f,
        mean_f_nondegenerate=data.mean_f_nondegenerate,
        s_measure=data.s_measure,
        pr=pr,
        num_images=data.num_images,
        label=data.label,
    )


def write_report(report: MetricsReport, path: Path | str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(to_file(report).model_dump_json(indent=2) + "\n", encoding="utf-8")
    return path


def read_report(path: Path | str) -> MetricsReport:
    path = Path(path)
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
        return from_file(MetricsReportFile.model_validate(raw))
    except FileNotFoundError as e:
        raise InputError(f"{path}: no such report") from e
    except (ValueError, ValidationError) as e:
        raise InputError(f"{path}: malformed metrics report ({e})") from e


def format_headline(report: MetricsReport) -> str:
    name = f"{report.label}: " if report.label else ""
    return (
        f"{name}MAE={report.mae:.4f} maxF={report.max_f:.4f} "
        f"meanF={report.mean_f:.4f} S={report.s_measure:.4f} (n={report.num_images})"
    )


def evaluate_model(
    model: nn.Module,
    samples: Sequence[Sample],
    label: Optional[str] = None,
    workers: int = NUM_WORKERS,
) -> MetricsReport:
    """Test-time protocol on in-memory samples: resize in, predict, bilinear back to original size."""
    if not samples:
        raise InputError("nothing to evaluate: empty sample list")
    preds = [predict_saliency(model, s.image) for s in samples]
    report = evaluate_predictions(preds, [s.mask for s in samples], label=label, workers=workers)
    logger.info("evaluated %d samples: %s", len(samples), format_headline(report))
    return report


def evaluate_directories(
    pred_dir: Path | str,
    mask_dir: Path | str,
    label: Optional[str] = None,
    workers: int = NUM_WORKERS,
) -> MetricsReport:
    """Score <pred_dir>/<id>.png saliency maps against <mask_dir>/<id>.png masks."""
    pairs = match_pairs(pred_dir, mask_dir, left_suffixes=SALIENCY_SUFFIXES)

    def load(item):
        stem, pred_path, mask_path = item
        pred, mask = read_saliency(pred_path), read_mask(mask_path)
        if pred.shape != mask.shape:
            raise InputError(f"{stem}: prediction {pred.shape} and mask {mask.shape} differ in size")
        return pred, mask

    loaded = ordered_map(load, pairs, workers)
    return evaluate_predictions([p for p, _ in loaded], [m for _, m in loaded], label=label, workers=workers)
