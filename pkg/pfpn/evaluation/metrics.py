from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np

from ..config import NUM_WORKERS
from ..errors import InputError
from ..schemas import NUM_THRESHOLDS
from ..workers import ordered_map

BETA2 = 0.3
S_ALPHA = 0.5
THRESHOLDS = np.arange(NUM_THRESHOLDS)

_EPS = np.finfo(np.float64).eps


def _check_pair(pred: np.ndarray, target: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    pred = np.asarray(pred, dtype=np.float64)
    target = np.asarray(target)
    if pred.ndim != 2 or target.ndim != 2:
        raise InputError(f"expected 2-D maps, got {pred.shape} and {target.shape}")
    if pred.shape != target.shape:
        raise InputError(f"prediction {pred.shape} and mask {target.shape} differ in resolution")
    return pred, target > 0.5


# -----------------------------
# MAE
# -----------------------------

def mae(pred: np.ndarray, target: np.ndarray) -> float:
    pred, gt = _check_pair(pred, target)
    return float(np.mean(np.abs(pred - gt)))


# -----------------------------
# PR curve and F-measure
# -----------------------------

@dataclass(frozen=True)
class ImagePR:
    precision: np.ndarray        # (256,)
    recall: np.ndarray           # (256,)
    predicted_positive: np.ndarray  # (256,) bool
    has_foreground: bool


@dataclass(frozen=True)
class PRCurve:
    thresholds: np.ndarray
    precision: np.ndarray
    recall: np.ndarray
    # thresholds at which at least one pixel of the dataset is predicted positive
    any_positive: Optional[np.ndarray] = None

    def f_curve(self, beta2: float = BETA2) -> np.ndarray:
        return f_measure_curve(self.precision, self.recall, beta2)


def image_pr(pred: np.ndarray, target: np.ndarray) -> ImagePR:
    """
    A pixel is positive at threshold t iff pred * 255 > t. With no predicted
    positives precision is 0; with an empty mask recall is 1.
    """
    pred, gt = _check_pair(pred, target)
    scaled = pred * 255.0
    t = THRESHOLDS.astype(np.float64)

    everything = np.sort(scaled, axis=None)
    foreground = np.sort(scaled[gt])
    positives = everything.size - np.searchsorted(everything, t, side="right")
    hits = foreground.size - np.searchsorted(foreground, t, side="right")

    precision = np.divide(hits, positives, out=np.zeros(NUM_THRESHOLDS), where=positives > 0)
    if foreground.size:
        recall = hits / foreground.size
    else:
        recall = np.ones(NUM_THRESHOLDS)
    return ImagePR(precision, recall, positives > 0, bool(foreground.size))


def pr_curve(
    preds: Sequence[np.ndarray],
    targets: Sequence[np.ndarray],
    workers: int = NUM_WORKERS,
) -> PRCurve:
    """Dataset PR curve: per-image precision/recall averaged at each threshold."""
    if len(preds) == 0:
        raise InputError("cannot build a PR curve from an empty dataset")
    if len(preds) != len(targets):
        raise InputError(f"{len(preds)} predictions but {len(targets)} masks")
    per_image = ordered_map(lambda pair: image_pr(*pair), list(zip(preds, targets)), workers)
    return _average_pr(per_image)


def _average_pr(per_image: Sequence[ImagePR]) -> PRCurve:
    recall = np.mean(np.stack([p.recall for p in per_image]), axis=0)
    with_fg = [p.precision for p in per_image if p.has_foreground]
    if with_fg:
        precision = np.mean(np.stack(with_fg), axis=0)
    else:
        precision = np.zeros(NUM_THRESHOLDS)
    any_positive = np.any(np.stack([p.predicted_positive for p in per_image]), axis=0)
    return PRCurve(THRESHOLDS.copy(), precision, recall, any_positive)


def f_measure(precision: float, recall: float, beta2: float = BETA2) -> float:
    """Weighted harmonic mean of precision and recall; 0 when either is 0."""
    if precision * recall == 0:
        return 0.0
    return (1 + beta2) * precision * recall / (beta2 * precision + recall)


def f_measure_curve(precision: np.ndarray, recall: np.ndarray, beta2: float = BETA2) -> np.ndarray:
    precision = np.asarray(precision, dtype=np.float64)
    recall = np.asarray(recall, dtype=np.float64)
    num = (1 + beta2) * precision * recall
    den = beta2 * precision + recall
    return np.divide(num, den, out=np.zeros_like(num), where=(precision * recall) != 0)


def max_mean_f(pr: PRCurve, beta2: float = BETA2) -> Tuple[float, float]:
    f = pr.f_curve(beta2)
    return float(np.max(f)), float(np.mean(f))


# -----------------------------
# S-measure (object-aware + region-aware structural similarity)
# -----------------------------

def s_measure(pred: np.ndarray, target: np.ndarray, alpha: float = S_ALPHA) -> float:
    pred, gt = _check_pair(pred, target)
    y = np.mean(gt)
    if y == 0:
        return float(1.0 - np.mean(pred))
    if y == 1:
        return float(np.mean(pred))
    score = alpha * _object_score(pred, gt) + (1 - alpha) * _region_score(pred, gt)
    return float(max(score, 0.0))


def _object_score(pred: np.ndarray, gt: np.ndarray) -> float:
    u = np.mean(gt)
    return u * _s_object(pred[gt]) + (1 - u) * _s_object(1.0 - pred[~gt])


def _s_object(x: np.ndarray) -> float:
    mean = np.mean(x)
    std = np.std(x, ddof=1) if x.size > 1 else 0.0
    return 2.0 * mean / (mean ** 2 + 1.0 + std + _EPS)


def _centroid(gt: np.ndarray) -> Tuple[int, int]:
    """(x, y) split point: rounded foreground centroid, shifted by one like 1-based indexing."""
    rows, cols = np.nonzero(gt)
    return int(np.round(cols.mean())) + 1, int(np.round(rows.mean())) + 1


def _region_score(pred: np.ndarray, gt: np.ndarray) -> float:
    h, w = gt.shape
    x, y = _centroid(gt)
    area = h * w

    w1 = x * y / area
    w2 = y * (w - x) / area
    w3 = (h - y) * x / area
    w4 = 1.0 - w1 - w2 - w3

    quadrants = (
        (w1, np.s_[0:y, 0:x]),
        (w2, np.s_[0:y, x:w]),
        (w3, np.s_[y:h, 0:x]),
        (w4, np.s_[y:h, x:w]),
    )
    return sum(weight * _ssim(pred[q], gt[q]) for weight, q in quadrants)


def _ssim(pred: np.ndarray, gt: np.ndarray) -> float:
    n = pred.size
    if n == 0:
        return 0.0
    gt = gt.astype(np.float64)
    x, y = np.mean(pred), np.mean(gt)
    sigma_x = np.sum((pred - x) ** 2) / (n - 1 + _EPS)
    sigma_y = np.sum((gt - y) ** 2) / (n - 1 + _EPS)
    sigma_xy = np.sum((pred - x) * (gt - y)) / (n - 1 + _EPS)

    alpha = 4 * x * y * sigma_xy
    beta = (x ** 2 + y ** 2) * (sigma_x + sigma_y)
    if alpha != 0:
        return alpha / (beta + _EPS)
    if beta == 0:
        return 1.0
    return 0.0


# -----------------------------
# Dataset report
# -----------------------------

@dataclass(frozen=True)
class MetricsReport:
    mae: float
    max_f: float
    mean_f: float
    mean_f_nondegenerate: float
    s_measure: float
    pr: PRCurve
    num_images: int
    label: Optional[str] = None


def evaluate_predictions(
    preds: Sequence[np.ndarray],
    targets: Sequence[np.ndarray],
    label: Optional[str] = None,
    workers: int = NUM_WORKERS,
) -> MetricsReport:
    if len(preds) == 0:
        raise InputError("nothing to evaluate: empty dataset")
    if len(preds) != len(targets):
        raise InputError(f"{len(preds)} predictions but {len(targets)} masks")

    def per_image(pair):
        p, g = pair
        return mae(p, g), s_measure(p, g), image_pr(p, g)

    results = ordered_map(per_image, list(zip(preds, targets)), workers)
    pr = _average_pr([r[2] for r in results])
    f = pr.f_curve()
    mask = pr.any_positive
    return MetricsReport(
        mae=float(np.mean([r[0] for r in results])),
        max_f=float(np.max(f)),
        mean_f=float(np.mean(f)),
        mean_f_nondegenerate=float(np.mean(f[mask])) if mask.any() else 0.0,
        s_measure=float(np.mean([r[1] for r in results])),
        pr=pr,
        num_images=len(preds),
        label=label,
    )
