from __future__ import annotations

import logging
from typing import List

import cv2
import numpy as np

from ..schemas import ShapeKind, SyntheticSpec
from .types import Sample

logger = logging.getLogger(__name__)

MIN_FOREGROUND = 0.02
MAX_FOREGROUND = 0.6
# minimum grey-level gap between the foreground and background base colours
LEVEL_GAP = 0.5
TINT = 0.04
GRADIENT = 0.03
MAX_ATTEMPTS = 20


def generate_synthetic(spec: SyntheticSpec) -> List[Sample]:
    """
    Desk-scale stand-in for a saliency training set: every image holds 1-3
    high-contrast shapes over a textured background. Sample i depends only on
    (spec, i); each one draws from its own spawned random stream.
    """
    streams = np.random.SeedSequence(spec.seed).spawn(spec.num_samples)
    samples = [_make_sample(spec, np.random.default_rng(s), i) for i, s in enumerate(streams)]
    logger.info("generated %d synthetic samples (seed=%d, clutter=%.2f)",
                len(samples), spec.seed, spec.clutter_level)
    return samples


def _make_sample(spec: SyntheticSpec, rng: np.random.Generator, index: int) -> Sample:
    size = spec.canvas_size
    mask = _draw_mask(spec, rng, size)

    bg_level = rng.uniform(0.0, 1.0)
    if bg_level < 0.5:
        fg_level = rng.uniform(bg_level + LEVEL_GAP, 1.0)
    else:
        fg_level = rng.uniform(0.0, bg_level - LEVEL_GAP)

    background = _background(rng, size, bg_level, spec.clutter_level)
    foreground = _flat(rng, size, fg_level)
    if spec.clutter_level > 0:
        foreground += rng.normal(0.0, 0.02 * spec.clutter_level, foreground.shape).astype(np.float32)

    image = np.where(mask[..., None].astype(bool), foreground, background)
    image = np.clip(image, 0.0, 1.0).astype(np.float32)
    return Sample(image=image, mask=mask, id=f"syn{spec.seed}_{index:05d}")


# -----------------------------
# Masks
# -----------------------------

def _draw_mask(spec: SyntheticSpec, rng: np.random.Generator, size: int) -> np.ndarray:
    for _ in range(MAX_ATTEMPTS):
        mask = np.zeros((size, size), dtype=np.uint8)
        for _ in range(int(rng.integers(1, 4))):
            kind = spec.shapes[int(rng.integers(len(spec.shapes)))]
            _DRAW[kind](mask, rng, size)
        if MIN_FOREGROUND <= mask.mean() <= MAX_FOREGROUND:
            return mask

    # centred ellipse covering ~16% of the canvas
    mask = np.zeros((size, size), dtype=np.uint8)
    cv2.ellipse(mask, (size // 2, size // 2), (size // 4, size // 5), 0, 0, 360, 1, thickness=-1)
    return mask


def _center(rng: np.random.Generator, size: int, margin: float) -> tuple[int, int]:
    lo, hi = int(margin), int(size - margin)
    return int(rng.integers(lo, max(hi, lo + 1))), int(rng.integers(lo, max(hi, lo + 1)))


def _draw_ellipse(mask: np.ndarray, rng: np.random.Generator, size: int) -> None:
    a, b = (int(rng.uniform(0.08, 0.25) * size) for _ in range(2))
    cx, cy = _center(rng, size, max(a, b) * 0.5)
    angle = float(rng.uniform(0.0, 180.0))
    cv2.ellipse(mask, (cx, cy), (a, b), angle, 0, 360, 1, thickness=-1)


def _draw_rectangle(mask: np.ndarray, rng: np.random.Generator, size: int) -> None:
    w, h = (float(rng.uniform(0.15, 0.45) * size) for _ in range(2))
    cx, cy = _center(rng, size, max(w, h) * 0.3)
    angle = float(rng.uniform(0.0, 90.0))
    corners = cv2.boxPoints(((cx, cy), (w, h), angle))
    cv2.fillPoly(mask, [np.round(corners).astype(np.int32)], 1)


def _draw_blob(mask: np.ndarray, rng: np.random.Generator, size: int) -> None:
    n = int(rng.integers(8, 13))
    radius = rng.uniform(0.1, 0.25) * size
    cx, cy = _center(rng, size, radius * 0.7)
    angles = np.sort(rng.uniform(0.0, 2 * np.pi, n))
    radii = radius * rng.uniform(0.6, 1.0, n)
    pts = np.stack([cx + radii * np.cos(angles), cy + radii * np.sin(angles)], axis=1)
    cv2.fillPoly(mask, [np.round(pts).astype(np.int32)], 1)


_DRAW = {
    ShapeKind.ELLIPSE: _draw_ellipse,
    ShapeKind.RECTANGLE: _draw_rectangle,
    ShapeKind.BLOB: _draw_blob,
}


# -----------------------------
# Textures
# -----------------------------

def _flat(rng: np.random.Generator, size: int, level: float) -> np.ndarray:
    colour = level + rng.uniform(-TINT, TINT, 3)
    return np.broadcast_to(colour.astype(np.float32), (size, size, 3)).copy()


def _background(rng: np.random.Generator, size: int, level: float, clutter: float) -> np.ndarray:
    img = _flat(rng, size, level)

    theta = rng.uniform(0.0, 2 * np.pi)
    ramp = np.linspace(-1.0, 1.0, size, dtype=np.float32)
    gradient = np.cos(theta) * ramp[None, :] + np.sin(theta) * ramp[:, None]
    img += (GRADIENT / np.sqrt(2)) * gradient[..., None]

    if clutter <= 0:
        return img

    coarse = rng.normal(0.0, 1.0, (max(size // 8, 2), max(size // 8, 2), 3)).astype(np.float32)
    img += 0.12 * clutter * cv2.resize(coarse, (size, size), interpolation=cv2.INTER_CUBIC)

    # low-contrast distractor strokes
    for _ in range(int(round(clutter * 6))):
        p1 = tuple(int(v) for v in rng.integers(0, size, 2))
        p2 = tuple(int(v) for v in rng.integers(0, size, 2))
        shade = float(level + rng.choice([-1.0, 1.0]) * rng.uniform(0.1, 0.25))
        cv2.line(img, p1, p2, (shade, shade, shade), thickness=int(rng.integers(1, 3)))
    return img
