from __future__ import annotations

import logging
from pathlib import Path
from typing import Dict, Iterable, List, Sequence, Tuple

import cv2
import numpy as np

from ..config import NUM_WORKERS
from ..errors import InputError
from ..workers import ordered_map
from .types import Sample

logger = logging.getLogger(__name__)

IMAGE_SUFFIXES = (".png", ".jpg", ".jpeg")
MASK_SUFFIXES = (".png",)
SALIENCY_SUFFIXES = (".png",)
MASK_THRESHOLD = 128

IMAGES_DIR = "images"
MASKS_DIR = "masks"


# -----------------------------
# Single files
# -----------------------------

def read_image(path: Path | str) -> np.ndarray:
    """RGB float32 (H, W, 3) in [0, 1]."""
    bgr = cv2.imread(str(path), cv2.IMREAD_COLOR)
    if bgr is None:
        raise InputError(f"{path}: not a readable image")
    return cv2.cvtColor(bgr, cv2.COLOR_BGR2RGB).astype(np.float32) / 255.0


def read_gray(path: Path | str) -> np.ndarray:
    gray = cv2.imread(str(path), cv2.IMREAD_GRAYSCALE)
    if gray is None:
        raise InputError(f"{path}: not a readable image")
    return gray


def read_mask(path: Path | str) -> np.ndarray:
    return (read_gray(path) >= MASK_THRESHOLD).astype(np.uint8)


def read_saliency(path: Path | str) -> np.ndarray:
    return read_gray(path).astype(np.float64) / 255.0


def _write(path: Path | str, array: np.ndarray) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    if not cv2.imwrite(str(path), array):
        raise InputError(f"{path}: could not write image")
    return path


def write_image(path: Path | str, image: np.ndarray) -> Path:
    rgb = np.round(np.clip(image, 0.0, 1.0) * 255.0).astype(np.uint8)
    return _write(path, cv2.cvtColor(rgb, cv2.COLOR_RGB2BGR))


def write_mask(path: Path | str, mask: np.ndarray) -> Path:
    return _write(path, (mask > 0).astype(np.uint8) * 255)


def write_saliency(path: Path | str, saliency: np.ndarray) -> Path:
    """8-bit single channel, value = round(saliency * 255)."""
    return _write(path, np.round(np.clip(saliency, 0.0, 1.0) * 255.0).astype(np.uint8))


# -----------------------------
# Directories
# -----------------------------

def index_files(directory: Path, suffixes: Sequence[str]) -> Dict[str, Path]:
    """basename -> file; two files sharing a basename is an error."""
    found: Dict[str, Path] = {}
    if not directory.is_dir():
        return found
    for p in sorted(directory.iterdir()):
        if not p.is_file() or p.suffix.lower() not in suffixes:
            continue
        if p.stem in found:
            raise InputError(f"{directory}: '{p.stem}' appears twice ({found[p.stem].name}, {p.name})")
        found[p.stem] = p
    return found


def _describe(ids: Iterable[str], limit: int = 10) -> str:
    ids = sorted(ids)
    more = f" (+{len(ids) - limit} more)" if len(ids) > limit else ""
    return ", ".join(ids[:limit]) + more


def match_pairs(
    left_dir: Path | str,
    right_dir: Path | str,
    left_suffixes: Sequence[str] = IMAGE_SUFFIXES,
    right_suffixes: Sequence[str] = MASK_SUFFIXES,
) -> List[Tuple[str, Path, Path]]:
    """(id, left, right) for every basename, sorted by id; both sides must list the same ids."""
    left_dir, right_dir = Path(left_dir), Path(right_dir)
    left = index_files(left_dir, left_suffixes)
    right = index_files(right_dir, right_suffixes)
    if not left:
        raise InputError(f"{left_dir}: no images found")

    missing = set(left) - set(right)
    if missing:
        raise InputError(f"{right_dir}: no file for {_describe(missing)}")
    extra = set(right) - set(left)
    if extra:
        raise InputError(f"{left_dir}: no file for {_describe(extra)}")
    return [(k, left[k], right[k]) for k in sorted(left)]


def load_dataset(root: Path | str, workers: int = NUM_WORKERS) -> List[Sample]:
    """Read root/images/* and root/masks/*.png pairs, sorted by id."""
    root = Path(root)
    images_dir, masks_dir = root / IMAGES_DIR, root / MASKS_DIR
    images = index_files(images_dir, IMAGE_SUFFIXES)
    if not images:
        raise InputError(f"{images_dir}: no images found")
    masks = index_files(masks_dir, MASK_SUFFIXES)
    missing = set(images) - set(masks)
    if missing:
        raise InputError(f"{masks_dir}: missing mask for {_describe(missing)}")

    def load(stem: str) -> Sample:
        image, mask = read_image(images[stem]), read_mask(masks[stem])
        if image.shape[:2] != mask.shape:
            raise InputError(f"{stem}: image {image.shape[:2]} and mask {mask.shape} differ in size")
        return Sample(image=image, mask=mask, id=stem)

    samples = ordered_map(load, sorted(images), workers)
    logger.info("loaded %d samples from %s", len(samples), root)
    return samples


def save_dataset(samples: Sequence[Sample], root: Path | str) -> Path:
    """Write samples in the images/ + masks/ layout load_dataset reads."""
    root = Path(root)
    for s in samples:
        write_image(root / IMAGES_DIR / f"{s.id}.png", s.image)
        write_mask(root / MASKS_DIR / f"{s.id}.png", s.mask)
    return root
