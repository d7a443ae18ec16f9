from __future__ import annotations

from typing import Optional, Sequence, Tuple

import cv2
import numpy as np
import torch
from torch import Tensor

from ..errors import InputError
from ..schemas import AugmentConfig
from .types import Sample

IMAGENET_MEAN = (0.485, 0.456, 0.406)
IMAGENET_STD = (0.229, 0.224, 0.225)

# (height, width)
Size = Tuple[int, int]


def resize_image(image: np.ndarray, size: Size) -> np.ndarray:
    """Bilinear resize; returns a copy untouched when already at size."""
    if image.shape[:2] == tuple(size):
        return image.copy()
    h, w = size
    return cv2.resize(image, (w, h), interpolation=cv2.INTER_LINEAR)


def resize_mask(mask: np.ndarray, size: Size) -> np.ndarray:
    # nearest keeps the mask binary
    if mask.shape[:2] == tuple(size):
        return mask.copy()
    h, w = size
    return cv2.resize(mask, (w, h), interpolation=cv2.INTER_NEAREST)


def resize_sample(sample: Sample, size: Size) -> Sample:
    return Sample(resize_image(sample.image, size), resize_mask(sample.mask, size), sample.id)


def crop(sample: Sample, top: int, left: int, size: int) -> Sample:
    h, w = sample.size
    if not (0 <= top <= h - size and 0 <= left <= w - size):
        raise InputError(f"crop ({top}, {left}) of size {size} leaves the {h}x{w} image")
    window = np.s_[top:top + size, left:left + size]
    return Sample(sample.image[window].copy(), sample.mask[window].copy(), sample.id)


def hflip(sample: Sample) -> Sample:
    return Sample(sample.image[:, ::-1].copy(), sample.mask[:, ::-1].copy(), sample.id)


def augment_train(
    sample: Sample,
    rng: np.random.Generator,
    config: AugmentConfig = AugmentConfig(),
    *,
    offsets: Optional[Tuple[int, int]] = None,
    flip: Optional[bool] = None,
) -> Sample:
    """
    Resize to resize_to x resize_to, crop a random crop_to x crop_to patch and
    flip horizontally with probability flip_prob. Image and mask go through the
    same geometry. offsets/flip pin the random choices.
    """
    resized = resize_sample(sample, (config.resize_to, config.resize_to))

    span = config.resize_to - config.crop_to
    if offsets is None:
        offsets = (int(rng.integers(0, span + 1)), int(rng.integers(0, span + 1)))
    if flip is None:
        flip = bool(rng.random() < config.flip_prob)

    out = crop(resized, offsets[0], offsets[1], config.crop_to)
    return hflip(out) if flip else out


# -----------------------------
# Model input
# -----------------------------

def to_model_input(
    images: Sequence[np.ndarray],
    pixel_mean: Sequence[float] = IMAGENET_MEAN,
    pixel_std: Sequence[float] = IMAGENET_STD,
) -> Tensor:
    """(H, W, 3) float images in [0, 1] -> normalised (B, 3, H, W) float32 tensor."""
    batch = np.stack([np.asarray(im, dtype=np.float32) for im in images])
    mean = np.asarray(pixel_mean, dtype=np.float32)
    std = np.asarray(pixel_std, dtype=np.float32)
    batch = (batch - mean) / std
    return torch.from_numpy(np.ascontiguousarray(batch.transpose(0, 3, 1, 2)))


def prepare_image(
    image: np.ndarray,
    input_size: int,
    pixel_mean: Sequence[float] = IMAGENET_MEAN,
    pixel_std: Sequence[float] = IMAGENET_STD,
) -> Tuple[Tensor, Size]:
    original = (image.shape[0], image.shape[1])
    resized = resize_image(image, (input_size, input_size))
    return to_model_input([resized], pixel_mean, pixel_std)[0], original


def prepare_test(
    sample: Sample,
    input_size: int,
    pixel_mean: Sequence[float] = IMAGENET_MEAN,
    pixel_std: Sequence[float] = IMAGENET_STD,
) -> Tuple[Tensor, Size]:
    """Returns the (3, S, S) model input and the original (height, width)."""
    return prepare_image(sample.image, input_size, pixel_mean, pixel_std)
