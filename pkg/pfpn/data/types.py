from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import InputError


@dataclass(frozen=True)
class Sample:
    """
    image: float32 (H, W, 3) in [0, 1]
    mask:  uint8 (H, W) with values in {0, 1}
    """
    image: np.ndarray
    mask: np.ndarray
    id: str

    def __post_init__(self):
        if self.image.ndim != 3 or self.image.shape[2] != 3:
            raise InputError(f"{self.id}: image must be (H, W, 3), got {self.image.shape}")
        if self.mask.shape != self.image.shape[:2]:
            raise InputError(f"{self.id}: mask {self.mask.shape} does not match image {self.image.shape[:2]}")
        if not np.isin(self.mask, (0, 1)).all():
            raise InputError(f"{self.id}: mask is not binary")

    @property
    def size(self) -> tuple[int, int]:
        return self.image.shape[0], self.image.shape[1]

    @property
    def foreground_fraction(self) -> float:
        return float(self.mask.mean())
