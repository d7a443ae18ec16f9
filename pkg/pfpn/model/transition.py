from __future__ import annotations

from typing import Sequence, Tuple

from torch import nn

from ..errors import ConfigurationError
from .layers import upsample_to
from .types import FeaturePyramid


class TransitionIn(nn.ModuleList):
    """TM1: one bare 1x1 conv per level, mapping backbone widths to a common width."""

    def __init__(self, in_channels: Sequence[int], out_channels: int):
        super().__init__(nn.Conv2d(c, out_channels, 1) for c in in_channels)
        self.out_channels = out_channels

    def forward(self, raw: FeaturePyramid) -> FeaturePyramid:
        if len(raw) != len(self):
            raise ConfigurationError(f"TM1 built for {len(self)} levels, got a {len(raw)}-level pyramid")
        return FeaturePyramid(tuple(conv(level) for conv, level in zip(self, raw)))


class TransitionOut(nn.ModuleList):
    """TM2: bilinear upsampling to the input resolution, then a 1x1 conv down to the head width."""

    def __init__(self, num_levels: int, in_channels: int, out_channels: int):
        super().__init__(nn.Conv2d(in_channels, out_channels, 1) for _ in range(num_levels))
        self.out_channels = out_channels

    def forward(self, pyramid: FeaturePyramid, size: Tuple[int, int]) -> FeaturePyramid:
        if len(pyramid) != len(self):
            raise ConfigurationError(f"TM2 built for {len(self)} levels, got a {len(pyramid)}-level pyramid")
        return FeaturePyramid(tuple(conv(upsample_to(level, size)) for conv, level in zip(self, pyramid)))
