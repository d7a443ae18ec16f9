from __future__ import annotations

from typing import List

import torch
from torch import Tensor, nn

from ..errors import ConfigurationError
from .layers import ConvNormAct, upsample_to
from .types import FeaturePyramid


class FPMBlock(nn.Module):
    """
    Polishes pyramid level k (0-based here) from levels k..N-1:

        c_j   = ReLU(BN(Conv3x3(f_j)))           j = k..N-1
        u_j   = upsample(c_j) to f_k's size       (u_k = c_k)
        p_k   = BN(Conv1x1(concat(u_k..u_{N-1})))
        f_k^p = ReLU(p_k + f_k)

    Shallower levels (j < k) are never read.
    """

    def __init__(self, level: int, num_levels: int, channels: int, momentum: float = 0.1, eps: float = 1e-5):
        super().__init__()
        if not 0 <= level < num_levels:
            raise IndexError(f"level {level} out of range for a {num_levels}-level pyramid")
        self.level = level
        self.num_levels = num_levels
        self.channels = channels

        self.context = nn.ModuleList(
            ConvNormAct(channels, channels, 3, momentum=momentum, eps=eps)
            for _ in range(level, num_levels)
        )
        # the deepest block still goes through the 1x1 fusion with a single branch
        self.fuse = ConvNormAct(channels * (num_levels - level), channels, 1, act=False, momentum=momentum, eps=eps)
        self.act = nn.ReLU()

    def forward(self, pyramid: FeaturePyramid) -> Tensor:
        if len(pyramid) != self.num_levels:
            raise ConfigurationError(f"FPM block expects {self.num_levels} levels, got {len(pyramid)}")
        pyramid.check_channels(self.channels)
        f_k = pyramid[self.level]
        size = f_k.shape[-2:]

        branches: List[Tensor] = []
        for j, conv in enumerate(self.context, start=self.level):
            c_j = conv(pyramid[j])
            branches.append(c_j if j == self.level else upsample_to(c_j, size))

        p_k = self.fuse(torch.cat(branches, dim=1))
        return self.act(p_k + f_k)


class FeaturePolishingModule(nn.ModuleList):
    """N parallel blocks, all reading the same (unpolished) input pyramid."""

    def __init__(self, num_levels: int, channels: int, momentum: float = 0.1, eps: float = 1e-5):
        super().__init__(FPMBlock(k, num_levels, channels, momentum, eps) for k in range(num_levels))

    def forward(self, pyramid: FeaturePyramid) -> FeaturePyramid:
        if len(pyramid) != len(self):
            raise ConfigurationError(f"FPM holds {len(self)} block parameter sets, pyramid has {len(pyramid)} levels")
        pyramid.check_hierarchy()
        return FeaturePyramid(tuple(block(pyramid) for block in self))


class PolishChain(nn.ModuleList):
    """
    T FPMs applied one after another. With share_weights a single FPM is
    stored and reused for every stage.
    """

    def __init__(
        self,
        num_fpms: int,
        num_levels: int,
        channels: int,
        share_weights: bool = False,
        momentum: float = 0.1,
        eps: float = 1e-5,
    ):
        if num_fpms < 0:
            raise ConfigurationError(f"num_fpms must be >= 0, got {num_fpms}")
        stored = min(num_fpms, 1) if share_weights else num_fpms
        super().__init__(FeaturePolishingModule(num_levels, channels, momentum, eps) for _ in range(stored))
        self.num_fpms = num_fpms
        self.share_weights = share_weights

    def stage(self, t: int) -> FeaturePolishingModule:
        if not 0 <= t < self.num_fpms:
            raise IndexError(f"stage {t} out of range for {self.num_fpms} FPMs")
        return self[0] if self.share_weights else self[t]

    def forward(self, pyramid: FeaturePyramid) -> FeaturePyramid:
        for t in range(self.num_fpms):
            pyramid = self.stage(t)(pyramid)
        return pyramid
