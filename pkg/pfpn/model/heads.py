from __future__ import annotations

import torch
from torch import Tensor, nn

from ..errors import ConfigurationError
from .types import FeaturePyramid, SaliencyMap, SideOutputs

# float32 sigmoid hits exactly 0 or 1 past |x| ~ 17; maps stay inside the open interval
PROB_EPS = 1e-7


def _probability(logits: Tensor) -> Tensor:
    return torch.sigmoid(logits).clamp(PROB_EPS, 1.0 - PROB_EPS)


class FusionModule(nn.Sequential):
    """
    Concat all TM2 levels -> 3x3 conv + ReLU -> 3x3 conv + ReLU -> 1x1 conv -> sigmoid,
    clamped to [PROB_EPS, 1 - PROB_EPS].
    Layer indices (fm.0, fm.2, fm.4) are the checkpoint names.
    """

    def __init__(self, num_levels: int, in_channels: int, width: int):
        super().__init__(
            nn.Conv2d(num_levels * in_channels, width, 3, padding=1),
            nn.ReLU(),
            nn.Conv2d(width, width, 3, padding=1),
            nn.ReLU(),
            nn.Conv2d(width, 1, 1),
            nn.Sigmoid(),
        )
        self.num_levels = num_levels

    @property
    def output_layer(self) -> nn.Conv2d:
        return self[4]

    def forward(self, pyramid: FeaturePyramid) -> SaliencyMap:
        if len(pyramid) != self.num_levels:
            raise ConfigurationError(f"fusion expects {self.num_levels} levels, got {len(pyramid)}")
        sizes = {tuple(level.shape[-2:]) for level in pyramid}
        if len(sizes) != 1:
            raise ConfigurationError(f"fusion needs every level at one resolution, got {sorted(sizes)}")
        x: Tensor = torch.cat(tuple(pyramid), dim=1)
        for layer in self:
            x = layer(x)
        return x.clamp(PROB_EPS, 1.0 - PROB_EPS)


class SideOutputHeads(nn.ModuleList):
    """Per-level 1x1 conv + sigmoid on the TM2 pyramid, used only for deep supervision."""

    def __init__(self, num_levels: int, in_channels: int):
        super().__init__(nn.Conv2d(in_channels, 1, 1) for _ in range(num_levels))

    def forward(self, pyramid: FeaturePyramid) -> SideOutputs:
        if len(pyramid) != len(self):
            raise ConfigurationError(f"{len(self)} side heads for a {len(pyramid)}-level pyramid")
        return SideOutputs(tuple(_probability(head(level)) for head, level in zip(self, pyramid)))
