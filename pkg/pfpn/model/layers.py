from __future__ import annotations

import math
from typing import Tuple

import torch.nn.functional as F
from torch import Tensor, nn
from torch.nn.modules.batchnorm import _BatchNorm


class ConvNormAct(nn.Module):
    """Conv -> BatchNorm -> ReLU (or no activation). conv/norm/act are plain attributes."""

    def __init__(
        self,
        in_channels: int,
        out_channels: int,
        kernel_size: int = 3,
        stride: int = 1,
        act: bool = True,
        momentum: float = 0.1,
        eps: float = 1e-5,
    ):
        super().__init__()
        self.conv = nn.Conv2d(
            in_channels, out_channels, kernel_size,
            stride=stride, padding=kernel_size // 2, bias=False,
        )
        self.norm = nn.BatchNorm2d(out_channels, eps=eps, momentum=momentum)
        self.act = nn.ReLU() if act else nn.Identity()

    def forward(self, x: Tensor) -> Tensor:
        return self.act(self.norm(self.conv(x)))


def upsample_to(x: Tensor, size: Tuple[int, int]) -> Tensor:
    """Bilinear, half-pixel centres (align_corners=False); identity when already at size."""
    if tuple(x.shape[-2:]) == tuple(size):
        return x
    return F.interpolate(x, size=tuple(size), mode="bilinear", align_corners=False)


def init_parameters(module: nn.Module) -> None:
    """Fan-in scaled uniform init. Draws from the current torch RNG."""
    for m in module.modules():
        if isinstance(m, nn.Conv2d):
            nn.init.kaiming_uniform_(m.weight, mode="fan_in", nonlinearity="relu")
            if m.bias is not None:
                fan_in = m.weight[0].numel()
                bound = 1.0 / math.sqrt(fan_in)
                nn.init.uniform_(m.bias, -bound, bound)
        elif isinstance(m, _BatchNorm):
            m.reset_running_stats()
            nn.init.ones_(m.weight)
            nn.init.zeros_(m.bias)


def batch_norms(module: nn.Module):
    return [m for m in module.modules() if isinstance(m, _BatchNorm)]


def keep_frozen_norms_in_eval(module: nn.Module) -> None:
    for m in batch_norms(module):
        if getattr(m, "frozen", False):
            m.eval()

