from __future__ import annotations

import logging
from typing import Iterable, List

import torch
from torch import Tensor, nn

from ..errors import InputError
from ..schemas import BackboneSpec
from .layers import ConvNormAct, batch_norms, keep_frozen_norms_in_eval
from .types import FeaturePyramid

logger = logging.getLogger(__name__)


class TinyBackbone(nn.Module):
    """
    Desk-scale stand-in for ResNet/VGG: one stage per pyramid level, each a
    short stack of 3x3 conv + BN + ReLU whose first layer downsamples
    (strided conv, or max-pool for the VGG-style preset).
    """

    def __init__(self, spec: BackboneSpec, momentum: float = 0.1, eps: float = 1e-5):
        super().__init__()
        self.spec = spec

        stages: List[nn.Module] = []
        in_ch = 3
        for ch, stride in zip(spec.channels_per_level, spec.strides):
            layers: List[nn.Module] = []
            entry_stride = stride
            if spec.downsample == "maxpool" and stride == 2:
                layers.append(nn.MaxPool2d(2, ceil_mode=True))
                entry_stride = 1
            layers.append(ConvNormAct(in_ch, ch, 3, stride=entry_stride, momentum=momentum, eps=eps))
            for _ in range(spec.convs_per_level - 1):
                layers.append(ConvNormAct(ch, ch, 3, momentum=momentum, eps=eps))
            stages.append(nn.Sequential(*layers))
            in_ch = ch
        self.stages = nn.ModuleList(stages)

    @property
    def total_stride(self) -> int:
        return self.spec.first_stride * 2 ** (self.spec.num_levels - 1)

    def forward(self, image: Tensor) -> FeaturePyramid:
        if image.dim() != 4 or image.shape[1] != 3:
            raise InputError(f"expected a (B, 3, H, W) image batch, got {tuple(image.shape)}")
        h, w = image.shape[-2:]
        if h % self.total_stride or w % self.total_stride:
            raise InputError(f"input {h}x{w} is not divisible by {self.total_stride}")

        levels = []
        x = image
        for stage in self.stages:
            x = stage(x)
            levels.append(x)
        return FeaturePyramid(tuple(levels))

    def train(self, mode: bool = True) -> "TinyBackbone":
        super().train(mode)
        keep_frozen_norms_in_eval(self)
        return self


def freeze_normalization(backbone: nn.Module) -> nn.Module:
    """
    Pin every BatchNorm in the backbone to its stored statistics, in training
    mode too. Affine weights stay trainable. Idempotent.
    """
    for m in batch_norms(backbone):
        m.frozen = True
        m.eval()
    return backbone


def is_normalization_frozen(backbone: nn.Module) -> bool:
    norms = batch_norms(backbone)
    return bool(norms) and all(getattr(m, "frozen", False) for m in norms)


@torch.no_grad()
def calibrate_normalization(backbone: nn.Module, batches: Iterable[Tensor]) -> int:
    """
    Re-estimate backbone BN statistics as a cumulative average over batches.
    Without pretrained weights this is what gives the frozen statistics meaning.
    Returns the number of batches seen.
    """
    norms = batch_norms(backbone)
    saved = [(m.momentum, m.training) for m in norms]
    for m in norms:
        m.reset_running_stats()
        m.momentum = None
        nn.Module.train(m, True)

    seen = 0
    try:
        for images in batches:
            backbone(images)
            seen += 1
    finally:
        for m, (momentum, training) in zip(norms, saved):
            m.momentum = momentum
            nn.Module.train(m, training)
    logger.info("calibrated %d backbone norm layers over %d batches", len(norms), seen)
    return seen
