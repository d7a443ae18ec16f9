from __future__ import annotations

from typing import Iterator, Optional

import torch
from torch import Tensor, nn

from ..errors import ConfigurationError, InputError
from ..schemas import BackboneId, ModelConfig
from .backbone import TinyBackbone
from .fpm import PolishChain
from .heads import FusionModule, SideOutputHeads
from .layers import init_parameters, keep_frozen_norms_in_eval
from .transition import TransitionIn, TransitionOut
from .types import FeaturePyramid, ModelOutput


class SaliencyNetwork(nn.Module):
    """
    backbone -> TM1 -> T x FPM -> TM2 -> (side heads, fusion module).

    Parameters outside an external backbone are initialised from
    config.init_seed without touching the global torch RNG.
    """

    def __init__(self, config: ModelConfig, backbone: Optional[nn.Module] = None):
        super().__init__()
        if config.backbone_id is BackboneId.EXTERNAL and backbone is None:
            raise ConfigurationError("backbone_id=external needs a backbone module")
        if config.backbone_id is BackboneId.TINY and backbone is not None:
            raise ConfigurationError("backbone_id=tiny builds its own backbone; pass none")
        self.config = config

        n = config.num_levels
        with torch.random.fork_rng(devices=[]):
            torch.manual_seed(config.init_seed)

            own_backbone = backbone is None
            if own_backbone:
                backbone = TinyBackbone(config.backbone, config.norm_momentum, config.norm_eps)
            self.backbone = backbone
            self.tm1 = TransitionIn(config.backbone.channels_per_level, config.tm1_channels)
            self.fpm = PolishChain(
                config.num_fpms, n, config.tm1_channels,
                share_weights=config.share_fpm_weights,
                momentum=config.norm_momentum, eps=config.norm_eps,
            )
            self.tm2 = TransitionOut(n, config.tm1_channels, config.tm2_channels)
            self.fm = FusionModule(n, config.tm2_channels, config.fusion_width)
            self.side = SideOutputHeads(n, config.tm2_channels)

            for part in self.head_modules(include_backbone=own_backbone):
                init_parameters(part)

    def head_modules(self, include_backbone: bool = False) -> Iterator[nn.Module]:
        if include_backbone:
            yield self.backbone
        yield from (self.tm1, self.fpm, self.tm2, self.fm, self.side)

    def forward(self, image: Tensor) -> ModelOutput:
        size = self.config.input_size
        if image.dim() != 4 or tuple(image.shape[1:]) != (3, size, size):
            raise InputError(f"expected images of shape (B, 3, {size}, {size}), got {tuple(image.shape)}")

        raw = self.backbone(image)
        if not isinstance(raw, FeaturePyramid):
            raw = FeaturePyramid(tuple(raw))
        raw.check_hierarchy()
        pyramid = self.tm1(raw)
        pyramid = self.fpm(pyramid)
        pyramid = self.tm2(pyramid, (size, size))
        return ModelOutput(final=self.fm(pyramid), sides=self.side(pyramid))

    def train(self, mode: bool = True) -> "SaliencyNetwork":
        super().train(mode)
        keep_frozen_norms_in_eval(self.backbone)
        return self
