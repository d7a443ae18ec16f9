from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Dict, Optional, Sequence, Tuple, Union

import torch
from torch import Tensor

from ..errors import ConfigurationError, InputError
from ..model.types import SaliencyMap, SideOutputs

PRED_CLAMP = 1e-7
FIRST_SIDE_WEIGHT = 0.5
SIDE_WEIGHT = 0.3

Scalar = Union[Tensor, float]


def _scalar(v: Scalar) -> float:
    return v.item() if isinstance(v, Tensor) else float(v)


@dataclass(frozen=True)
class LossBreakdown:
    """total = final + 0.5 * side[0] + 0.3 * sum(side[1:]); side[0] is the finest level."""
    final_loss: Scalar
    side_losses: Tuple[Scalar, ...]
    total: Scalar

    def to_record(self) -> Dict[str, Any]:
        return {
            "total": _scalar(self.total),
            "final": _scalar(self.final_loss),
            "side": [_scalar(s) for s in self.side_losses],
        }


def bce_loss(pred: SaliencyMap, target: Tensor, eps: float = PRED_CLAMP) -> Tensor:
    """Pixel-mean binary cross-entropy on probabilities, clamped to [eps, 1 - eps]."""
    if pred.shape != target.shape:
        raise InputError(f"prediction {tuple(pred.shape)} and target {tuple(target.shape)} differ in shape")
    p = pred.clamp(eps, 1.0 - eps)
    target = target.to(p.dtype)
    return -(target * torch.log(p) + (1.0 - target) * torch.log(1.0 - p)).mean()


def combine_losses(final_loss: Scalar, side_losses: Sequence[Scalar]) -> LossBreakdown:
    side_losses = tuple(side_losses)
    if not side_losses:
        raise ConfigurationError("deep supervision needs at least one side output")
    rest = sum(side_losses[1:], 0.0)
    total = final_loss + FIRST_SIDE_WEIGHT * side_losses[0] + SIDE_WEIGHT * rest
    return LossBreakdown(final_loss=final_loss, side_losses=side_losses, total=total)


def total_loss(
    final: SaliencyMap,
    sides: SideOutputs,
    target: Tensor,
    num_levels: Optional[int] = None,
) -> LossBreakdown:
    if num_levels is not None and len(sides) != num_levels:
        raise ConfigurationError(f"expected {num_levels} side outputs, got {len(sides)}")
    return combine_losses(bce_loss(final, target), [bce_loss(s, target) for s in sides])
