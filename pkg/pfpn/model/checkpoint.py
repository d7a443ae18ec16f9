from __future__ import annotations

import os
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, Optional, Tuple

import torch
from pydantic import ValidationError
from torch import Tensor, nn

from ..errors import CheckpointError
from ..schemas import ModelConfig
from .network import SaliencyNetwork

CHECKPOINT_VERSION = 1


@dataclass(frozen=True)
class Checkpoint:
    """
    One archive: model config, named tensors (parameters and norm running
    statistics), the training step, and optionally the optimizer state.
    Tensor names follow tm1.<level>, fpm.<t>.<level>.<layer>, tm2.<level>,
    fm.<layer>, side.<level> (plus backbone.*).
    """
    config: ModelConfig
    state_dict: Dict[str, Tensor]
    step: int
    optimizer_state: Optional[Dict[str, Any]] = None


def save_checkpoint(
    path: Path | str,
    model: SaliencyNetwork,
    *,
    step: int,
    optimizer: Optional[torch.optim.Optimizer] = None,
) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    payload = {
        "version": CHECKPOINT_VERSION,
        "config": model.config.model_dump(mode="json"),
        "state_dict": model.state_dict(),
        "step": int(step),
        "optimizer": optimizer.state_dict() if optimizer is not None else None,
    }
    tmp = path.with_name(path.name + ".tmp")
    torch.save(payload, tmp)
    os.replace(tmp, path)
    return path


def read_checkpoint(path: Path | str) -> Checkpoint:
    path = Path(path)
    try:
        payload = torch.load(path, map_location="cpu", weights_only=True)
    except FileNotFoundError as e:
        raise CheckpointError(f"{path}: no such checkpoint") from e
    except Exception as e:
        raise CheckpointError(f"{path}: not a readable checkpoint ({e})") from e

    if not isinstance(payload, dict) or payload.get("version") != CHECKPOINT_VERSION:
        raise CheckpointError(f"{path}: unsupported checkpoint layout")
    try:
        config = ModelConfig.model_validate(payload["config"])
    except ValidationError as e:
        raise CheckpointError(f"{path}: stored model config is invalid: {e}") from e

    return Checkpoint(
        config=config,
        state_dict=payload["state_dict"],
        step=int(payload["step"]),
        optimizer_state=payload.get("optimizer"),
    )


def config_differences(a: ModelConfig, b: ModelConfig) -> Dict[str, Tuple[Any, Any]]:
    da, db = a.model_dump(mode="json"), b.model_dump(mode="json")
    return {k: (da[k], db[k]) for k in da if da[k] != db.get(k)}


def load_model(
    path: Path | str,
    expected: Optional[ModelConfig] = None,
    backbone: Optional[nn.Module] = None,
) -> Tuple[SaliencyNetwork, Checkpoint]:
    """Rebuild the network stored at path, in eval mode."""
    ckpt = read_checkpoint(path)
    if expected is not None:
        diff = config_differences(expected, ckpt.config)
        if diff:
            detail = ", ".join(f"{k}: config={v[0]!r} checkpoint={v[1]!r}" for k, v in diff.items())
            raise CheckpointError(f"{path}: model config does not match checkpoint ({detail})")

    model = SaliencyNetwork(ckpt.config, backbone)
    try:
        model.load_state_dict(ckpt.state_dict, strict=True)
    except RuntimeError as e:
        raise CheckpointError(f"{path}: tensors do not fit the stored config: {e}") from e
    model.eval()
    return model, ckpt
