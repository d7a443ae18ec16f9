from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator, List, Optional, Sequence, Tuple

import numpy as np
import torch
from torch import Tensor, nn

from ..config import CHECKPOINT_NAME, NUM_WORKERS, TRAIN_LOG_NAME
from ..data.dataset import load_dataset
from ..data.synthetic import generate_synthetic
from ..data.transforms import augment_train, to_model_input
from ..data.types import Sample
from ..errors import ConfigurationError, InputError, TrainingDivergedError
from ..model.backbone import calibrate_normalization, freeze_normalization
from ..model.checkpoint import save_checkpoint
from ..model.network import SaliencyNetwork
from ..schemas import TrainConfig
from ..trace import JsonlLog
from .loss import total_loss

logger = logging.getLogger(__name__)

ADAM_BETAS = (0.9, 0.999)
ADAM_EPS = 1e-8

# salts keeping the random streams of sample order, augmentation and
# calibration apart for one seed
_ORDER, _AUGMENT, _CALIBRATE = 0, 1, 2


@dataclass(frozen=True)
class TrainResult:
    checkpoint: Path
    log_path: Path
    steps: int
    losses: List[float] = field(default_factory=list)
    smoothed: List[float] = field(default_factory=list)
    periodic: List[Path] = field(default_factory=list)


def build_optimizer(params, learning_rate: float) -> torch.optim.Adam:
    """Adam with the usual defaults, constant learning rate."""
    return torch.optim.Adam(params, lr=learning_rate, betas=ADAM_BETAS, eps=ADAM_EPS)


def load_training_samples(config: TrainConfig, workers: int = NUM_WORKERS) -> List[Sample]:
    if config.data.root is not None:
        return load_dataset(config.data.root, workers)
    return generate_synthetic(config.data.synthetic)


# -----------------------------
# Batches
# -----------------------------

def sample_indices(num_samples: int, step: int, batch_size: int, seed: int) -> List[int]:
    """
    Indices of the batch for a 1-based step: consecutive slices of a
    per-epoch permutation, so every sample is seen once per epoch.
    """
    out = []
    for pos in range((step - 1) * batch_size, step * batch_size):
        epoch, offset = divmod(pos, num_samples)
        perm = np.random.default_rng([seed, _ORDER, epoch]).permutation(num_samples)
        out.append(int(perm[offset]))
    return out


def make_batch(
    samples: Sequence[Sample],
    step: int,
    config: TrainConfig,
    salt: int = _AUGMENT,
) -> Tuple[Tensor, Tensor]:
    """Augmented (images, masks) for one step; item i draws from its own stream."""
    picked = sample_indices(len(samples), step, config.batch_size, config.seed)
    augmented = [
        augment_train(samples[idx], np.random.default_rng([config.seed, salt, step, i]), config.data.augment)
        for i, idx in enumerate(picked)
    ]
    images = to_model_input([s.image for s in augmented], config.model.pixel_mean, config.model.pixel_std)
    masks = torch.from_numpy(np.stack([s.mask for s in augmented])).to(torch.float32)[:, None]
    return images, masks


def calibration_batches(samples: Sequence[Sample], config: TrainConfig) -> Iterator[Tensor]:
    for k in range(1, config.calibration_batches + 1):
        yield make_batch(samples, k, config, salt=_CALIBRATE)[0]


# -----------------------------
# Loop
# -----------------------------

def _check_config(config: TrainConfig) -> None:
    if config.data.augment.crop_to != config.model.input_size:
        raise ConfigurationError(
            f"data.augment.crop_to={config.data.augment.crop_to} must equal "
            f"model.input_size={config.model.input_size}"
        )


def train(
    config: TrainConfig,
    output_dir: Path | str,
    *,
    samples: Optional[Sequence[Sample]] = None,
    backbone: Optional[nn.Module] = None,
    workers: int = NUM_WORKERS,
) -> TrainResult:
    """
    max_iterations Adam steps on the deep-supervision loss. Writes a JSONL
    record per step, ckpt_step<N>.pt every checkpoint_every steps and the
    final model.pt into output_dir. Bitwise reproducible with num_threads=1.
    """
    _check_config(config)
    output_dir = Path(output_dir)
    output_dir.mkdir(parents=True, exist_ok=True)
    torch.set_num_threads(config.num_threads)
    torch.manual_seed(config.seed)

    if samples is None:
        samples = load_training_samples(config, workers)
    if not samples:
        raise InputError("no training samples")

    model = SaliencyNetwork(config.model, backbone)
    if config.freeze_backbone_norm:
        if backbone is None and config.calibration_batches:
            calibrate_normalization(model.backbone, calibration_batches(samples, config))
        freeze_normalization(model.backbone)
    model.train()

    optimizer = build_optimizer([p for p in model.parameters() if p.requires_grad], config.learning_rate)

    log_path = output_dir / TRAIN_LOG_NAME
    log_path.unlink(missing_ok=True)
    log = JsonlLog(log_path)

    losses: List[float] = []
    smoothed: List[float] = []
    periodic: List[Path] = []
    start = time.time()
    logger.info(
        "training %d steps (T=%d, shared=%s, batch=%d, lr=%g) on %d samples",
        config.max_iterations, config.model.num_fpms, config.model.share_fpm_weights,
        config.batch_size, config.learning_rate, len(samples),
    )

    for step in range(1, config.max_iterations + 1):
        images, masks = make_batch(samples, step, config)
        out = model(images)
        breakdown = total_loss(out.final, out.sides, masks, config.model.num_levels)

        value = breakdown.total.item()
        if not math.isfinite(value):
            logger.error("loss diverged at step %d: %r", step, value)
            raise TrainingDivergedError(step, value)

        optimizer.zero_grad(set_to_none=True)
        breakdown.total.backward()
        optimizer.step()

        losses.append(value)
        prev = smoothed[-1] if smoothed else value
        smoothed.append(config.loss_smoothing * prev + (1.0 - config.loss_smoothing) * value)
        log.append({
            "step": step,
            **breakdown.to_record(),
            "lr": config.learning_rate,
            "wall_time": round(time.time() - start, 4),
        })

        if step % config.checkpoint_every == 0 and step != config.max_iterations:
            periodic.append(save_checkpoint(
                output_dir / f"ckpt_step{step:06d}.pt", model, step=step, optimizer=optimizer,
            ))
        if step == 1 or step % max(config.max_iterations // 10, 1) == 0:
            logger.info("step %d/%d total=%.4f smoothed=%.4f", step, config.max_iterations, value, smoothed[-1])

    final = save_checkpoint(output_dir / CHECKPOINT_NAME, model, step=config.max_iterations, optimizer=optimizer)
    logger.info("saved %s after %.1fs", final, time.time() - start)
    return TrainResult(
        checkpoint=final,
        log_path=log_path,
        steps=config.max_iterations,
        losses=losses,
        smoothed=smoothed,
        periodic=periodic,
    )
