from __future__ import annotations

import logging
from pathlib import Path
from typing import List, Optional

from ..data.dataset import IMAGE_SUFFIXES, index_files, read_image, write_saliency
from ..errors import InputError
from ..model.checkpoint import load_model
from ..model.inference import predict_saliency
from ..schemas import ModelConfig

logger = logging.getLogger(__name__)


def list_images(source: Path | str) -> List[Path]:
    source = Path(source)
    if source.is_file():
        return [source]
    if source.is_dir():
        found = index_files(source, IMAGE_SUFFIXES)
        if found:
            return [found[k] for k in sorted(found)]
        raise InputError(f"{source}: no images found")
    raise InputError(f"{source}: no such file or directory")


def predict(
    checkpoint: Path | str,
    source: Path | str,
    out_dir: Path | str,
    expected: Optional[ModelConfig] = None,
) -> List[Path]:
    """Write one 8-bit <basename>.png prediction per input image into out_dir."""
    model, ckpt = load_model(checkpoint, expected)
    out_dir = Path(out_dir)

    written = []
    for path in list_images(source):
        saliency = predict_saliency(model, read_image(path))
        written.append(write_saliency(out_dir / f"{path.stem}.png", saliency))
    logger.info("wrote %d predictions to %s (checkpoint step %d)", len(written), out_dir, ckpt.step)
    return written
