from __future__ import annotations

import numpy as np
import torch

from ..data.transforms import prepare_image
from .layers import upsample_to
from .network import SaliencyNetwork


def predict_saliency(model: SaliencyNetwork, image: np.ndarray) -> np.ndarray:
    """
    One RGB image in [0, 1] -> float64 saliency map at the image's own
    resolution (resize to input_size, predict, bilinear back).
    """
    cfg = model.config
    x, original = prepare_image(image, cfg.input_size, cfg.pixel_mean, cfg.pixel_std)

    was_training = model.training
    model.eval()
    try:
        with torch.no_grad():
            final = model(x[None]).final
            final = upsample_to(final, original)
    finally:
        model.train(was_training)
    return final[0, 0].clamp(0.0, 1.0).double().numpy()
