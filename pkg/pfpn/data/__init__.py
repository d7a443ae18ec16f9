from .types import Sample
from .synthetic import generate_synthetic
from .transforms import augment_train, hflip, prepare_image, prepare_test, resize_image, resize_mask, to_model_input
from .dataset import load_dataset, match_pairs, read_image, read_mask, read_saliency, save_dataset, write_saliency

__all__ = [
    "Sample",
    "generate_synthetic",
    "augment_train",
    "hflip",
    "prepare_image",
    "prepare_test",
    "resize_image",
    "resize_mask",
    "to_model_input",
    "load_dataset",
    "match_pairs",
    "read_image",
    "read_mask",
    "read_saliency",
    "save_dataset",
    "write_saliency",
]
