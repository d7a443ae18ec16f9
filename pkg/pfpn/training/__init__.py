from .loss import LossBreakdown, bce_loss, combine_losses, total_loss
from .predict import list_images, predict
from .trainer import TrainResult, build_optimizer, train
from .ablation import AblationRow, AblationSetting, ablation_settings, format_table, run_ablation

__all__ = [
    "LossBreakdown",
    "bce_loss",
    "combine_losses",
    "total_loss",
    "list_images",
    "predict",
    "TrainResult",
    "build_optimizer",
    "train",
    "AblationRow",
    "AblationSetting",
    "ablation_settings",
    "format_table",
    "run_ablation",
]
