from .types import FeaturePyramid, LevelShape, ModelOutput, SaliencyMap, SideOutputs
from .layers import ConvNormAct, upsample_to
from .backbone import TinyBackbone, calibrate_normalization, freeze_normalization, is_normalization_frozen
from .transition import TransitionIn, TransitionOut
from .fpm import FPMBlock, FeaturePolishingModule, PolishChain
from .heads import FusionModule, SideOutputHeads
from .network import SaliencyNetwork
from .checkpoint import Checkpoint, load_model, read_checkpoint, save_checkpoint
from .inference import predict_saliency

__all__ = [
    "FeaturePyramid",
    "LevelShape",
    "ModelOutput",
    "SaliencyMap",
    "SideOutputs",
    "ConvNormAct",
    "upsample_to",
    "TinyBackbone",
    "calibrate_normalization",
    "freeze_normalization",
    "is_normalization_frozen",
    "TransitionIn",
    "TransitionOut",
    "FPMBlock",
    "FeaturePolishingModule",
    "PolishChain",
    "FusionModule",
    "SideOutputHeads",
    "SaliencyNetwork",
    "Checkpoint",
    "load_model",
    "read_checkpoint",
    "save_checkpoint",
    "predict_saliency",
]
