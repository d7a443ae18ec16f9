from __future__ import annotations

from enum import Enum
from pathlib import Path
from typing import List, Literal, Optional, Tuple, TypeVar

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

NUM_THRESHOLDS = 256

_M = TypeVar("_M", bound=BaseModel)


def with_updates(obj: _M, /, **updates) -> _M:
    """model_copy() skips validation; this re-validates the updated fields."""
    return type(obj).model_validate({**obj.model_dump(), **updates})


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


# -----------------------------
# Model
# -----------------------------

class BackboneId(str, Enum):
    """
    - TINY: the trainable desk-scale backbone shipped with the package
    - EXTERNAL: caller passes its own nn.Module producing the pyramid
    """
    TINY = "tiny"
    EXTERNAL = "external"


class BackboneSpec(_Section):
    channels_per_level: Tuple[int, ...] = (8, 16, 32, 64, 64)
    convs_per_level: int = Field(2, ge=1)
    first_stride: Literal[1, 2] = 1
    downsample: Literal["conv", "maxpool"] = "conv"

    @field_validator("channels_per_level")
    @classmethod
    def _positive_channels(cls, v: Tuple[int, ...]) -> Tuple[int, ...]:
        if len(v) < 2:
            raise ValueError("a pyramid needs at least 2 levels")
        if any(c <= 0 for c in v):
            raise ValueError(f"channel counts must be positive, got {v}")
        return v

    @property
    def num_levels(self) -> int:
        return len(self.channels_per_level)

    @property
    def strides(self) -> Tuple[int, ...]:
        return (self.first_stride,) + (2,) * (self.num_levels - 1)

    @classmethod
    def tiny(cls) -> "BackboneSpec":
        return cls()

    @classmethod
    def tiny_vgg(cls) -> "BackboneSpec":
        # six blocks split by max-pooling, like VGG-16 with its fc layers made convolutional
        return cls(channels_per_level=(8, 16, 32, 64, 64, 64), downsample="maxpool")


class ModelConfig(_Section):
    num_levels: int = Field(5, ge=2)
    num_fpms: int = Field(2, ge=0)
    tm1_channels: int = Field(32, gt=0)
    tm2_channels: int = Field(16, gt=0)
    # width of the two 3x3 fusion layers; None means tm2_channels
    fusion_channels: Optional[int] = Field(None, gt=0)
    input_size: int = Field(80, gt=0)
    share_fpm_weights: bool = False
    backbone_id: BackboneId = BackboneId.TINY
    backbone: BackboneSpec = Field(default_factory=BackboneSpec.tiny)
    norm_momentum: float = Field(0.1, gt=0.0, le=1.0)
    norm_eps: float = Field(1e-5, gt=0.0)
    init_seed: int = 0
    pixel_mean: Tuple[float, float, float] = (0.485, 0.456, 0.406)
    pixel_std: Tuple[float, float, float] = (0.229, 0.224, 0.225)

    @field_validator("pixel_std")
    @classmethod
    def _positive_std(cls, v: Tuple[float, float, float]) -> Tuple[float, float, float]:
        if any(s <= 0 for s in v):
            raise ValueError(f"pixel_std must be positive, got {v}")
        return v

    @model_validator(mode="after")
    def _check_geometry(self) -> "ModelConfig":
        if self.backbone.num_levels != self.num_levels:
            raise ValueError(
                f"backbone.channels_per_level has {self.backbone.num_levels} levels "
                f"but num_levels={self.num_levels}"
            )
        stride = self.total_stride
        if self.input_size % stride:
            raise ValueError(f"input_size={self.input_size} is not divisible by {stride}")
        return self

    @property
    def total_stride(self) -> int:
        return self.backbone.first_stride * 2 ** (self.num_levels - 1)

    @property
    def fusion_width(self) -> int:
        return self.fusion_channels or self.tm2_channels

    @classmethod
    def published(cls, **overrides) -> "ModelConfig":
        """Published sizes: 256-channel TM1, 32-channel TM2, 256x256 input."""
        return cls.model_validate({"tm1_channels": 256, "tm2_channels": 32, "input_size": 256, **overrides})

    @classmethod
    def vgg_style(cls, **overrides) -> "ModelConfig":
        return cls.model_validate({"num_levels": 6, "backbone": BackboneSpec.tiny_vgg(), "input_size": 96, **overrides})


# -----------------------------
# Data
# -----------------------------

class ShapeKind(str, Enum):
    ELLIPSE = "ellipse"
    RECTANGLE = "rectangle"
    BLOB = "blob"


class SyntheticSpec(_Section):
    num_samples: int = Field(64, gt=0)
    canvas_size: int = Field(96, ge=64)
    # sorted by value, as the validator returns it
    shapes: Tuple[ShapeKind, ...] = Field(
        (ShapeKind.BLOB, ShapeKind.ELLIPSE, ShapeKind.RECTANGLE), validate_default=True,
    )
    clutter_level: float = Field(0.5, ge=0.0, le=1.0)
    seed: int = 0

    @field_validator("shapes")
    @classmethod
    def _non_empty_set(cls, v: Tuple[ShapeKind, ...]) -> Tuple[ShapeKind, ...]:
        if not v:
            raise ValueError("at least one shape kind is required")
        # set semantics, stable order
        return tuple(sorted(set(v), key=lambda s: s.value))


class AugmentConfig(_Section):
    # (300, 256) in the published protocol; desk scale keeps the ~1.17 ratio
    resize_to: int = Field(96, gt=0)
    crop_to: int = Field(80, gt=0)
    flip_prob: float = Field(0.5, ge=0.0, le=1.0)

    @model_validator(mode="after")
    def _crop_fits(self) -> "AugmentConfig":
        if self.crop_to > self.resize_to:
            raise ValueError(f"crop_to={self.crop_to} exceeds resize_to={self.resize_to}")
        return self


class DataConfig(_Section):
    synthetic: SyntheticSpec = Field(default_factory=SyntheticSpec)
    # when set, train on root/images + root/masks instead of synthetic data
    root: Optional[Path] = None
    # held-out synthetic split used by evaluation and ablation
    test_samples: int = Field(100, gt=0)
    augment: AugmentConfig = Field(default_factory=AugmentConfig)


# -----------------------------
# Training
# -----------------------------

class TrainSettings(_Section):
    learning_rate: float = Field(1e-4, ge=0.0)
    max_iterations: int = Field(200, gt=0)
    batch_size: int = Field(8, ge=1)
    seed: int = 0
    checkpoint_every: int = Field(100, gt=0)
    num_threads: int = Field(1, ge=1)
    freeze_backbone_norm: bool = True
    calibration_batches: int = Field(4, ge=0)
    loss_smoothing: float = Field(0.9, ge=0.0, lt=1.0)


class TrainConfig(TrainSettings):
    model: ModelConfig = Field(default_factory=ModelConfig)
    data: DataConfig = Field(default_factory=DataConfig)


class AblationSettings(_Section):
    t_values: Tuple[int, ...] = (0, 1, 2)
    shared_options: Tuple[bool, ...] = (False, True)

    @field_validator("t_values")
    @classmethod
    def _valid_t(cls, v: Tuple[int, ...]) -> Tuple[int, ...]:
        if not v:
            raise ValueError("t_values must not be empty")
        if any(t < 0 for t in v):
            raise ValueError(f"t_values must be >= 0, got {v}")
        return v


# -----------------------------
# Report files
# -----------------------------

class PRRow(BaseModel):
    threshold: int = Field(ge=0, le=NUM_THRESHOLDS - 1)
    precision: float = Field(ge=0.0, le=1.0)
    recall: float = Field(ge=0.0, le=1.0)
    f: float = Field(ge=0.0, le=1.0)


class MetricsReportFile(BaseModel):
    model_config = ConfigDict(extra="forbid")

    label: Optional[str] = None
    num_images: int = Field(gt=0)
    mae: float = Field(ge=0.0, le=1.0)
    max_f: float = Field(ge=0.0, le=1.0)
    mean_f: float = Field(ge=0.0, le=1.0)
    mean_f_nondegenerate: float = Field(ge=0.0, le=1.0)
    s_measure: float = Field(ge=0.0, le=1.0)
    pr: List[PRRow]

    @field_validator("pr")
    @classmethod
    def _full_table(cls, v: List[PRRow]) -> List[PRRow]:
        if [r.threshold for r in v] != list(range(NUM_THRESHOLDS)):
            raise ValueError(f"pr table must list thresholds 0..{NUM_THRESHOLDS - 1} in order")
        return v


class AblationRowFile(BaseModel):
    label: str
    num_fpms: int
    share_fpm_weights: bool
    mae: float
    max_f: float
    mean_f: float
    s_measure: float
    checkpoint: str


class AblationReportFile(BaseModel):
    rows: List[AblationRowFile]
