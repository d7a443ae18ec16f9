from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Iterator, Tuple

from torch import Tensor

from ..errors import ConfigurationError


# (B, 1, H, W), every value in [0, 1]
SaliencyMap = Tensor


@dataclass(frozen=True)
class LevelShape:
    channels: int
    height: int
    width: int


@dataclass(frozen=True)
class FeaturePyramid:
    """
    Ordered feature maps, index 0 = finest (largest) level, index N-1 = coarsest.
    Every level is (B, C, H, W) with one batch size shared across levels.
    """
    levels: Tuple[Tensor, ...]

    def __post_init__(self) -> None:
        levels = tuple(self.levels)
        object.__setattr__(self, "levels", levels)
        if len(levels) < 2:
            raise ConfigurationError(f"a pyramid needs at least 2 levels, got {len(levels)}")
        for i, level in enumerate(levels):
            if level.dim() != 4:
                raise ConfigurationError(f"level {i} must be (B, C, H, W), got shape {tuple(level.shape)}")
        batch = {level.shape[0] for level in levels}
        if len(batch) != 1:
            raise ConfigurationError(f"levels disagree on batch size: {sorted(batch)}")

    def __len__(self) -> int:
        return len(self.levels)

    def __getitem__(self, index: int) -> Tensor:
        return self.levels[index]

    def __iter__(self) -> Iterator[Tensor]:
        return iter(self.levels)

    @property
    def num_levels(self) -> int:
        return len(self.levels)

    @property
    def batch_size(self) -> int:
        return self.levels[0].shape[0]

    @property
    def shapes(self) -> Tuple[LevelShape, ...]:
        return tuple(LevelShape(l.shape[1], l.shape[2], l.shape[3]) for l in self.levels)

    def map(self, fn: Callable[[Tensor], Tensor]) -> "FeaturePyramid":
        return FeaturePyramid(tuple(fn(l) for l in self.levels))

    def check_hierarchy(self) -> None:
        """Each level must be the ceil-half of the previous one (stride-2 backbone)."""
        for k in range(1, len(self.levels)):
            prev, cur = self.shapes[k - 1], self.shapes[k]
            want = (math.ceil(prev.height / 2), math.ceil(prev.width / 2))
            if (cur.height, cur.width) != want:
                raise ConfigurationError(
                    f"level {k} is {cur.height}x{cur.width}, expected {want[0]}x{want[1]}"
                )

    def check_channels(self, channels: int) -> None:
        for k, shape in enumerate(self.shapes):
            if shape.channels != channels:
                raise ConfigurationError(f"level {k} has {shape.channels} channels, expected {channels}")


@dataclass(frozen=True)
class SideOutputs:
    """One sigmoid map per pyramid level at input resolution; index 0 = finest level."""
    maps: Tuple[SaliencyMap, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "maps", tuple(self.maps))

    def __len__(self) -> int:
        return len(self.maps)

    def __getitem__(self, index: int) -> SaliencyMap:
        return self.maps[index]

    def __iter__(self) -> Iterator[SaliencyMap]:
        return iter(self.maps)


@dataclass(frozen=True)
class ModelOutput:
    final: SaliencyMap
    sides: SideOutputs

