import os

import hypothesis
import numpy as np
import pytest
import torch

from pfpn.schemas import AugmentConfig, BackboneSpec, DataConfig, ModelConfig, SyntheticSpec, TrainConfig

np.seterr(all="warn")

hypothesis.settings.register_profile("ci", max_examples=50, deadline=None)
hypothesis.settings.register_profile("fast", max_examples=5, deadline=None)
hypothesis.settings.load_profile(os.getenv("HYPOTHESIS_PROFILE", "ci"))

RUN_SLOW = os.getenv("PFPN_RUN_SLOW") == "1"


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: long training runs, enabled with PFPN_RUN_SLOW=1")


def pytest_collection_modifyitems(config, items):
    if RUN_SLOW:
        return
    skip = pytest.mark.skip(reason="set PFPN_RUN_SLOW=1 to run")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip)


@pytest.fixture(autouse=True)
def _single_thread():
    torch.set_num_threads(1)


@pytest.fixture
def tiny_model_config() -> ModelConfig:
    """Three levels, 32x32 input: small enough for loops and gradient checks."""
    return ModelConfig(
        num_levels=3,
        num_fpms=1,
        tm1_channels=8,
        tm2_channels=4,
        input_size=32,
        backbone=BackboneSpec(channels_per_level=(4, 8, 8), convs_per_level=1),
    )


@pytest.fixture
def tiny_train_config(tiny_model_config) -> TrainConfig:
    return TrainConfig(
        model=tiny_model_config,
        data=DataConfig(
            synthetic=SyntheticSpec(num_samples=16, canvas_size=64, seed=3),
            test_samples=8,
            augment=AugmentConfig(resize_to=38, crop_to=32),
        ),
        learning_rate=1e-3,
        max_iterations=10,
        batch_size=4,
        checkpoint_every=5,
        calibration_batches=2,
    )
