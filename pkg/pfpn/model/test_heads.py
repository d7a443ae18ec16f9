from __future__ import annotations

import numpy as np
import pytest
import torch

from pfpn.errors import ConfigurationError
from pfpn.model.heads import PROB_EPS, FusionModule, SideOutputHeads
from pfpn.model.test_fpm import loop_conv, seeded
from pfpn.model.types import FeaturePyramid


def flat_pyramid(num_levels, channels, size, seed=0, dtype=torch.float64) -> FeaturePyramid:
    g = torch.Generator().manual_seed(seed)
    return FeaturePyramid(tuple(
        torch.randn(1, channels, size, size, generator=g, dtype=dtype) for _ in range(num_levels)
    ))


def loop_fusion(fm: FusionModule, levels) -> np.ndarray:
    def conv(x, layer):
        w = layer.weight.detach().numpy()
        b = layer.bias.detach().numpy()
        return loop_conv(x, w) + b[:, None, None]

    x = np.concatenate(levels, axis=0)
    h = np.maximum(conv(x, fm[0]), 0.0)
    h = np.maximum(conv(h, fm[2]), 0.0)
    p = 1.0 / (1.0 + np.exp(-conv(h, fm[4])))
    return np.clip(p, PROB_EPS, 1.0 - PROB_EPS)


def test_fusion_matches_loop_reference():
    for trial in range(5):
        num_levels = 2 + trial % 2
        pyramid = flat_pyramid(num_levels, channels=2, size=5, seed=trial)
        fm = seeded(FusionModule(num_levels, 2, width=3), seed=50 + trial).double()
        with torch.no_grad():
            got = fm(pyramid)[0].numpy()
        want = loop_fusion(fm, [l[0].numpy() for l in pyramid])
        assert got.shape == (1, 5, 5)
        assert np.max(np.abs(got - want)) <= 1e-9


def test_side_heads_read_one_level_each():
    n = 4
    pyramid = flat_pyramid(n, channels=3, size=6, seed=1, dtype=torch.float32)
    heads = seeded(SideOutputHeads(n, 3))
    with torch.no_grad():
        base = heads(pyramid)
        for j in range(n):
            levels = list(pyramid.levels)
            levels[j] = levels[j] + 5.0 * torch.randn_like(levels[j])
            moved = heads(FeaturePyramid(tuple(levels)))
            for k in range(n):
                assert torch.equal(moved[k], base[k]) == (k != j)

        head = heads[2]
        logits = torch.einsum("c,bchw->bhw", head.weight[0, :, 0, 0], pyramid[2]) + head.bias[0]
        assert torch.allclose(base[2][:, 0], torch.sigmoid(logits), atol=1e-6)


def test_outputs_stay_inside_the_open_unit_interval():
    pyramid = FeaturePyramid((torch.full((1, 2, 4, 4), 1e4), torch.full((1, 2, 4, 4), -1e4)))
    fm = FusionModule(2, 2, width=2)
    heads = SideOutputHeads(2, 2)
    with torch.no_grad():
        for layer in (fm[0], fm[2], fm[4], *heads):
            layer.weight.fill_(1.0)
            layer.bias.zero_()
        high = fm(pyramid.map(torch.abs))
        sides = heads(pyramid)
    # logits of order 1e4 saturate a float32 sigmoid
    assert float(high.max()) < 1.0
    assert float(sides[0].max()) < 1.0
    assert float(sides[1].min()) > 0.0


def test_level_count_and_resolution_errors():
    with pytest.raises(ConfigurationError):
        FusionModule(3, 2, width=3)(flat_pyramid(2, 2, 5))
    with pytest.raises(ConfigurationError):
        SideOutputHeads(3, 2)(flat_pyramid(2, 2, 5))
    mixed = FeaturePyramid((torch.randn(1, 2, 8, 8), torch.randn(1, 2, 4, 4)))
    with pytest.raises(ConfigurationError, match="resolution"):
        FusionModule(2, 2, width=3)(mixed)
