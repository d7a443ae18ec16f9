import hashlib

import pytest
import torch

from pfpn.errors import InputError
from pfpn.model.backbone import TinyBackbone, calibrate_normalization, freeze_normalization, is_normalization_frozen
from pfpn.model.layers import batch_norms
from pfpn.model.network import SaliencyNetwork
from pfpn.schemas import BackboneSpec


def norm_stats(module):
    return [(m.running_mean.clone(), m.running_var.clone()) for m in batch_norms(module)]


def test_levels_halve_with_channel_counts():
    spec = BackboneSpec.tiny()
    pyramid = TinyBackbone(spec)(torch.randn(2, 3, 64, 64))
    assert pyramid.num_levels == 5
    assert [s.channels for s in pyramid.shapes] == list(spec.channels_per_level)
    assert [s.height for s in pyramid.shapes] == [64, 32, 16, 8, 4]
    pyramid.check_hierarchy()


def test_vgg_preset_uses_six_pooled_levels():
    spec = BackboneSpec.tiny_vgg()
    backbone = TinyBackbone(spec)
    assert any(isinstance(m, torch.nn.MaxPool2d) for m in backbone.modules())
    pyramid = backbone(torch.randn(1, 3, 64, 64))
    assert [s.height for s in pyramid.shapes] == [64, 32, 16, 8, 4, 2]


def test_rejects_bad_input():
    backbone = TinyBackbone(BackboneSpec.tiny())
    with pytest.raises(InputError):
        backbone(torch.randn(1, 1, 64, 64))
    with pytest.raises(InputError):
        backbone(torch.randn(1, 3, 40, 40))


def test_frozen_stats_survive_training_steps(tiny_model_config):
    model = SaliencyNetwork(tiny_model_config)
    freeze_normalization(model.backbone)
    model.train()
    before_backbone = norm_stats(model.backbone)
    before_fpm = norm_stats(model.fpm)

    opt = torch.optim.SGD(model.parameters(), lr=0.01)
    for _ in range(3):
        out = model(torch.randn(2, 3, 32, 32))
        loss = out.final.mean()
        opt.zero_grad()
        loss.backward()
        opt.step()

    for (m0, v0), (m1, v1) in zip(before_backbone, norm_stats(model.backbone)):
        assert torch.equal(m0, m1) and torch.equal(v0, v1)
    changed = [not torch.equal(m0, m1) for (m0, _), (m1, _) in zip(before_fpm, norm_stats(model.fpm))]
    assert any(changed)
    # affine parameters keep learning
    assert all(m.weight.requires_grad for m in batch_norms(model.backbone))


def test_freeze_is_idempotent():
    backbone = TinyBackbone(BackboneSpec.tiny())
    assert not is_normalization_frozen(backbone)
    freeze_normalization(backbone)
    freeze_normalization(backbone)
    assert is_normalization_frozen(backbone)
    backbone.train()
    assert all(not m.training for m in batch_norms(backbone))


def test_calibration_sets_cumulative_statistics():
    backbone = TinyBackbone(BackboneSpec(channels_per_level=(4, 4), convs_per_level=1))
    first = backbone.stages[0][0]
    backbone.eval()
    batches = [torch.randn(4, 3, 8, 8) for _ in range(3)]

    seen = calibrate_normalization(backbone, batches)
    assert seen == 3

    with torch.no_grad():
        conv_out = [first.conv(b) for b in batches]
    means = torch.stack([c.mean(dim=(0, 2, 3)) for c in conv_out]).mean(0)
    assert torch.allclose(first.norm.running_mean, means, atol=1e-5)
    assert first.norm.momentum == 0.1
    assert not first.norm.training


def test_same_seed_same_features():
    x = torch.randn(2, 3, 64, 64, generator=torch.Generator().manual_seed(0))

    def digest(seed):
        torch.manual_seed(seed)
        backbone = TinyBackbone(BackboneSpec.tiny()).eval()
        with torch.no_grad():
            pyramid = backbone(x)
        h = hashlib.sha256()
        for level in pyramid:
            h.update(level.numpy().tobytes())
        return h.hexdigest()

    assert digest(11) == digest(11)
    assert digest(11) != digest(12)
