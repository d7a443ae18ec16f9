from __future__ import annotations

import pytest
import torch
from torch import nn

from pfpn.errors import ConfigurationError, InputError
from pfpn.model.backbone import TinyBackbone
from pfpn.model.network import SaliencyNetwork
from pfpn.schemas import BackboneId, BackboneSpec, ModelConfig, with_updates
from pfpn.training.loss import total_loss


@torch.no_grad()
def zero_(module: nn.Module) -> nn.Module:
    for p in module.parameters():
        p.zero_()
    return module


def test_output_shapes_and_range(tiny_model_config):
    model = SaliencyNetwork(tiny_model_config).eval()
    with torch.no_grad():
        out = model(torch.randn(2, 3, 32, 32))
    assert out.final.shape == (2, 1, 32, 32)
    assert len(out.sides) == 3
    for m in (out.final, *out.sides):
        assert m.shape == (2, 1, 32, 32)
        assert float(m.min()) >= 0.0 and float(m.max()) <= 1.0


def test_default_config_runs():
    cfg = ModelConfig()
    model = SaliencyNetwork(cfg).eval()
    with torch.no_grad():
        out = model(torch.randn(1, 3, cfg.input_size, cfg.input_size))
    assert len(out.sides) == cfg.num_levels


def test_presets():
    full = ModelConfig.published()
    assert (full.tm1_channels, full.tm2_channels, full.input_size) == (256, 32, 256)

    cfg = ModelConfig.vgg_style(tm1_channels=8, tm2_channels=4)
    model = SaliencyNetwork(cfg).eval()
    with torch.no_grad():
        out = model(torch.randn(1, 3, 96, 96))
    assert len(out.sides) == 6
    assert out.final.shape == (1, 1, 96, 96)


def test_zeroed_heads_predict_one_half(tiny_model_config):
    model = SaliencyNetwork(tiny_model_config).eval()
    zero_(model.fm)
    zero_(model.side)
    with torch.no_grad():
        out = model(torch.randn(1, 3, 32, 32))
    assert torch.all(out.final == 0.5)
    assert all(torch.all(s == 0.5) for s in out.sides)


def test_zeroed_polishing_stage_matches_no_polishing(tiny_model_config):
    cfg0 = with_updates(tiny_model_config, num_fpms=0)
    cfg1 = with_updates(tiny_model_config, num_fpms=1)
    plain = SaliencyNetwork(cfg0).eval()
    polished = SaliencyNetwork(cfg1).eval()

    with torch.no_grad():
        # non-negative TM1 output so the block's final ReLU is the identity
        for conv in plain.tm1:
            conv.weight.abs_()
            conv.bias.abs_()
    missing, unexpected = polished.load_state_dict(plain.state_dict(), strict=False)
    assert not unexpected
    assert all(k.startswith("fpm.") for k in missing)
    with torch.no_grad():
        for block in polished.fpm[0]:
            block.fuse.conv.weight.zero_()

        x = torch.randn(2, 3, 32, 32)
        a, b = plain(x), polished(x)
    assert torch.allclose(a.final, b.final, atol=1e-6)


def test_init_is_seeded_and_isolated(tiny_model_config):
    torch.manual_seed(123)
    before = torch.rand(1)
    torch.manual_seed(123)
    a = SaliencyNetwork(tiny_model_config)
    after = torch.rand(1)
    b = SaliencyNetwork(tiny_model_config)
    assert torch.equal(before, after)
    for (ka, va), (kb, vb) in zip(a.state_dict().items(), b.state_dict().items()):
        assert ka == kb and torch.equal(va, vb)

    c = SaliencyNetwork(with_updates(tiny_model_config, init_seed=1))
    assert not torch.equal(a.tm1[0].weight, c.tm1[0].weight)


def test_state_dict_names(tiny_model_config):
    names = set(SaliencyNetwork(with_updates(tiny_model_config, num_fpms=2)).state_dict())
    for key in ("tm1.0.weight", "fpm.1.2.context.0.conv.weight", "tm2.2.bias",
                "fm.0.weight", "fm.2.weight", "fm.4.weight", "side.0.weight"):
        assert key in names
    assert any(k.startswith("backbone.stages.0.") for k in names)


def test_rejects_wrong_input_shape(tiny_model_config):
    model = SaliencyNetwork(tiny_model_config)
    with pytest.raises(InputError):
        model(torch.randn(1, 3, 48, 48))
    with pytest.raises(InputError):
        model(torch.randn(3, 32, 32))


def test_external_backbone(tiny_model_config):
    cfg = with_updates(tiny_model_config, backbone_id=BackboneId.EXTERNAL)
    with pytest.raises(ConfigurationError):
        SaliencyNetwork(cfg)
    with pytest.raises(ConfigurationError):
        SaliencyNetwork(tiny_model_config, TinyBackbone(tiny_model_config.backbone))

    model = SaliencyNetwork(cfg, TinyBackbone(tiny_model_config.backbone)).eval()
    with torch.no_grad():
        assert model(torch.randn(1, 3, 32, 32)).final.shape == (1, 1, 32, 32)


class _FlatBackbone(nn.Module):
    """Returns three levels that never shrink."""

    def __init__(self, channels: tuple):
        super().__init__()
        self.convs = nn.ModuleList(nn.Conv2d(3, c, 3, padding=1) for c in channels)

    def forward(self, x: torch.Tensor):
        return [conv(x) for conv in self.convs]


def test_backbone_levels_must_halve(tiny_model_config):
    cfg = with_updates(tiny_model_config, backbone_id=BackboneId.EXTERNAL)
    model = SaliencyNetwork(cfg, _FlatBackbone(tiny_model_config.backbone.channels_per_level)).eval()
    with torch.no_grad(), pytest.raises(ConfigurationError, match="level"):
        model(torch.randn(1, 3, 32, 32))


# -----------------------------
# Finite differences through the whole network
# -----------------------------

def _relu_margin(model: nn.Module, x: torch.Tensor) -> float:
    """Smallest |pre-activation| seen by any ReLU in one forward pass."""
    seen = []
    hooks = [
        m.register_forward_pre_hook(lambda _m, args: seen.append(args[0].detach().abs().min().item()))
        for m in model.modules() if isinstance(m, nn.ReLU)
    ]
    try:
        with torch.no_grad():
            model(x)
    finally:
        for h in hooks:
            h.remove()
    return min(seen)


def test_loss_gradients_match_central_differences():
    cfg = ModelConfig(
        num_levels=2, num_fpms=1, tm1_channels=4, tm2_channels=4, input_size=16,
        backbone=BackboneSpec(channels_per_level=(4, 4), convs_per_level=1),
    )
    model = SaliencyNetwork(cfg).double().eval()

    # pick an input whose activations keep clear of the ReLU kinks
    for seed in range(50):
        g = torch.Generator().manual_seed(seed)
        x = torch.randn(1, 3, 16, 16, generator=g, dtype=torch.float64)
        target = (torch.rand(1, 1, 16, 16, generator=g) > 0.5).double()
        if _relu_margin(model, x) > 1e-4:
            break
    else:
        pytest.skip("no input with a comfortable ReLU margin")

    def loss() -> torch.Tensor:
        out = model(x)
        return total_loss(out.final, out.sides, target).total

    params = dict(model.named_parameters())
    grads = dict(zip(params, torch.autograd.grad(loss(), list(params.values()))))

    g = torch.Generator().manual_seed(0)
    h = 1e-6
    checked = 0
    for name, p in params.items():
        flat = p.data.view(-1)
        for idx in torch.randint(0, flat.numel(), (3,), generator=g).tolist():
            orig = flat[idx].item()
            with torch.no_grad():
                flat[idx] = orig + h
                up = loss().item()
                flat[idx] = orig - h
                down = loss().item()
                flat[idx] = orig
            numeric = (up - down) / (2 * h)
            analytic = grads[name].view(-1)[idx].item()
            scale = max(abs(numeric), abs(analytic))
            assert abs(numeric - analytic) <= 1e-3 * scale + 1e-7, (name, idx, numeric, analytic)
            checked += 1
    assert checked >= 3 * len(params)
