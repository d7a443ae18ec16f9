import math

import pytest
import torch
from hypothesis import given
from hypothesis import strategies as st

from pfpn.errors import ConfigurationError, InputError
from pfpn.model.types import SideOutputs
from pfpn.training.loss import PRED_CLAMP, bce_loss, combine_losses, total_loss


def loop_bce(pred, target, eps=PRED_CLAMP):
    acc = 0.0
    flat_p, flat_t = pred.reshape(-1).tolist(), target.reshape(-1).tolist()
    for p, t in zip(flat_p, flat_t):
        p = min(max(p, eps), 1.0 - eps)
        acc += -(t * math.log(p) + (1.0 - t) * math.log(1.0 - p))
    return acc / len(flat_p)


def test_half_prediction_costs_ln2():
    pred = torch.full((1, 1, 4, 4), 0.5, dtype=torch.float64)
    target = (torch.arange(16).reshape(1, 1, 4, 4) % 2).double()
    assert float(bce_loss(pred, target)) == pytest.approx(math.log(2), abs=1e-12)


def test_clamp_bounds_the_loss():
    pred = torch.tensor([[[[0.0, 1.0]]]], dtype=torch.float64)
    target = torch.tensor([[[[1.0, 0.0]]]], dtype=torch.float64)
    assert float(bce_loss(pred, target)) == pytest.approx(-math.log(PRED_CLAMP), rel=1e-9)


def test_matches_loop_reference():
    g = torch.Generator().manual_seed(0)
    for _ in range(10):
        pred = torch.rand(2, 1, 5, 7, generator=g, dtype=torch.float64)
        target = (torch.rand(2, 1, 5, 7, generator=g) > 0.5).double()
        assert float(bce_loss(pred, target)) == pytest.approx(loop_bce(pred, target), abs=1e-12)


def test_shape_mismatch():
    with pytest.raises(InputError):
        bce_loss(torch.rand(1, 1, 4, 4), torch.rand(1, 1, 4, 5))


def test_weighting_of_final_and_side_terms():
    b = combine_losses(1.0, [1.0] * 5)
    assert b.total == pytest.approx(2.7)
    assert combine_losses(0.0, [1.0, 0.0, 0.0]).total == pytest.approx(0.5)
    assert combine_losses(0.0, [0.0, 2.0, 0.0]).total == pytest.approx(0.6)
    assert combine_losses(3.0, [0.0, 0.0]).total == pytest.approx(3.0)
    with pytest.raises(ConfigurationError):
        combine_losses(1.0, [])


@given(
    final=st.floats(0, 10, allow_nan=False),
    sides=st.lists(st.floats(0, 10, allow_nan=False), min_size=2, max_size=6),
)
def test_total_is_linear_in_terms(final, sides):
    total = combine_losses(final, sides).total
    assert total == pytest.approx(final + 0.5 * sides[0] + 0.3 * sum(sides[1:]), abs=1e-9)
    assert total >= final


def test_total_loss_record_and_level_check():
    target = torch.ones(1, 1, 4, 4)
    sides = SideOutputs(tuple(torch.full((1, 1, 4, 4), 0.5) for _ in range(3)))
    b = total_loss(torch.full((1, 1, 4, 4), 0.5), sides, target, num_levels=3)
    rec = b.to_record()
    assert set(rec) == {"total", "final", "side"}
    assert len(rec["side"]) == 3
    assert rec["total"] == pytest.approx(math.log(2) * (1 + 0.5 + 0.6), rel=1e-6)
    with pytest.raises(ConfigurationError):
        total_loss(torch.full((1, 1, 4, 4), 0.5), sides, target, num_levels=5)


@pytest.mark.filterwarnings("error:Converting a tensor with requires_grad")
def test_record_of_a_graph_loss_is_plain_floats():
    pred = torch.full((1, 1, 4, 4), 0.3, requires_grad=True)
    sides = SideOutputs(tuple(pred * 1.0 for _ in range(2)))
    b = total_loss(pred, sides, torch.ones(1, 1, 4, 4), num_levels=2)
    assert b.total.requires_grad
    rec = b.to_record()
    assert all(type(v) is float for v in (rec["total"], rec["final"], *rec["side"]))


def test_gradient_matches_central_differences():
    g = torch.Generator().manual_seed(1)
    logits = torch.randn(1, 1, 3, 3, generator=g, dtype=torch.float64, requires_grad=True)
    target = (torch.rand(1, 1, 3, 3, generator=g) > 0.5).double()

    def f(z):
        return bce_loss(torch.sigmoid(z), target)

    assert torch.autograd.gradcheck(f, (logits,), eps=1e-6, atol=1e-8)
