import pytest
import torch

from pfpn.errors import CheckpointError
from pfpn.model.checkpoint import load_model, read_checkpoint, save_checkpoint
from pfpn.model.network import SaliencyNetwork
from pfpn.schemas import with_updates


def test_round_trip_is_bitwise(tmp_path, tiny_model_config):
    model = SaliencyNetwork(with_updates(tiny_model_config, num_fpms=2)).eval()
    x = torch.randn(2, 3, 32, 32)
    with torch.no_grad():
        before = model(x)

    path = save_checkpoint(tmp_path / "m.pt", model, step=7)
    loaded, ckpt = load_model(path)
    assert ckpt.step == 7
    assert ckpt.config == model.config
    assert not loaded.training
    with torch.no_grad():
        after = loaded(x)
    assert torch.equal(before.final, after.final)
    for a, b in zip(before.sides, after.sides):
        assert torch.equal(a, b)


def test_optimizer_state_is_stored(tmp_path, tiny_model_config):
    model = SaliencyNetwork(tiny_model_config)
    opt = torch.optim.Adam(model.parameters(), lr=1e-3)
    model(torch.randn(1, 3, 32, 32)).final.mean().backward()
    opt.step()
    ckpt = read_checkpoint(save_checkpoint(tmp_path / "m.pt", model, step=1, optimizer=opt))
    assert ckpt.optimizer_state is not None
    assert ckpt.optimizer_state["param_groups"][0]["lr"] == 1e-3


def test_config_mismatch_names_fields(tmp_path, tiny_model_config):
    path = save_checkpoint(tmp_path / "m.pt", SaliencyNetwork(tiny_model_config), step=0)
    with pytest.raises(CheckpointError, match="num_fpms"):
        load_model(path, expected=with_updates(tiny_model_config, num_fpms=3))
    load_model(path, expected=tiny_model_config)


def test_unreadable_checkpoints(tmp_path):
    with pytest.raises(CheckpointError, match="no such checkpoint"):
        read_checkpoint(tmp_path / "missing.pt")
    junk = tmp_path / "junk.pt"
    junk.write_bytes(b"not a checkpoint")
    with pytest.raises(CheckpointError):
        read_checkpoint(junk)
