#!/usr/bin/env python
"""
Tests for layer specs, shape-checked layers, the loss, the optimizer step,
parameter counting and the checkpoint container.
"""

import os
import sys

import numpy as np
import pytest
import torch
from pydantic import ValidationError
from torch import nn

# Add the parent directory to the path so we can import from app
sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from app.core.errors import CheckpointFormatError, InvalidArgumentError
from app.models.network_config import OptimizerConfig
from app.nn.blocks import (
    LayerSpec,
    bce_loss,
    build_layer,
    conv_block_specs,
    count_params,
    make_optimizer,
    optimizer_step,
    within_budget,
)
from app.nn.checkpoint import (
    CHECKPOINT_FORMAT_VERSION,
    Checkpoint,
    load_checkpoint,
    save_checkpoint,
)


def _double_input(*shape, positive=False):
    x = torch.randn(*shape, dtype=torch.float64, generator=torch.Generator().manual_seed(1))
    if positive:
        x = x.abs() + 0.1
    return x.requires_grad_(True)


def test_parameter_counts():
    assert count_params(build_layer(LayerSpec(kind="dense", in_ch=10, out_ch=5))) == 55
    assert count_params(build_layer(LayerSpec(kind="conv1d", kernel=3, in_ch=2, out_ch=4))) == 28
    assert count_params(build_layer(LayerSpec(kind="batchnorm", in_ch=6))) == 12
    assert count_params(build_layer(LayerSpec(kind="avgpool2"))) == 0


def test_leaky_relu_slope():
    layer = build_layer(LayerSpec(kind="leaky_relu", slope=0.2))
    assert layer(torch.tensor([-1.0])).item() == pytest.approx(-0.2)
    assert layer(torch.tensor([3.0])).item() == 3.0


def test_layer_spec_validation():
    with pytest.raises(ValidationError):
        LayerSpec(kind="dense", out_ch=4)
    with pytest.raises(ValidationError):
        LayerSpec(kind="transpose_conv1d", kernel=3, in_ch=1, out_ch=1, stride=2)
    with pytest.raises(ValidationError):
        LayerSpec(kind="conv1d", kernel=3, in_ch=1, out_ch=1, stride=2, padding="same")


@pytest.mark.parametrize(
    "spec, shape",
    [
        (LayerSpec(kind="conv1d", kernel=3, in_ch=2, out_ch=3), (2, 2, 9)),
        (LayerSpec(kind="conv1d", kernel=4, in_ch=2, out_ch=3), (2, 2, 9)),
        (LayerSpec(kind="conv1d", kernel=4, in_ch=2, out_ch=2, padding="none", stride=2), (2, 2, 12)),
        (LayerSpec(kind="transpose_conv1d", kernel=4, in_ch=3, out_ch=2), (2, 3, 8)),
        (LayerSpec(kind="transpose_conv1d", kernel=3, in_ch=3, out_ch=2, padding="none"), (2, 3, 8)),
        (LayerSpec(kind="dense", in_ch=6, out_ch=4), (3, 6)),
        (LayerSpec(kind="batchnorm", in_ch=3), (4, 3, 5)),
        (LayerSpec(kind="avgpool2"), (2, 2, 8)),
        (LayerSpec(kind="upsample2"), (2, 2, 4)),
        (LayerSpec(kind="sigmoid"), (3, 7)),
    ],
)
def test_layer_gradients_match_finite_differences(spec, shape):
    layer = build_layer(spec).double()
    layer.train()
    assert torch.autograd.gradcheck(layer, (_double_input(*shape),), eps=1e-4, atol=1e-6, rtol=1e-4)


def test_concat_gradient_matches_finite_differences():
    layer = build_layer(LayerSpec(kind="concat", name="dec0.cat"))
    upper = _double_input(2, 3, 8)
    skip = torch.randn(2, 2, 8, dtype=torch.float64, generator=torch.Generator().manual_seed(2))
    skip.requires_grad_(True)
    assert layer([upper, skip]).shape == (2, 5, 8)
    assert torch.autograd.gradcheck(
        lambda a, b: layer([a, b]) * torch.arange(1.0, 6.0, dtype=torch.float64).view(1, 5, 1),
        (upper, skip),
        eps=1e-4,
        atol=1e-6,
        rtol=1e-4,
    )


@pytest.mark.parametrize("spec", [LayerSpec(kind="relu"), LayerSpec(kind="leaky_relu", slope=0.2)])
def test_rectifier_gradients_away_from_kink(spec):
    layer = build_layer(spec).double()
    x = _double_input(3, 7, positive=True)
    signs = torch.tensor([1.0, -1.0, 1.0], dtype=torch.float64).unsqueeze(-1)
    assert torch.autograd.gradcheck(lambda v: layer(v * signs), (x,), eps=1e-4, atol=1e-6, rtol=1e-4)


def test_length_changes():
    x = torch.randn(2, 3, 16)
    same = build_layer(LayerSpec(kind="conv1d", kernel=8, in_ch=3, out_ch=2))
    valid = build_layer(LayerSpec(kind="conv1d", kernel=8, in_ch=3, out_ch=2, padding="none"))
    transpose = build_layer(LayerSpec(kind="transpose_conv1d", kernel=8, in_ch=3, out_ch=2))
    assert same(x).shape == (2, 2, 16)
    assert valid(x).shape == (2, 2, 9)
    assert transpose(x).shape == (2, 2, 16)
    assert build_layer(LayerSpec(kind="avgpool2"))(x).shape == (2, 3, 8)
    assert build_layer(LayerSpec(kind="upsample2"))(x).shape == (2, 3, 32)


def test_identity_kernel_reproduces_input():
    layer = build_layer(LayerSpec(kind="conv1d", kernel=5, in_ch=1, out_ch=1)).double()
    conv = layer.module
    with torch.no_grad():
        conv.weight.zero_()
        conv.weight[0, 0, 2] = 1.0
        conv.bias.zero_()
    x = torch.randn(3, 1, 40, dtype=torch.float64)
    assert torch.equal(layer(x), x)


def test_batchnorm_train_mode_normalizes_each_channel():
    layer = build_layer(LayerSpec(kind="batchnorm", in_ch=4)).double()
    layer.train()
    x = 3.0 * torch.randn(8, 4, 64, dtype=torch.float64) + 5.0
    out = layer(x)
    mean = out.mean(dim=(0, 2))
    var = out.var(dim=(0, 2), unbiased=False)
    assert torch.allclose(mean, torch.zeros(4, dtype=torch.float64), atol=1e-5)
    assert torch.allclose(var, torch.ones(4, dtype=torch.float64), atol=1e-4)


def test_shape_errors_name_the_layer():
    conv = build_layer(LayerSpec(kind="conv1d", name="enc0.0.conv", kernel=3, in_ch=2, out_ch=4))
    with pytest.raises(InvalidArgumentError, match="enc0.0.conv"):
        conv(torch.zeros(1, 3, 10))
    with pytest.raises(InvalidArgumentError, match="enc0.0.conv"):
        conv(torch.zeros(3, 10))

    dense = build_layer(LayerSpec(kind="dense", name="head", in_ch=6, out_ch=1))
    with pytest.raises(InvalidArgumentError, match="head"):
        dense(torch.zeros(2, 5))

    valid = build_layer(LayerSpec(kind="conv1d", name="short", kernel=8, in_ch=1, out_ch=1, padding="none"))
    with pytest.raises(InvalidArgumentError, match="short"):
        valid(torch.zeros(1, 1, 5))

    cat = build_layer(LayerSpec(kind="concat", name="dec0.cat"))
    assert cat([torch.zeros(1, 2, 8), torch.zeros(1, 3, 8)]).shape == (1, 5, 8)
    with pytest.raises(InvalidArgumentError):
        cat([torch.zeros(1, 2, 8), torch.zeros(1, 2, 6)])


def test_conv_block_layout():
    specs = conv_block_specs(2, 4, 8, "enc1.0")
    assert [s.kind for s in specs] == ["conv1d", "batchnorm", "relu"]
    specs = conv_block_specs(2, 4, 8, "si", activation="leaky_relu", transpose=False, padding="none", stride=2)
    assert specs[0].stride == 2 and specs[2].kind == "leaky_relu"


def test_bce_values():
    half = torch.full((4,), 0.5)
    assert bce_loss(half, torch.ones(4)).item() == pytest.approx(0.693147, abs=1e-6)
    assert bce_loss(half, torch.zeros(4)).item() == pytest.approx(0.693147, abs=1e-6)
    assert bce_loss(torch.ones(3), torch.ones(3)).item() < 1e-6
    assert bce_loss(torch.zeros(3), torch.zeros(3)).item() < 1e-6
    assert torch.isfinite(bce_loss(torch.zeros(3), torch.ones(3)))
    assert bce_loss(half, torch.tensor(1.0), reduction="none").shape == (4,)


def test_bce_gradient_matches_finite_differences():
    predictions = (torch.rand(6, dtype=torch.float64) * 0.8 + 0.1).requires_grad_(True)
    labels = torch.tensor([0.0, 1.0, 1.0, 0.0, 1.0, 0.0], dtype=torch.float64)
    assert torch.autograd.gradcheck(
        lambda p: bce_loss(p, labels), (predictions,), eps=1e-4, atol=1e-6, rtol=1e-4
    )


def test_first_adam_step_moves_by_learning_rate():
    param = nn.Parameter(torch.tensor([2.0], dtype=torch.float64))
    optimizer = make_optimizer([param], OptimizerConfig(lr=0.001))
    optimizer_step(optimizer, param.sum())
    assert 2.0 - param.item() == pytest.approx(0.001, rel=1e-6)


def test_zero_gradient_leaves_parameters_unchanged():
    param = nn.Parameter(torch.tensor([1.5, -0.5]))
    optimizer = make_optimizer([param])
    for _ in range(3):
        optimizer_step(optimizer, (param * 0.0).sum())
    assert torch.equal(param.detach(), torch.tensor([1.5, -0.5]))


def test_optimizer_runs_are_bit_identical():
    def run():
        torch.manual_seed(4)
        layer = build_layer(LayerSpec(kind="dense", in_ch=5, out_ch=3))
        optimizer = make_optimizer(layer.parameters())
        data = torch.randn(8, 5)
        for _ in range(10):
            optimizer_step(optimizer, layer(data).pow(2).mean())
        return [p.detach().clone() for p in layer.parameters()]

    for a, b in zip(run(), run()):
        assert torch.equal(a, b)


def test_within_budget():
    assert within_budget(26_300_000, 26_000_000)
    assert not within_budget(28_000_000, 26_000_000)
    assert within_budget(190_000, 197_000)


def test_checkpoint_round_trip(tmp_path):
    layer = build_layer(LayerSpec(kind="dense", in_ch=3, out_ch=2))
    checkpoint = Checkpoint(
        kind="multicriteria",
        config={"train": {"n": 64}},
        models={"generator": layer.state_dict()},
        epoch=3,
        step=12,
        history=[{"step": 1, "total": 0.5}],
    )
    path = save_checkpoint(checkpoint, tmp_path / "ckpt" / "epoch_0003.pt")
    loaded = load_checkpoint(path)
    assert loaded.format_version == CHECKPOINT_FORMAT_VERSION
    assert loaded.epoch == 3 and loaded.step == 12
    assert loaded.history == [{"step": 1, "total": 0.5}]
    for key, value in layer.state_dict().items():
        assert torch.equal(loaded.models["generator"][key], value)


def test_checkpoint_errors(tmp_path):
    with pytest.raises(CheckpointFormatError):
        load_checkpoint(tmp_path / "missing.pt")

    garbage = tmp_path / "garbage.pt"
    garbage.write_bytes(b"not a checkpoint")
    with pytest.raises(CheckpointFormatError):
        load_checkpoint(garbage)

    partial = tmp_path / "partial.pt"
    torch.save({"kind": "gan"}, partial)
    with pytest.raises(CheckpointFormatError):
        load_checkpoint(partial)

    future = tmp_path / "future.pt"
    torch.save({"format_version": 99, "kind": "gan", "config": {}, "models": {}}, future)
    with pytest.raises(CheckpointFormatError, match="version"):
        load_checkpoint(future)


class _RunsOnLoad:
    def __init__(self, marker):
        self.marker = marker

    def __reduce__(self):
        return os.mkdir, (str(self.marker),)


def test_checkpoint_refuses_arbitrary_objects(tmp_path):
    marker = tmp_path / "created_on_load"
    crafted = tmp_path / "crafted.pt"
    torch.save(
        {"format_version": CHECKPOINT_FORMAT_VERSION, "kind": "gan", "config": {},
         "models": {}, "history": [_RunsOnLoad(marker)]},
        crafted,
    )
    with pytest.raises(CheckpointFormatError):
        load_checkpoint(crafted)
    assert not marker.exists()


def test_checkpoint_history_is_plain(tmp_path):
    checkpoint = Checkpoint(
        kind="gan",
        config={"train": {"n": 64, "betas": (0.5, 0.999)}},
        models={},
        rng_state=torch.Generator().manual_seed(3).get_state(),
        history=[{"step": np.int64(2), "total": np.float64(0.25)}],
    )
    loaded = load_checkpoint(save_checkpoint(checkpoint, tmp_path / "plain.pt"))
    assert loaded.history == [{"step": 2, "total": 0.25}]
    assert type(loaded.history[0]["step"]) is int
    assert torch.equal(loaded.rng_state, checkpoint.rng_state)
