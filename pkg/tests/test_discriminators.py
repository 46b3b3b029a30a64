#!/usr/bin/env python
"""
Tests for the statistic discriminators, the scale-invariance discriminator,
its weighted loss and the baseline full-signal discriminator.
"""

import copy
import os
import sys

import numpy as np
import pytest
import torch

# Add the parent directory to the path so we can import from app
sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from app.core.config_loader import ConfigLoader
from app.core.errors import InvalidArgumentError
from app.models.network_config import SIDiscriminatorConfig, StatDiscriminatorConfig
from app.nn.blocks import count_params, within_budget
from app.nn.discriminators import (
    STAT_CRITERIA,
    BaselineDiscriminator,
    build_si_discriminator,
    build_stat_discriminators,
    score_segments,
    segment_losses,
    si_forward,
    si_loss,
)


@pytest.fixture(scope="module")
def small_si():
    torch.manual_seed(0)
    model = build_si_discriminator(SIDiscriminatorConfig(signal_length=1024))
    model.eval()
    return model


def test_stat_discriminator_range_and_batch_independence():
    torch.manual_seed(1)
    models = build_stat_discriminators(StatDiscriminatorConfig())
    assert set(models) == set(STAT_CRITERIA)

    curves = 10.0 * torch.randn(6, 24)
    scores = models["s2"](curves)
    assert scores.shape == (6,)
    assert ((scores > 0) & (scores < 1)).all()

    permutation = torch.tensor([3, 0, 5, 1, 4, 2])
    assert torch.allclose(models["s2"](curves[permutation]), scores[permutation], rtol=0, atol=1e-7)
    assert models["flat"](curves[0]).shape == (1,)


def test_stat_discriminators_combined_budget():
    config = ConfigLoader().get_preset("full").stat_discriminator
    models = build_stat_discriminators(config)
    counts = [count_params(m) for m in models.values()]
    assert counts == [counts[0]] * 3
    assert within_budget(sum(counts), config.parameter_budget)


def test_si_discriminator_full_budget():
    config = ConfigLoader().get_preset("full").si_discriminator
    assert within_budget(count_params(build_si_discriminator(config)), config.parameter_budget)


def test_segment_lengths_and_counts(small_si):
    assert small_si.config.segment_lengths == [512, 256, 128, 64]
    scores = si_forward(small_si, torch.randn(3, 1024))
    assert {d: tuple(s.shape) for d, s in scores.items()} == {2: (3, 2), 4: (3, 4), 8: (3, 8), 16: (3, 16)}
    for values in scores.values():
        assert ((values > 0) & (values < 1)).all()


def test_rejects_incompatible_lengths(small_si):
    with pytest.raises(InvalidArgumentError):
        small_si(torch.randn(2, 1000))
    with pytest.raises(InvalidArgumentError):
        small_si(torch.randn(2, 2048))
    with pytest.raises(ValueError):
        SIDiscriminatorConfig(signal_length=1000)


def test_duplicate_halves_score_equally(small_si):
    model = copy.deepcopy(small_si).double()
    half = torch.randn(2, 512, dtype=torch.float64)
    scores = si_forward(model, torch.cat([half, half], dim=-1))
    assert torch.equal(scores[2][:, 0], scores[2][:, 1])


def test_segments_tile_the_signal(small_si):
    # Marking one sixteenth changes exactly one score per scale.
    model = copy.deepcopy(small_si).double()
    base = torch.randn(1, 1024, dtype=torch.float64)
    marked = base.clone()
    marked[0, 640:704] += 5.0
    with torch.no_grad():
        before, after = si_forward(model, base), si_forward(model, marked)
    expected = {2: 1, 4: 2, 8: 5, 16: 10}
    for divisor, index in expected.items():
        changed = torch.nonzero(before[divisor][0] != after[divisor][0]).flatten().tolist()
        assert changed == [index]


def test_si_loss_weights():
    ones = {d: torch.ones(d) for d in (2, 4, 8, 16)}
    assert si_loss(ones).item() == pytest.approx(8.0)
    assert si_loss({d: [0.0] * d for d in (2, 4, 8, 16)}).item() == 0.0
    one_fine = {d: np.zeros(d) for d in (2, 4, 8, 16)}
    one_fine[16][5] = 1.0
    assert si_loss(one_fine).item() == pytest.approx(0.125)


def test_si_loss_rejects_malformed_input():
    with pytest.raises(InvalidArgumentError):
        si_loss({2: torch.ones(2), 4: torch.ones(4)})
    with pytest.raises(InvalidArgumentError):
        si_loss({2: torch.ones(3), 4: torch.ones(4), 8: torch.ones(8), 16: torch.ones(16)})


def test_segment_losses_at_uninformative_scores():
    scores = {d: torch.full((4, d), 0.5) for d in (2, 4, 8, 16)}
    losses = segment_losses(scores, 1.0)
    for divisor, values in losses.items():
        assert values.shape == (divisor,)
        assert torch.allclose(values, torch.full((divisor,), np.log(2.0)))
    assert si_loss(losses).item() == pytest.approx(8.0 * np.log(2.0), rel=1e-6)


def test_gradient_reaches_the_input(small_si):
    signal = torch.randn(2, 1024, requires_grad=True)
    si_loss(segment_losses(si_forward(small_si, signal), 1.0)).backward()
    assert signal.grad.abs().sum() > 0


def test_baseline_variants():
    torch.manual_seed(2)
    config = SIDiscriminatorConfig(signal_length=1024)
    classic = BaselineDiscriminator(config)
    critic = BaselineDiscriminator(config, wgan=True)
    signal = 50.0 * torch.randn(4, 1024)

    scores = classic(signal)
    assert scores.shape == (4,)
    assert ((scores > 0) & (scores < 1)).all()

    with torch.no_grad():
        for param in critic.parameters():
            param.fill_(0.5)
    values = critic(signal)
    assert values.shape == (4,)
    assert (values.abs() > 1).any()


def test_eval_mode_is_deterministic(small_si):
    signal = torch.randn(2, 1024)
    first = si_forward(small_si, signal)
    second = si_forward(small_si, signal)
    for divisor in first:
        assert torch.equal(first[divisor], second[divisor])


def test_score_segments_frame(small_si):
    data = np.random.default_rng(0).standard_normal((3, 1024)).astype(np.float32)
    frame = score_segments(small_si, data)
    assert list(frame.columns) == ["realization", "segment_length", "segment_index", "score"]
    assert len(frame) == 3 * 30
    assert sorted(frame["segment_length"].unique()) == [64, 128, 256, 512]
    assert frame["score"].between(0, 1).all()
