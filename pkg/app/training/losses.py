"""
Generator objective and discriminator losses.
"""

from typing import Mapping, Union

import torch
from torch import nn

from app.models.train_config import LossBundle, LossWeights
from app.nn.blocks import bce_loss
from app.nn.discriminators import SIDiscriminator, segment_losses, si_loss

Scalar = Union[float, torch.Tensor]

CRITERIA = ("l_si", "l_s2", "l_skew", "l_flat")


def generator_loss(losses: Union[LossBundle, Mapping[str, Scalar]], weights: LossWeights) -> Scalar:
    """
    L = alpha l_SI + beta l_S2 + gamma l_S + lambda l_F.

    Args:
        losses: Bundle or mapping holding l_si, l_s2, l_skew and l_flat
        weights: The four weights

    Returns:
        The weighted objective, a tensor when the losses are tensors
    """
    if isinstance(losses, LossBundle):
        losses = losses.criteria()
    return (
        weights.alpha * losses["l_si"]
        + weights.beta * losses["l_s2"]
        + weights.gamma * losses["l_skew"]
        + weights.lambda_ * losses["l_flat"]
    )


def si_discriminator_loss(model: SIDiscriminator, real: torch.Tensor, fake: torch.Tensor) -> torch.Tensor:
    """l_SI of real segments labelled 1 plus l_SI of generated segments labelled 0."""
    return si_loss(segment_losses(model(real), 1.0)) + si_loss(segment_losses(model(fake), 0.0))


def stat_discriminator_loss(model: nn.Module, real: torch.Tensor, fake: torch.Tensor) -> torch.Tensor:
    return bce_loss(model(real), torch.tensor(1.0)) + bce_loss(model(fake), torch.tensor(0.0))


def adversarial_target_loss(scores: torch.Tensor) -> torch.Tensor:
    """Non-saturating generator loss, -log D(G(w))."""
    return bce_loss(scores, torch.tensor(1.0))
