"""
Single-discriminator baselines: a classical binary-cross-entropy GAN and a
weight-clipped Wasserstein GAN, both with one network on the full signal.

The loss history keeps its usual columns: the generator adversarial loss
goes to l_si and total, the discriminator loss to d_si, the statistic
columns stay zero.
"""

import logging
from typing import Dict

import torch
from torch import nn

from app.models.train_config import LossBundle
from app.nn.blocks import bce_loss, make_optimizer, optimizer_step
from app.nn.discriminators import BaselineDiscriminator
from app.training.base import BaseTrainer, si_config_for
from app.training.losses import adversarial_target_loss

logger = logging.getLogger(__name__)


class GanTrainer(BaseTrainer):
    """Classical GAN with a full-signal binary-cross-entropy discriminator."""

    kind = "gan"
    wgan = False

    def initialize(self) -> None:
        self.critic = BaselineDiscriminator(si_config_for(self.preset, self.config.n), wgan=self.wgan)
        self.critic_optimizer = make_optimizer(self.critic.parameters(), self.config.optimizer)

    def discriminators(self) -> Dict[str, nn.Module]:
        return {"critic": self.critic}

    def discriminator_optimizers(self) -> Dict[str, torch.optim.Optimizer]:
        return {"critic": self.critic_optimizer}

    def _fresh_pair(self):
        real, _ = self.sample_real()
        with torch.no_grad():
            fake = self.generator(self.sample_noise()).squeeze(1)
        return real, fake

    def discriminator_step(self) -> Dict[str, float]:
        real, fake = self._fresh_pair()
        loss = bce_loss(self.critic(real), torch.tensor(1.0)) + bce_loss(
            self.critic(fake), torch.tensor(0.0)
        )
        optimizer_step(self.critic_optimizer, loss)
        return {"d_si": loss.item(), "d_s2": 0.0, "d_skew": 0.0, "d_flat": 0.0}

    def generator_loss(self, scores: torch.Tensor) -> torch.Tensor:
        return adversarial_target_loss(scores)

    def generator_step(self) -> LossBundle:
        fake = self.generator(self.sample_noise()).squeeze(1)
        loss = self.generator_loss(self.critic(fake))
        optimizer_step(self.g_optimizer, loss)
        value = loss.item()
        return LossBundle(l_si=value, l_s2=0.0, l_skew=0.0, l_flat=0.0, total=value)


class WganTrainer(GanTrainer):
    """Wasserstein GAN: unbounded critic, mean-difference losses, weight clipping."""

    kind = "wgan"
    wgan = True

    def d_updates_per_step(self) -> int:
        return self.config.critic_steps

    def discriminator_step(self) -> Dict[str, float]:
        real, fake = self._fresh_pair()
        loss = self.critic(fake).mean() - self.critic(real).mean()
        optimizer_step(self.critic_optimizer, loss)
        with torch.no_grad():
            for param in self.critic.parameters():
                param.clamp_(-self.config.clip_value, self.config.clip_value)
        return {"d_si": loss.item(), "d_s2": 0.0, "d_skew": 0.0, "d_flat": 0.0}

    def generator_loss(self, scores: torch.Tensor) -> torch.Tensor:
        return -scores.mean()
