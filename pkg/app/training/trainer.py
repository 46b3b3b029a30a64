"""
Multicriteria adversarial trainer: the scale-invariance discriminator plus
the three statistic discriminators, combined into one weighted objective.
"""

import logging
from typing import Dict

import torch
from torch import nn

from app.core.stats_engine import CurveExtractor, stat_curves
from app.models.field_models import ScaleGrid
from app.models.train_config import LossBundle
from app.nn.blocks import make_optimizer, optimizer_step
from app.nn.discriminators import (
    STAT_CRITERIA,
    SIDiscriminator,
    build_si_discriminator,
    build_stat_discriminators,
    segment_losses,
    si_loss,
)
from app.training.base import BaseTrainer, si_config_for
from app.training.losses import (
    adversarial_target_loss,
    generator_loss,
    si_discriminator_loss,
    stat_discriminator_loss,
)

logger = logging.getLogger(__name__)

# Column of each criterion in the (log S_2, S, log(F/3)) curve stack.
CURVE_COLUMNS = {"s2": 0, "skew": 1, "flat": 2}


class MulticriteriaTrainer(BaseTrainer):
    """Generator trained against D_SI, D_S2, D_S and D_F at once."""

    kind = "multicriteria"

    def initialize(self) -> None:
        n = self.config.n
        meta = self.dataset.meta
        self.grid = ScaleGrid.default(
            n,
            count=self.preset.grid_count,
            integral_scale=meta.integral_scale,
            kolmogorov_scale=meta.kolmogorov_scale,
        )
        self.grid.check_applicable(n)

        stat_config = self.preset.stat_discriminator.model_copy(
            update={"input_len": len(self.grid.lags)}
        )
        self.si: SIDiscriminator = build_si_discriminator(si_config_for(self.preset, n))
        self.stat = build_stat_discriminators(stat_config)
        self.optimizers = {"si": make_optimizer(self.si.parameters(), self.config.optimizer)}
        for key in STAT_CRITERIA:
            self.optimizers[key] = make_optimizer(self.stat[key].parameters(), self.config.optimizer)

        self.extractor = CurveExtractor(self.grid.lags)
        curves = stat_curves(self.dataset, self.grid)
        # R x |lags| x 3, computed once in 64-bit
        self.real_curves = torch.from_numpy(curves.per_realization).float()
        self.real_mean_curve = self.real_curves.mean(dim=0, keepdim=True)
        logger.info(
            f"Cached real statistic curves for {self.dataset.realizations} realizations "
            f"over {len(self.grid.lags)} lags"
        )

    def discriminators(self) -> Dict[str, nn.Module]:
        return {"si": self.si, **{key: self.stat[key] for key in STAT_CRITERIA}}

    def discriminator_optimizers(self) -> Dict[str, torch.optim.Optimizer]:
        return self.optimizers

    def _stat_inputs(self, curves: torch.Tensor, real: bool) -> torch.Tensor:
        if self.config.stat_input == "per_realization":
            return curves
        if real:
            return self.real_mean_curve
        return curves.mean(dim=0, keepdim=True)

    def discriminator_step(self) -> Dict[str, float]:
        real, index = self.sample_real()
        noise = self.sample_noise()
        with torch.no_grad():
            fake = self.generator(noise).squeeze(1)
            fake_curves = self._stat_inputs(self.extractor(fake), real=False)
        real_curves = self._stat_inputs(self.real_curves[index], real=True)

        d_si = si_discriminator_loss(self.si, real, fake)
        optimizer_step(self.optimizers["si"], d_si)
        losses = {"d_si": d_si.item()}
        for key in STAT_CRITERIA:
            column = CURVE_COLUMNS[key]
            loss = stat_discriminator_loss(
                self.stat[key], real_curves[..., column], fake_curves[..., column]
            )
            optimizer_step(self.optimizers[key], loss)
            losses[f"d_{key}"] = loss.item()
        return losses

    def generator_step(self) -> LossBundle:
        noise = self.sample_noise()
        fake = self.generator(noise).squeeze(1)
        curves = self._stat_inputs(self.extractor(fake), real=False)

        per_segment = segment_losses(self.si(fake), 1.0)
        terms = {"l_si": si_loss(per_segment)}
        for key in STAT_CRITERIA:
            terms[f"l_{key}"] = adversarial_target_loss(self.stat[key](curves[..., CURVE_COLUMNS[key]]))
        total = generator_loss(terms, self.config.weights)
        optimizer_step(self.g_optimizer, total)

        return LossBundle(
            l_si=terms["l_si"].item(),
            l_s2=terms["l_s2"].item(),
            l_skew=terms["l_skew"].item(),
            l_flat=terms["l_flat"].item(),
            total=total.item(),
            si_segments={d: values.detach().tolist() for d, values in per_segment.items()},
        )
