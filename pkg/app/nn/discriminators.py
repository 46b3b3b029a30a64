"""
Training critics: three dense discriminators on statistic curves, the
four-network scale-invariance discriminator on disjoint signal segments,
and the full-signal baseline discriminator used by the GAN and WGAN variants.
"""

import logging
from typing import Dict, Mapping, Sequence, Union

import numpy as np
import pandas as pd
import torch
from torch import nn

from app.core.errors import InvalidArgumentError
from app.models.network_config import (
    SI_SEGMENT_DIVISORS,
    SIDiscriminatorConfig,
    StatDiscriminatorConfig,
    conv_output_length,
)
from app.nn.blocks import (
    LayerSpec,
    bce_loss,
    build_layer,
    build_sequence,
    conv_block_specs,
    count_params,
    dense_block_specs,
)

logger = logging.getLogger(__name__)

STAT_CRITERIA = ("s2", "skew", "flat")


class StatDiscriminator(nn.Module):
    """Dense network scoring one statistic curve over the scale grid."""

    def __init__(self, config: StatDiscriminatorConfig, name: str = "stat"):
        super().__init__()
        self.config = config
        specs = []
        width = config.input_len
        for i, out in enumerate(config.widths):
            specs += dense_block_specs(width, out, f"{name}.hidden{i}", slope=config.slope)
            width = out
        specs += [
            LayerSpec(kind="dense", name=f"{name}.out", in_ch=width, out_ch=1),
            LayerSpec(kind="sigmoid", name=f"{name}.sigmoid"),
        ]
        self.net = build_sequence(specs)

    def forward(self, curves: torch.Tensor) -> torch.Tensor:
        """B x |lags| curves to B scores in (0, 1)."""
        if curves.dim() == 1:
            curves = curves.unsqueeze(0)
        return self.net(curves).squeeze(-1)


def build_stat_discriminators(config: StatDiscriminatorConfig) -> nn.ModuleDict:
    """D_S2, D_S and D_F, keyed `s2`, `skew` and `flat`."""
    models = nn.ModuleDict({key: StatDiscriminator(config, key) for key in STAT_CRITERIA})
    total = sum(count_params(m) for m in models.values())
    logger.info(f"Built statistic discriminators: {total} parameters combined")
    return models


class ScaleNetwork(nn.Module):
    """
    Convolutional scorer for signals of one fixed length: unpadded strided
    conv blocks with batch normalization and leaky ReLU, then dense blocks.
    """

    def __init__(self, length: int, config: SIDiscriminatorConfig, sigmoid: bool = True, name: str = "scale"):
        super().__init__()
        self.length = length
        specs = []
        in_ch = 1
        for i, ch in enumerate(config.conv_channels):
            specs += conv_block_specs(
                in_ch,
                ch,
                config.conv_kernel,
                f"{name}.conv{i}",
                activation="leaky_relu",
                padding="none",
                stride=config.conv_stride,
                slope=config.slope,
            )
            in_ch = ch
        self.features = build_sequence(specs)

        flat = in_ch * conv_output_length(
            length, config.conv_kernel, config.conv_stride, len(config.conv_channels)
        )
        if flat < 1:
            raise InvalidArgumentError(f"Segments of length {length} are too short for {name}")
        head = []
        width = flat
        for i, out in enumerate(config.dense_widths):
            head += dense_block_specs(width, out, f"{name}.dense{i}", slope=config.slope)
            width = out
        head.append(LayerSpec(kind="dense", name=f"{name}.out", in_ch=width, out_ch=1))
        if sigmoid:
            head.append(LayerSpec(kind="sigmoid", name=f"{name}.sigmoid"))
        self.flatten = nn.Flatten()
        self.head = build_sequence(head)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        """B x 1 x length to B scores."""
        if x.shape[-1] != self.length:
            raise InvalidArgumentError(
                f"Scale network expects length {self.length}, got {x.shape[-1]}"
            )
        return self.head(self.flatten(self.features(x))).squeeze(-1)


def _as_batch(signal: torch.Tensor) -> torch.Tensor:
    if signal.dim() == 3:
        if signal.shape[1] != 1:
            raise InvalidArgumentError(f"Expected one channel, got shape {tuple(signal.shape)}")
        signal = signal.squeeze(1)
    if signal.dim() != 2:
        raise InvalidArgumentError(f"Expected a B x N signal batch, got {tuple(signal.shape)}")
    return signal


class SIDiscriminator(nn.Module):
    """Four scale networks for segments of length N/2, N/4, N/8 and N/16."""

    def __init__(self, config: SIDiscriminatorConfig):
        super().__init__()
        self.config = config
        self.networks = nn.ModuleDict(
            {
                str(divisor): ScaleNetwork(
                    config.signal_length // divisor, config, name=f"si{divisor}"
                )
                for divisor in SI_SEGMENT_DIVISORS
            }
        )

    def forward(self, signal: torch.Tensor) -> Dict[int, torch.Tensor]:
        """
        Score every disjoint segment at every scale.

        Args:
            signal: B x N or B x 1 x N

        Returns:
            Scores keyed by divisor d, each B x d, segment i covering
            samples [i N/d, (i + 1) N/d)
        """
        signal = _as_batch(signal)
        n = signal.shape[-1]
        if n % SI_SEGMENT_DIVISORS[-1] != 0:
            raise InvalidArgumentError(f"Signal length {n} is not divisible by 16")
        if n != self.config.signal_length:
            raise InvalidArgumentError(
                f"Discriminator built for N={self.config.signal_length}, got N={n}"
            )
        batch = signal.shape[0]
        scores = {}
        for divisor in SI_SEGMENT_DIVISORS:
            length = n // divisor
            segments = signal.reshape(batch * divisor, 1, length)
            scores[divisor] = self.networks[str(divisor)](segments).reshape(batch, divisor)
        return scores


def build_si_discriminator(config: SIDiscriminatorConfig) -> SIDiscriminator:
    model = SIDiscriminator(config)
    logger.info(
        f"Built scale-invariance discriminator for N={config.signal_length}: "
        f"{count_params(model)} parameters"
    )
    return model


def si_forward(model: SIDiscriminator, signal: torch.Tensor) -> Dict[int, torch.Tensor]:
    """2 + 4 + 8 + 16 segment scores per signal."""
    return model(signal)


def segment_losses(scores: Mapping[int, torch.Tensor], label: float) -> Dict[int, torch.Tensor]:
    """Binary cross-entropy per segment position, averaged over the batch."""
    return {
        divisor: bce_loss(values, torch.tensor(label), reduction="none").mean(dim=0)
        for divisor, values in scores.items()
    }


def si_loss(losses: Mapping[int, Union[torch.Tensor, Sequence[float]]]) -> torch.Tensor:
    """
    Weighted sum of the per-segment losses: weight 1 for N/2 segments,
    halving with each finer scale.

    Args:
        losses: Per-segment losses keyed by divisor d, last axis of size d

    Returns:
        l_SI
    """
    if set(losses) != set(SI_SEGMENT_DIVISORS):
        raise InvalidArgumentError(
            f"Expected losses for divisors {SI_SEGMENT_DIVISORS}, got {sorted(losses)}"
        )
    total = None
    for divisor in SI_SEGMENT_DIVISORS:
        values = losses[divisor]
        if not isinstance(values, torch.Tensor):
            values = torch.as_tensor(np.asarray(values, dtype=np.float64))
        if values.shape[-1] != divisor:
            raise InvalidArgumentError(
                f"Expected {divisor} sub-losses for N/{divisor}, got {values.shape[-1]}"
            )
        term = (2.0 / divisor) * values.sum(dim=-1)
        total = term if total is None else total + term
    return total


class BaselineDiscriminator(nn.Module):
    """One scale network on the full signal; the WGAN critic omits the sigmoid."""

    def __init__(self, config: SIDiscriminatorConfig, wgan: bool = False):
        super().__init__()
        self.wgan = wgan
        self.network = ScaleNetwork(
            config.signal_length, config, sigmoid=not wgan, name="critic" if wgan else "baseline"
        )

    def forward(self, signal: torch.Tensor) -> torch.Tensor:
        return self.network(_as_batch(signal).unsqueeze(1))


def score_segments(model: SIDiscriminator, data: np.ndarray, chunk_size: int = 16) -> pd.DataFrame:
    """
    Per-segment D_SI scores of an ensemble, evaluated in eval mode.

    Args:
        model: Scale-invariance discriminator
        data: R x N samples

    Returns:
        Frame with columns realization, segment_length, segment_index, score
    """
    model.eval()
    dtype = next(model.parameters()).dtype
    n = data.shape[-1]
    rows = []
    with torch.no_grad():
        for start in range(0, data.shape[0], chunk_size):
            batch = torch.from_numpy(np.ascontiguousarray(data[start : start + chunk_size])).to(dtype)
            scores = si_forward(model, batch)
            for divisor in SI_SEGMENT_DIVISORS:
                values = scores[divisor].cpu().numpy()
                for offset, row in enumerate(values):
                    for index, score in enumerate(row):
                        rows.append((start + offset, n // divisor, index, float(score)))
    return pd.DataFrame(rows, columns=["realization", "segment_length", "segment_index", "score"])
