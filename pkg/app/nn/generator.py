"""
Fully-convolutional U-Net generator mapping Gaussian white noise to a field
of the same length.
"""

import logging
from typing import List, Optional, Sequence, Union

import numpy as np
import torch
from torch import nn

from app.core.errors import InvalidArgumentError
from app.core.field_core import trim_borders
from app.models.field_models import FieldEnsemble
from app.models.network_config import GeneratorConfig
from app.nn.blocks import LayerSpec, build_layer, build_sequence, conv_block_specs, count_params
from app.synthesis.oracles import gaussian_noise

logger = logging.getLogger(__name__)

GENERATE_CHUNK = 16


class UNetGenerator(nn.Module):
    """
    Encoder of `levels` double conv blocks with average pooling, a bridge of
    conv blocks, and a decoder that upsamples, concatenates the mirrored
    encoder output and applies a transpose-conv block. A final 1x1 conv maps
    to one channel with no activation.
    """

    def __init__(self, config: GeneratorConfig):
        super().__init__()
        self.config = config
        channels = config.channels
        kernels = config.kernel_schedule

        self.encoders = nn.ModuleList()
        self.pools = nn.ModuleList()
        in_ch = 1
        for level, (ch, k) in enumerate(zip(channels, kernels)):
            specs = conv_block_specs(in_ch, ch, k, f"enc{level}.0") + conv_block_specs(
                ch, ch, k, f"enc{level}.1"
            )
            self.encoders.append(build_sequence(specs))
            self.pools.append(build_layer(LayerSpec(kind="avgpool2", name=f"enc{level}.pool")))
            in_ch = ch

        bridge_specs: List[LayerSpec] = []
        for block in range(config.bridge_blocks):
            bridge_specs += conv_block_specs(in_ch, in_ch, config.bridge_kernel, f"bridge.{block}")
        self.bridge = build_sequence(bridge_specs)

        # Stored shallow to deep; applied deep to shallow.
        self.upsamples = nn.ModuleList()
        self.concats = nn.ModuleList()
        self.decoders = nn.ModuleList()
        incoming = in_ch
        decoders = []
        for level in reversed(range(config.levels)):
            ch, k = channels[level], kernels[level]
            decoders.append(
                (
                    build_layer(LayerSpec(kind="upsample2", name=f"dec{level}.up")),
                    build_layer(LayerSpec(kind="concat", name=f"dec{level}.cat")),
                    build_sequence(
                        conv_block_specs(incoming + ch, ch, k, f"dec{level}", transpose=True)
                    ),
                )
            )
            incoming = ch
        for up, cat, dec in reversed(decoders):
            self.upsamples.append(up)
            self.concats.append(cat)
            self.decoders.append(dec)

        self.head = build_layer(
            LayerSpec(kind="conv1d", name="head", kernel=1, in_ch=incoming, out_ch=1)
        )

    def forward(self, noise: torch.Tensor) -> torch.Tensor:
        """
        Args:
            noise: B x N or B x 1 x N

        Returns:
            B x 1 x N field
        """
        if noise.dim() == 2:
            noise = noise.unsqueeze(1)
        if noise.dim() != 3 or noise.shape[1] != 1:
            raise InvalidArgumentError(
                f"Generator expects B x N or B x 1 x N noise, got {tuple(noise.shape)}"
            )
        check_length(self.config, noise.shape[-1])

        skips = []
        x = noise
        for encoder, pool in zip(self.encoders, self.pools):
            x = encoder(x)
            skips.append(x)
            x = pool(x)
        x = self.bridge(x)
        for level in reversed(range(self.config.levels)):
            x = self.upsamples[level](x)
            x = self.concats[level]([x, skips[level]])
            x = self.decoders[level](x)
        return self.head(x)


def check_length(config: GeneratorConfig, length: int) -> None:
    if length % config.length_divisor != 0:
        raise InvalidArgumentError(
            f"Length {length} is not divisible by 2^{config.levels} = {config.length_divisor}"
        )


def build_generator(config: GeneratorConfig, signal_length: Optional[int] = None) -> UNetGenerator:
    """
    Build the U-Net generator.

    Args:
        config: Architecture schedule
        signal_length: When given, checked for divisibility by 2^levels

    Returns:
        The generator, weights initialized
    """
    if signal_length is not None:
        check_length(config, signal_length)
    model = UNetGenerator(config)
    logger.info(
        f"Built U-Net generator: levels={config.levels}, channels={config.channels}, "
        f"parameters={count_params(model)}"
    )
    return model


def generate(
    model: UNetGenerator,
    r: int,
    n: int,
    n_b: int,
    seed: int,
    chunk_size: int = GENERATE_CHUNK,
) -> FieldEnsemble:
    """
    Run the generator on fresh Gaussian noise and keep the middle N samples.

    Args:
        model: Generator, switched to eval mode here
        r: Number of realizations
        n: Output length
        n_b: Border samples discarded in total, split evenly between both ends
        seed: Noise seed

    Returns:
        R x N ensemble
    """
    if r < 1 or n < 2:
        raise InvalidArgumentError(f"Need R >= 1 and N >= 2, got R={r}, N={n}")
    check_length(model.config, n + n_b)
    if n_b < 0 or n_b % 2 != 0:
        raise InvalidArgumentError(f"Border trim must be even and >= 0, got {n_b}")

    noise = gaussian_noise(r, n + n_b, seed).data.astype(np.float32)
    dtype = next(model.parameters()).dtype
    model.eval()
    outputs = []
    with torch.no_grad():
        for start in range(0, r, chunk_size):
            batch = torch.from_numpy(noise[start : start + chunk_size]).to(dtype)
            outputs.append(model(batch).squeeze(1).cpu().numpy())
    fields = np.concatenate(outputs, axis=0)
    if n_b > 0:
        fields = trim_borders(fields, n_b)
    logger.info(f"Generated {r} realizations of {n} samples (border trim {n_b}, seed {seed})")
    return FieldEnsemble(data=fields.astype(np.float32))


def generator_layer_path(config: GeneratorConfig) -> List[LayerSpec]:
    """Layers on the deepest input-to-output path, the one that bounds the receptive field."""
    path: List[LayerSpec] = []
    channels, kernels = config.channels, config.kernel_schedule
    in_ch = 1
    for level, (ch, k) in enumerate(zip(channels, kernels)):
        path += [
            LayerSpec(kind="conv1d", name=f"enc{level}.0", kernel=k, in_ch=in_ch, out_ch=ch),
            LayerSpec(kind="conv1d", name=f"enc{level}.1", kernel=k, in_ch=ch, out_ch=ch),
            LayerSpec(kind="avgpool2", name=f"enc{level}.pool"),
        ]
        in_ch = ch
    for block in range(config.bridge_blocks):
        path.append(
            LayerSpec(kind="conv1d", name=f"bridge.{block}", kernel=config.bridge_kernel, in_ch=in_ch, out_ch=in_ch)
        )
    for level in reversed(range(config.levels)):
        path += [
            LayerSpec(kind="upsample2", name=f"dec{level}.up"),
            LayerSpec(
                kind="transpose_conv1d",
                name=f"dec{level}",
                kernel=kernels[level],
                in_ch=in_ch + channels[level],
                out_ch=channels[level],
            ),
        ]
        in_ch = channels[level]
    return path


def receptive_field(config: Union[GeneratorConfig, Sequence[LayerSpec]]) -> int:
    """
    Receptive-field extent in input samples.

    A kernel-k layer adds (k - 1) input-resolution steps. Pooling and
    upsampling each add one step of the coarser resolution, which bounds the
    misalignment between the two grids.

    Args:
        config: Generator configuration, or an explicit layer sequence

    Returns:
        Width of the input window that can influence one output sample
    """
    layers = generator_layer_path(config) if isinstance(config, GeneratorConfig) else list(config)
    extent = 1.0
    jump = 1.0
    for spec in layers:
        if spec.kind in ("conv1d", "transpose_conv1d"):
            extent += (spec.kernel - 1) * jump
            jump *= spec.stride
        elif spec.kind == "avgpool2":
            extent += jump
            jump *= 2
        elif spec.kind == "upsample2":
            extent += jump
            jump /= 2
    return int(np.ceil(extent))


def receptive_radius(config: Union[GeneratorConfig, Sequence[LayerSpec]]) -> int:
    """Half-width of the receptive field, rounded up."""
    return (receptive_field(config) + 1) // 2
