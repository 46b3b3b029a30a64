"""
Neural building blocks: layer specifications, shape-checked layers, the
binary cross-entropy loss, the adaptive-moment optimizer and parameter counts.
"""

import logging
from typing import Iterable, List, Literal, Optional, Sequence

import torch
from pydantic import BaseModel, Field, model_validator
from torch import nn

from app.core.errors import InvalidArgumentError
from app.models.network_config import OptimizerConfig

logger = logging.getLogger(__name__)

INIT_STD = 0.02
BCE_EPS = 1e-7

LayerKind = Literal[
    "conv1d",
    "transpose_conv1d",
    "dense",
    "batchnorm",
    "avgpool2",
    "upsample2",
    "relu",
    "leaky_relu",
    "sigmoid",
    "concat",
]


class LayerSpec(BaseModel):
    """Declarative description of one layer."""

    kind: LayerKind = Field(..., description="Layer type")
    name: str = Field("", description="Name used in error messages")
    kernel: int = Field(1, ge=1, description="Kernel size in samples")
    in_ch: int = Field(0, ge=0, description="Input channels or features")
    out_ch: int = Field(0, ge=0, description="Output channels or features")
    padding: Literal["same", "none"] = Field("same", description="Convolution padding")
    stride: int = Field(1, ge=1, description="Convolution stride")
    slope: float = Field(0.2, ge=0, description="Leaky ReLU negative slope")
    bias: bool = Field(True, description="Whether conv/dense layers carry a bias")

    @model_validator(mode="after")
    def _check_spec(self) -> "LayerSpec":
        if self.kind in ("conv1d", "transpose_conv1d", "dense", "batchnorm") and self.in_ch < 1:
            raise ValueError(f"{self.kind} layer {self.name!r} needs in_ch >= 1")
        if self.kind in ("conv1d", "transpose_conv1d", "dense") and self.out_ch < 1:
            raise ValueError(f"{self.kind} layer {self.name!r} needs out_ch >= 1")
        if self.kind == "transpose_conv1d" and self.stride != 1:
            raise ValueError(f"Transpose convolutions use stride 1, got {self.stride}")
        if self.kind == "conv1d" and self.padding == "same" and self.stride != 1:
            raise ValueError("`same` padding requires stride 1")
        return self


class TransposeConv1dSame(nn.ConvTranspose1d):
    """
    Stride-1 transpose convolution. With `same` padding the full output is
    cropped back to the input length, (k - 1) // 2 samples from the left and
    the rest from the right.
    """

    def __init__(self, in_ch: int, out_ch: int, kernel: int, same: bool, bias: bool = True):
        super().__init__(in_ch, out_ch, kernel, stride=1, padding=0, bias=bias)
        self.same = same

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        out = super().forward(x)
        if not self.same:
            return out
        left = (self.kernel_size[0] - 1) // 2
        return out[..., left : left + x.shape[-1]]


class Concat(nn.Module):
    """Concatenate a sequence of tensors along the channel axis."""

    def forward(self, tensors: Sequence[torch.Tensor]) -> torch.Tensor:
        lengths = {t.shape[-1] for t in tensors}
        if len(lengths) != 1:
            raise InvalidArgumentError(f"Cannot concatenate lengths {sorted(lengths)}")
        return torch.cat(list(tensors), dim=1)


class CheckedLayer(nn.Module):
    """Wraps a torch layer and validates input shapes against its spec."""

    def __init__(self, spec: LayerSpec, module: nn.Module):
        super().__init__()
        self.spec = spec
        self.module = module

    def forward(self, x):
        spec = self.spec
        if spec.kind == "concat":
            return self.module(x)
        if spec.kind in ("conv1d", "transpose_conv1d", "batchnorm", "avgpool2", "upsample2"):
            if x.dim() != 3:
                raise InvalidArgumentError(
                    f"Layer {spec.name!r} ({spec.kind}) expects B x C x L input, "
                    f"got shape {tuple(x.shape)}"
                )
        if spec.kind in ("conv1d", "transpose_conv1d", "batchnorm") and x.shape[1] != spec.in_ch:
            raise InvalidArgumentError(
                f"Layer {spec.name!r} ({spec.kind}) expects {spec.in_ch} channels, "
                f"got {x.shape[1]}"
            )
        if spec.kind == "dense" and x.shape[-1] != spec.in_ch:
            raise InvalidArgumentError(
                f"Layer {spec.name!r} (dense) expects {spec.in_ch} features, got {x.shape[-1]}"
            )
        if spec.kind == "conv1d" and spec.padding == "none" and x.shape[-1] < spec.kernel:
            raise InvalidArgumentError(
                f"Layer {spec.name!r} (conv1d) needs length >= {spec.kernel}, got {x.shape[-1]}"
            )
        return self.module(x)


def _init_weights(module: nn.Module) -> None:
    if isinstance(module, (nn.Conv1d, nn.ConvTranspose1d, nn.Linear)):
        nn.init.normal_(module.weight, mean=0.0, std=INIT_STD)
        if module.bias is not None:
            nn.init.zeros_(module.bias)


def build_layer(spec: LayerSpec) -> CheckedLayer:
    """
    Build the torch module described by a layer spec.

    Args:
        spec: Layer description

    Returns:
        The shape-checked layer
    """
    if spec.kind == "conv1d":
        module = nn.Conv1d(
            spec.in_ch,
            spec.out_ch,
            spec.kernel,
            stride=spec.stride,
            padding="same" if spec.padding == "same" else 0,
            bias=spec.bias,
        )
    elif spec.kind == "transpose_conv1d":
        module = TransposeConv1dSame(
            spec.in_ch, spec.out_ch, spec.kernel, same=spec.padding == "same", bias=spec.bias
        )
    elif spec.kind == "dense":
        module = nn.Linear(spec.in_ch, spec.out_ch, bias=spec.bias)
    elif spec.kind == "batchnorm":
        module = nn.BatchNorm1d(spec.in_ch)
    elif spec.kind == "avgpool2":
        module = nn.AvgPool1d(2)
    elif spec.kind == "upsample2":
        module = nn.Upsample(scale_factor=2, mode="nearest")
    elif spec.kind == "relu":
        module = nn.ReLU()
    elif spec.kind == "leaky_relu":
        module = nn.LeakyReLU(spec.slope)
    elif spec.kind == "sigmoid":
        module = nn.Sigmoid()
    else:
        module = Concat()
    _init_weights(module)
    return CheckedLayer(spec, module)


def build_sequence(specs: Iterable[LayerSpec]) -> nn.Sequential:
    return nn.Sequential(*(build_layer(spec) for spec in specs))


def conv_block_specs(
    in_ch: int,
    out_ch: int,
    kernel: int,
    name: str,
    activation: Literal["relu", "leaky_relu"] = "relu",
    transpose: bool = False,
    padding: Literal["same", "none"] = "same",
    stride: int = 1,
    slope: float = 0.2,
) -> List[LayerSpec]:
    """Convolution (or transpose convolution), batch normalization, activation."""
    return [
        LayerSpec(
            kind="transpose_conv1d" if transpose else "conv1d",
            name=f"{name}.conv",
            kernel=kernel,
            in_ch=in_ch,
            out_ch=out_ch,
            padding=padding,
            stride=stride,
        ),
        LayerSpec(kind="batchnorm", name=f"{name}.bn", in_ch=out_ch),
        LayerSpec(kind=activation, name=f"{name}.act", slope=slope),
    ]


def dense_block_specs(in_features: int, out_features: int, name: str, slope: float = 0.2) -> List[LayerSpec]:
    """Dense layer followed by a leaky ReLU."""
    return [
        LayerSpec(kind="dense", name=f"{name}.dense", in_ch=in_features, out_ch=out_features),
        LayerSpec(kind="leaky_relu", name=f"{name}.act", slope=slope),
    ]


def bce_loss(
    predictions: torch.Tensor,
    labels: torch.Tensor,
    eps: float = BCE_EPS,
    reduction: Literal["mean", "none"] = "mean",
) -> torch.Tensor:
    """
    -(y log d + (1 - y) log(1 - d)) with d clamped to [eps, 1 - eps].

    Args:
        predictions: Probabilities in (0, 1)
        labels: Targets in {0, 1}, broadcastable to predictions
        reduction: `mean` for a scalar, `none` for elementwise losses

    Returns:
        The loss
    """
    d = predictions.clamp(eps, 1.0 - eps)
    labels = torch.as_tensor(labels, dtype=d.dtype, device=d.device).expand_as(d)
    losses = -(labels * torch.log(d) + (1.0 - labels) * torch.log1p(-d))
    return losses.mean() if reduction == "mean" else losses


def make_optimizer(params: Iterable[nn.Parameter], config: Optional[OptimizerConfig] = None) -> torch.optim.Adam:
    """Adam with bias correction, betas (0.5, 0.999) by default."""
    config = config or OptimizerConfig()
    return torch.optim.Adam(params, lr=config.lr, betas=config.betas, eps=config.eps)


def optimizer_step(optimizer: torch.optim.Optimizer, loss: torch.Tensor) -> None:
    """Clear gradients, backpropagate `loss` and apply one update."""
    optimizer.zero_grad(set_to_none=False)
    loss.backward()
    optimizer.step()


def count_params(model: nn.Module) -> int:
    """Total trainable scalars, batch-normalization scale and shift included."""
    return sum(p.numel() for p in model.parameters() if p.requires_grad)


def within_budget(count: int, budget: int, tolerance: float = 0.05) -> bool:
    return abs(count - budget) <= tolerance * budget
