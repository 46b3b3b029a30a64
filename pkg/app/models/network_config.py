"""
Network architecture configuration models.
"""

from typing import List, Literal, Tuple

from pydantic import BaseModel, Field, model_validator

SI_SEGMENT_DIVISORS = (2, 4, 8, 16)


class GeneratorConfig(BaseModel):
    """Configuration of the U-Net generator."""

    levels: int = Field(6, ge=1, description="Encoder/decoder depth")
    kernel_schedule: List[int] = Field(
        default_factory=lambda: [2, 4, 8, 16, 32, 64],
        description="Kernel size per level, shallow to deep",
    )
    channel_schedule: List[int] = Field(
        default_factory=lambda: [8, 16, 32, 64, 128, 272],
        description="Channel width per level, shallow to deep",
    )
    bridge_blocks: int = Field(3, ge=1, description="Conv blocks in the bridge")
    bridge_kernel: int = Field(32, ge=1, description="Kernel size of the bridge blocks")
    width_multiplier: float = Field(
        1.0, gt=0, description="Scales the channel schedule for smaller presets"
    )

    @model_validator(mode="after")
    def _check_schedules(self) -> "GeneratorConfig":
        if len(self.kernel_schedule) != self.levels:
            raise ValueError(
                f"kernel_schedule has {len(self.kernel_schedule)} entries, expected {self.levels}"
            )
        if len(self.channel_schedule) != self.levels:
            raise ValueError(
                f"channel_schedule has {len(self.channel_schedule)} entries, expected {self.levels}"
            )
        if any(k < 1 for k in self.kernel_schedule):
            raise ValueError(f"Kernel sizes must be >= 1: {self.kernel_schedule}")
        if any(b < a for a, b in zip(self.kernel_schedule, self.kernel_schedule[1:])):
            raise ValueError(
                f"kernel_schedule must be non-decreasing with depth: {self.kernel_schedule}"
            )
        return self

    @property
    def channels(self) -> List[int]:
        """Channel schedule after applying the width multiplier."""
        return [max(1, round(c * self.width_multiplier)) for c in self.channel_schedule]

    @property
    def length_divisor(self) -> int:
        return 2**self.levels


class StatDiscriminatorConfig(BaseModel):
    """Configuration shared by the three dense statistic discriminators."""

    input_len: int = Field(24, ge=1, description="Number of lags of the scale grid")
    widths: List[int] = Field(
        default_factory=lambda: [64, 52, 36, 24, 16],
        description="Hidden dense layer widths",
    )
    slope: float = Field(0.2, ge=0, description="Leaky ReLU negative slope")
    parameter_budget: int = Field(25000, description="Published parameter budget")
    budget_scope: Literal["combined", "per_network"] = Field(
        "combined", description="Whether the budget covers all three networks or each one"
    )


class SIDiscriminatorConfig(BaseModel):
    """Configuration of the four-network scale-invariance discriminator."""

    signal_length: int = Field(32768, ge=16, description="Signal length N")
    conv_channels: List[int] = Field(
        default_factory=lambda: [8, 8, 4], description="Channels of the conv blocks"
    )
    conv_kernel: int = Field(8, ge=1, description="Conv kernel size")
    conv_stride: int = Field(2, ge=1, description="Conv stride")
    dense_widths: List[int] = Field(
        default_factory=lambda: [13, 8], description="Hidden dense widths"
    )
    slope: float = Field(0.2, ge=0, description="Leaky ReLU negative slope")
    parameter_budget: int = Field(197000, description="Published parameter budget")

    @model_validator(mode="after")
    def _check_length(self) -> "SIDiscriminatorConfig":
        if self.signal_length % 16 != 0:
            raise ValueError(f"Signal length {self.signal_length} is not divisible by 16")
        shortest = self.signal_length // SI_SEGMENT_DIVISORS[-1]
        if conv_output_length(shortest, self.conv_kernel, self.conv_stride, len(self.conv_channels)) < 1:
            raise ValueError(
                f"Segments of length {shortest} are too short for "
                f"{len(self.conv_channels)} conv blocks of kernel {self.conv_kernel}"
            )
        return self

    @property
    def segment_lengths(self) -> List[int]:
        return [self.signal_length // d for d in SI_SEGMENT_DIVISORS]


class OptimizerConfig(BaseModel):
    """Adaptive-moment optimizer settings."""

    lr: float = Field(0.001, gt=0, description="Learning rate")
    betas: Tuple[float, float] = Field((0.5, 0.999), description="Moment decay rates")
    eps: float = Field(1e-8, gt=0, description="Denominator floor")


def conv_output_length(length: int, kernel: int, stride: int, blocks: int) -> int:
    """Length after `blocks` unpadded convolutions."""
    for _ in range(blocks):
        if length < kernel:
            return 0
        length = (length - kernel) // stride + 1
    return length
