"""
Training configuration and loss models.
"""

from typing import Dict, List, Literal

from pydantic import BaseModel, ConfigDict, Field, model_validator

from app.models.network_config import (
    GeneratorConfig,
    OptimizerConfig,
    SIDiscriminatorConfig,
    StatDiscriminatorConfig,
)


class PresetConfig(BaseModel):
    """A named architecture preset loaded from configs/*.yaml."""

    name: str = Field(..., description="Preset name")
    description: str = Field("", description="What the preset is for")
    signal_length: int = Field(..., description="Signal length N the preset targets")
    grid_count: int = Field(24, ge=2, description="Points of the default scale grid")
    generator: GeneratorConfig = Field(default_factory=GeneratorConfig)
    stat_discriminator: StatDiscriminatorConfig = Field(
        default_factory=StatDiscriminatorConfig
    )
    si_discriminator: SIDiscriminatorConfig = Field(default_factory=SIDiscriminatorConfig)
    generator_budget: int = Field(0, ge=0, description="Parameter budget, 0 when unpinned")
    metadata: Dict[str, str] = Field(default_factory=dict)


class TrainConfig(BaseModel):
    """Hyperparameters of an adversarial training run."""

    model_config = ConfigDict(extra="forbid", populate_by_name=True)

    alpha: float = Field(0.5, ge=0, description="Weight of the scale-invariance loss")
    beta: float = Field(0.2, ge=0, description="Weight of the S_2 loss")
    gamma: float = Field(0.15, ge=0, description="Weight of the skewness loss")
    lambda_: float = Field(0.15, ge=0, alias="lambda", description="Weight of the flatness loss")
    epochs: int = Field(500, ge=1)
    batch_size: int = Field(32, ge=1)
    lr: float = Field(0.001, gt=0)
    beta1: float = Field(0.5, ge=0, lt=1, description="First-moment decay")
    beta2: float = Field(0.999, ge=0, lt=1, description="Second-moment decay")
    d_steps_per_g_step: int = Field(2, ge=1)
    d_schedule: Literal["per_step", "per_epoch"] = Field(
        "per_step", description="Discriminator updates per generator step or per epoch"
    )
    n: int = Field(32768, ge=16, description="Signal length N")
    seed: int = Field(0, ge=0)
    preset: Literal["full", "desk"] = Field("full")
    variant: Literal["multicriteria", "gan", "wgan"] = Field("multicriteria")
    stat_input: Literal["per_realization", "ensemble_mean"] = Field(
        "per_realization", description="Curves fed to the statistic discriminators"
    )
    clip_value: float = Field(0.01, gt=0, description="WGAN critic weight clipping bound")
    critic_steps: int = Field(5, ge=1, description="WGAN critic updates per generator step")
    checkpoint_every: int = Field(50, ge=1, description="Epochs between checkpoints")

    @model_validator(mode="after")
    def _check_weights(self) -> "TrainConfig":
        if self.variant == "multicriteria":
            total = self.alpha + self.beta + self.gamma + self.lambda_
            if abs(total - 1.0) > 1e-9:
                raise ValueError(f"Loss weights must sum to 1, got {total}")
        return self

    @property
    def weights(self) -> "LossWeights":
        return LossWeights(
            alpha=self.alpha, beta=self.beta, gamma=self.gamma, lambda_=self.lambda_
        )

    @property
    def optimizer(self) -> OptimizerConfig:
        return OptimizerConfig(lr=self.lr, betas=(self.beta1, self.beta2))

    def follows_search_constraints(self) -> bool:
        """True when alpha dominates all weights and beta dominates gamma and lambda."""
        return (
            self.alpha > max(self.beta, self.gamma, self.lambda_)
            and self.beta > max(self.gamma, self.lambda_)
        )


class LossWeights(BaseModel):
    """The four weights of the generator objective."""

    model_config = ConfigDict(populate_by_name=True)

    alpha: float = Field(0.5, ge=0)
    beta: float = Field(0.2, ge=0)
    gamma: float = Field(0.15, ge=0)
    lambda_: float = Field(0.15, ge=0, alias="lambda")


class LossBundle(BaseModel):
    """Per-criterion losses of one generator step."""

    step: int = Field(0, ge=0)
    epoch: int = Field(0, ge=0)
    l_si: float = Field(..., description="Scale-invariance loss")
    l_s2: float = Field(..., description="S_2 discriminator loss")
    l_skew: float = Field(..., description="Skewness discriminator loss")
    l_flat: float = Field(..., description="Flatness discriminator loss")
    total: float = Field(..., description="Weighted generator objective")
    d_si: float = Field(0.0, description="Last D_SI update loss")
    d_s2: float = Field(0.0, description="Last D_S2 update loss")
    d_skew: float = Field(0.0, description="Last D_S update loss")
    d_flat: float = Field(0.0, description="Last D_F update loss")
    si_segments: Dict[int, List[float]] = Field(
        default_factory=dict, description="Generator sub-losses per segment length"
    )

    def criteria(self) -> Dict[str, float]:
        return {
            "l_si": self.l_si,
            "l_s2": self.l_s2,
            "l_skew": self.l_skew,
            "l_flat": self.l_flat,
            "total": self.total,
            "d_si": self.d_si,
            "d_s2": self.d_s2,
            "d_skew": self.d_skew,
            "d_flat": self.d_flat,
        }
