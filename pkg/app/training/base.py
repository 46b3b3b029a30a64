"""
Base trainer interface: data sampling, the epoch loop, divergence guard,
checkpointing and resume. Variants implement the per-step updates.
"""

import logging
import math
from abc import ABC, abstractmethod
from pathlib import Path
from typing import Dict, Optional, Tuple, Union

import numpy as np
import torch
from torch import nn

from app.core.errors import CheckpointFormatError, InvalidArgumentError, TrainingDivergenceError
from app.models.field_models import FieldEnsemble
from app.models.network_config import SI_SEGMENT_DIVISORS, SIDiscriminatorConfig
from app.models.train_config import LossBundle, PresetConfig, TrainConfig
from app.nn.blocks import make_optimizer
from app.nn.checkpoint import Checkpoint, save_checkpoint
from app.nn.generator import UNetGenerator, build_generator, check_length
from app.training.history import LossHistory

logger = logging.getLogger(__name__)

HISTORY_FILE = "loss_history.csv"
CHECKPOINT_DIR = "checkpoints"
FINAL_CHECKPOINT = "final.pt"


def si_config_for(preset: PresetConfig, n: int) -> SIDiscriminatorConfig:
    """The preset's discriminator settings at signal length n."""
    return SIDiscriminatorConfig(**{**preset.si_discriminator.model_dump(), "signal_length": n})


class BaseTrainer(ABC):
    """Base class for all adversarial training loops."""

    kind: str = ""

    def __init__(
        self,
        dataset: FieldEnsemble,
        config: TrainConfig,
        preset: PresetConfig,
        out_dir: Union[str, Path],
    ):
        """
        Initialize the trainer, its models and optimizers.

        Args:
            dataset: Training realizations, each of length config.n
            config: Training hyperparameters
            preset: Architecture preset
            out_dir: Directory receiving checkpoints and the loss history
        """
        if dataset.samples != config.n:
            raise InvalidArgumentError(
                f"Dataset realizations have {dataset.samples} samples, config expects n={config.n}"
            )
        check_length(preset.generator, config.n)
        if config.n % SI_SEGMENT_DIVISORS[-1] != 0:
            raise InvalidArgumentError(f"n={config.n} is not divisible by 16")

        self.dataset = dataset
        self.config = config
        self.preset = preset
        self.out_dir = Path(out_dir)
        self.name = self.__class__.__name__

        torch.manual_seed(config.seed)
        self.rng = torch.Generator().manual_seed(config.seed)
        self.real = torch.from_numpy(np.ascontiguousarray(dataset.data, dtype=np.float32))

        self.generator: UNetGenerator = build_generator(preset.generator, config.n)
        self.g_optimizer = make_optimizer(self.generator.parameters(), config.optimizer)
        self.history = LossHistory()
        self.epoch = 0
        self.step = 0
        self.last_d_losses: Dict[str, float] = {"d_si": 0.0, "d_s2": 0.0, "d_skew": 0.0, "d_flat": 0.0}
        self.initialize()

    def initialize(self) -> None:
        """
        Build discriminators and their optimizers.
        Override this method to perform variant-specific initialization.
        """
        pass

    @abstractmethod
    def discriminators(self) -> Dict[str, nn.Module]:
        """Discriminator networks keyed by checkpoint name."""
        pass

    @abstractmethod
    def discriminator_optimizers(self) -> Dict[str, torch.optim.Optimizer]:
        pass

    @abstractmethod
    def discriminator_step(self) -> Dict[str, float]:
        """
        One update of every discriminator on fresh real/generated batches.

        Returns:
            The discriminator losses of this update
        """
        pass

    @abstractmethod
    def generator_step(self) -> LossBundle:
        """
        One generator update.

        Returns:
            Generator-side losses of this update
        """
        pass

    def d_updates_per_step(self) -> int:
        return self.config.d_steps_per_g_step

    @property
    def steps_per_epoch(self) -> int:
        return math.ceil(self.dataset.realizations / self.config.batch_size)

    def sample_real(self) -> Tuple[torch.Tensor, torch.Tensor]:
        """A batch of training realizations drawn with replacement, and their indices."""
        index = torch.randint(
            self.dataset.realizations, (self.config.batch_size,), generator=self.rng
        )
        return self.real[index], index

    def sample_noise(self) -> torch.Tensor:
        return torch.randn(self.config.batch_size, 1, self.config.n, generator=self.rng)

    def train_step(self, step_in_epoch: int) -> LossBundle:
        updates = self.d_updates_per_step()
        if self.config.d_schedule == "per_epoch" and step_in_epoch > 0:
            updates = 0
        for _ in range(updates):
            self.last_d_losses = self.discriminator_step()

        bundle = self.generator_step()
        self.step += 1
        return bundle.model_copy(update={**self.last_d_losses, "step": self.step, "epoch": self.epoch + 1})

    def _guard(self, bundle: LossBundle) -> None:
        values = bundle.criteria()
        if all(math.isfinite(v) for v in values.values()):
            return
        self.history.write_csv(self.out_dir / HISTORY_FILE)
        logger.error(f"{self.name}: non-finite loss at step {bundle.step}: {values}")
        raise TrainingDivergenceError(bundle.step, values)

    def train(self) -> LossHistory:
        """
        Run the remaining epochs, checkpointing every `checkpoint_every` epochs.

        Returns:
            The complete loss history
        """
        logger.info(
            f"{self.name}: training from epoch {self.epoch} to {self.config.epochs}, "
            f"{self.steps_per_epoch} generator steps per epoch"
        )
        self.generator.train()
        for module in self.discriminators().values():
            module.train()

        while self.epoch < self.config.epochs:
            start = len(self.history)
            for step_in_epoch in range(self.steps_per_epoch):
                bundle = self.train_step(step_in_epoch)
                self.history.append(bundle)
                self._guard(bundle)
            self.epoch += 1

            totals = [r["total"] for r in self.history.records[start:]]
            logger.info(f"{self.name}: epoch {self.epoch} mean total loss {np.mean(totals):.6f}")
            if self.epoch % self.config.checkpoint_every == 0:
                self.save(self.out_dir / CHECKPOINT_DIR / f"epoch_{self.epoch:04d}.pt")

        self.save(self.out_dir / CHECKPOINT_DIR / FINAL_CHECKPOINT)
        return self.history

    def checkpoint(self) -> Checkpoint:
        models = {"generator": self.generator.state_dict()}
        models.update({key: m.state_dict() for key, m in self.discriminators().items()})
        optimizers = {"generator": self.g_optimizer.state_dict()}
        optimizers.update({key: o.state_dict() for key, o in self.discriminator_optimizers().items()})
        return Checkpoint(
            kind=self.kind,
            config={
                "train": self.config.model_dump(by_alias=True),
                "preset": self.preset.model_dump(),
            },
            models=models,
            optimizers=optimizers,
            epoch=self.epoch,
            step=self.step,
            rng_state=self.rng.get_state(),
            history=self.history.records,
        )

    def save(self, path: Union[str, Path]) -> Path:
        path = save_checkpoint(self.checkpoint(), path)
        self.history.write_csv(self.out_dir / HISTORY_FILE)
        return path

    def restore(self, checkpoint: Checkpoint) -> None:
        """
        Continue from a checkpoint of the same variant and signal length.

        Args:
            checkpoint: Loaded checkpoint
        """
        if checkpoint.kind != self.kind:
            raise CheckpointFormatError(
                f"Checkpoint was written by the {checkpoint.kind!r} variant, not {self.kind!r}"
            )
        saved_n = checkpoint.config.get("train", {}).get("n")
        if saved_n != self.config.n:
            raise InvalidArgumentError(f"Checkpoint was trained at n={saved_n}, config has n={self.config.n}")

        networks = {"generator": self.generator, **self.discriminators()}
        optimizers = {"generator": self.g_optimizer, **self.discriminator_optimizers()}
        try:
            for key, module in networks.items():
                module.load_state_dict(checkpoint.models[key])
            for key, optimizer in optimizers.items():
                optimizer.load_state_dict(checkpoint.optimizers[key])
        except (KeyError, RuntimeError, ValueError) as e:
            raise CheckpointFormatError(f"Checkpoint does not match this architecture: {e}") from e
        if checkpoint.rng_state is not None:
            self.rng.set_state(checkpoint.rng_state)

        self.epoch = checkpoint.epoch
        self.step = checkpoint.step
        self.history = LossHistory(checkpoint.history)
        logger.info(f"{self.name}: resumed at epoch {self.epoch}, step {self.step}")
