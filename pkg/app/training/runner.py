"""
Entry points of the training module and the restore helpers used by the
generate and score commands.
"""

import logging
from pathlib import Path
from typing import Dict, Optional, Type, Union

from app.core.config_loader import ConfigLoader
from app.core.errors import CheckpointFormatError, InvalidArgumentError
from app.models.field_models import FieldEnsemble
from app.models.train_config import PresetConfig, TrainConfig
from app.nn.checkpoint import Checkpoint, load_checkpoint
from app.nn.discriminators import SIDiscriminator, build_si_discriminator
from app.nn.generator import UNetGenerator, build_generator
from app.training.base import BaseTrainer, si_config_for
from app.training.baselines import GanTrainer, WganTrainer
from app.training.history import LossHistory
from app.training.trainer import MulticriteriaTrainer

logger = logging.getLogger(__name__)

TRAINER_CLASSES: Dict[str, Type[BaseTrainer]] = {
    "multicriteria": MulticriteriaTrainer,
    "gan": GanTrainer,
    "wgan": WganTrainer,
}


def build_trainer(
    dataset: FieldEnsemble,
    config: TrainConfig,
    out_dir: Union[str, Path],
    preset: Optional[PresetConfig] = None,
    resume: Optional[Union[str, Path]] = None,
) -> BaseTrainer:
    """
    Instantiate the trainer registered for config.variant.

    Args:
        dataset: Training realizations
        config: Training hyperparameters
        out_dir: Output directory
        preset: Architecture preset; looked up by config.preset when omitted
        resume: Checkpoint to continue from

    Returns:
        The ready trainer
    """
    preset = preset or ConfigLoader().get_preset(config.preset)
    trainer = TRAINER_CLASSES[config.variant](dataset, config, preset, out_dir)
    if resume is not None:
        trainer.restore(load_checkpoint(resume))
    return trainer


def train(
    dataset: FieldEnsemble,
    config: TrainConfig,
    out_dir: Union[str, Path],
    preset: Optional[PresetConfig] = None,
    resume: Optional[Union[str, Path]] = None,
) -> LossHistory:
    """Train the variant named by the config and return its loss history."""
    trainer = build_trainer(dataset, config, out_dir, preset=preset, resume=resume)
    return trainer.train()


def train_baseline(
    dataset: FieldEnsemble,
    config: TrainConfig,
    out_dir: Union[str, Path],
    preset: Optional[PresetConfig] = None,
) -> LossHistory:
    """Train the classical GAN or WGAN baseline."""
    if config.variant not in ("gan", "wgan"):
        raise InvalidArgumentError(f"Baseline training needs variant gan or wgan, got {config.variant}")
    return train(dataset, config, out_dir, preset=preset)


def _checkpoint_preset(checkpoint: Checkpoint) -> PresetConfig:
    try:
        return PresetConfig(**checkpoint.config["preset"])
    except Exception as e:
        raise CheckpointFormatError(f"Checkpoint carries no valid preset: {e}") from e


def restore_generator(checkpoint: Union[Checkpoint, str, Path]) -> UNetGenerator:
    """Rebuild the generator of a checkpoint of any variant."""
    if not isinstance(checkpoint, Checkpoint):
        checkpoint = load_checkpoint(checkpoint)
    model = build_generator(_checkpoint_preset(checkpoint).generator)
    try:
        model.load_state_dict(checkpoint.models["generator"])
    except (KeyError, RuntimeError) as e:
        raise CheckpointFormatError(f"Generator weights do not match the preset: {e}") from e
    return model


def restore_si_discriminator(checkpoint: Union[Checkpoint, str, Path]) -> SIDiscriminator:
    """Rebuild D_SI of a multicriteria checkpoint."""
    if not isinstance(checkpoint, Checkpoint):
        checkpoint = load_checkpoint(checkpoint)
    if checkpoint.kind != "multicriteria":
        raise CheckpointFormatError(
            f"Only multicriteria checkpoints carry D_SI, got {checkpoint.kind!r}"
        )
    n = int(checkpoint.config["train"]["n"])
    model = build_si_discriminator(si_config_for(_checkpoint_preset(checkpoint), n))
    try:
        model.load_state_dict(checkpoint.models["si"])
    except (KeyError, RuntimeError) as e:
        raise CheckpointFormatError(f"D_SI weights do not match the preset: {e}") from e
    return model
