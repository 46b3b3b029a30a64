"""
Checkpoint container: named parameter tensors, optimizer state, random
generator state and loss history, tagged with a format version.
"""

import logging
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

import torch
from pydantic import BaseModel, ConfigDict, Field

from app.core.errors import CheckpointFormatError

logger = logging.getLogger(__name__)

CHECKPOINT_FORMAT_VERSION = 1
_REQUIRED_KEYS = ("format_version", "kind", "config", "models")


class Checkpoint(BaseModel):
    """In-memory view of a checkpoint file."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    format_version: int = Field(CHECKPOINT_FORMAT_VERSION)
    kind: str = Field(..., description="Training variant that produced the checkpoint")
    config: Dict[str, Any] = Field(..., description="TrainConfig and preset as plain dicts")
    models: Dict[str, Dict[str, torch.Tensor]] = Field(
        ..., description="State dicts keyed by network name"
    )
    optimizers: Dict[str, Dict[str, Any]] = Field(default_factory=dict)
    epoch: int = Field(0, ge=0, description="Completed epochs")
    step: int = Field(0, ge=0, description="Completed generator steps")
    rng_state: Optional[torch.Tensor] = Field(None, description="torch.Generator state")
    history: List[Dict[str, Any]] = Field(default_factory=list)


def _plain(value: Any) -> Any:
    if value is None or type(value) in (bool, int, float, str):
        return value
    if hasattr(value, "item"):
        return value.item()
    return float(value)


def save_checkpoint(checkpoint: Checkpoint, path: Union[str, Path]) -> Path:
    """
    Write a checkpoint with torch.save.

    Args:
        checkpoint: Contents to persist
        path: Destination file

    Returns:
        The written path
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    payload = checkpoint.model_dump()
    payload["format_version"] = CHECKPOINT_FORMAT_VERSION
    # load_checkpoint reads with weights_only, which accepts plain numbers only.
    payload["history"] = [
        {key: _plain(value) for key, value in record.items()} for record in payload["history"]
    ]
    torch.save(payload, path)
    logger.info(f"Saved {checkpoint.kind} checkpoint at epoch {checkpoint.epoch} to {path}")
    return path


def load_checkpoint(path: Union[str, Path]) -> Checkpoint:
    """
    Read and validate a checkpoint written by save_checkpoint.

    Args:
        path: Checkpoint file

    Returns:
        The checkpoint contents
    """
    path = Path(path)
    if not path.exists():
        raise CheckpointFormatError(f"Checkpoint not found: {path}")
    try:
        payload = torch.load(path, map_location="cpu", weights_only=True)
    except Exception as e:
        raise CheckpointFormatError(f"{path} is not a readable checkpoint: {e}") from e

    if not isinstance(payload, dict) or any(key not in payload for key in _REQUIRED_KEYS):
        raise CheckpointFormatError(f"{path} is missing checkpoint fields {list(_REQUIRED_KEYS)}")
    version = payload["format_version"]
    if version != CHECKPOINT_FORMAT_VERSION:
        raise CheckpointFormatError(
            f"{path} has checkpoint format version {version}, "
            f"expected {CHECKPOINT_FORMAT_VERSION}"
        )
    try:
        checkpoint = Checkpoint(**payload)
    except Exception as e:
        raise CheckpointFormatError(f"{path}: invalid checkpoint contents ({e})") from e

    logger.info(f"Loaded {checkpoint.kind} checkpoint (epoch {checkpoint.epoch}) from {path}")
    return checkpoint
