"""
Configuration loading utilities for the turbulent field synthesis system.
"""
import os
import logging
from pathlib import Path
from typing import Dict, Optional, Union

import yaml
from pydantic import ValidationError

from app.core.errors import InvalidArgumentError
from app.models.train_config import PresetConfig, TrainConfig

logger = logging.getLogger(__name__)

DEFAULT_CONFIG_DIR = Path(__file__).resolve().parents[2] / "configs"


def parse_key_value_lines(text: str, source: str = "<text>") -> Dict[str, str]:
    """
    Parse `key=value` lines, ignoring blank lines and `#` comments.

    Args:
        text: File contents
        source: Name used in error messages

    Returns:
        Mapping of keys to raw string values
    """
    values: Dict[str, str] = {}
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise InvalidArgumentError(f"{source}:{number}: expected key=value, got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if not key:
            raise InvalidArgumentError(f"{source}:{number}: empty key")
        if key in values:
            raise InvalidArgumentError(f"{source}:{number}: duplicate key {key!r}")
        values[key] = value
    return values


def load_train_config(path: Union[str, Path]) -> TrainConfig:
    """
    Load a training configuration from a key=value or YAML file.

    Args:
        path: Path to the configuration file

    Returns:
        The validated training configuration
    """
    path = Path(path)
    if not path.exists():
        raise InvalidArgumentError(f"Config file not found: {path}")

    text = path.read_text(encoding="utf-8")
    if path.suffix.lower() in (".yaml", ".yml"):
        values = yaml.safe_load(text) or {}
        if not isinstance(values, dict):
            raise InvalidArgumentError(f"{path}: expected a mapping of training keys")
    else:
        values = parse_key_value_lines(text, source=str(path))

    try:
        config = TrainConfig(**values)
    except ValidationError as e:
        raise InvalidArgumentError(f"Invalid training config {path}: {e}") from e
    logger.info(f"Loaded training config from {path} (variant={config.variant})")
    return config


class ConfigLoader:
    """Utility class for loading architecture presets."""

    def __init__(self, config_dir: Optional[Union[str, Path]] = None):
        """
        Initialize the config loader.

        Args:
            config_dir: Directory containing preset files; TURBGAN_CONFIG_DIR
                or the repository configs/ directory when omitted
        """
        self.config_dir = Path(
            config_dir or os.getenv("TURBGAN_CONFIG_DIR") or DEFAULT_CONFIG_DIR
        )
        self.presets: Dict[str, PresetConfig] = {}
        self._load_presets()

    def _load_presets(self) -> None:
        """Load all preset files from the config directory."""
        if not self.config_dir.exists():
            logger.warning(f"Config directory {self.config_dir} does not exist")
            return

        for file_path in sorted(self.config_dir.glob("*.yaml")):
            try:
                with open(file_path, "r", encoding="utf-8") as f:
                    config_data = yaml.safe_load(f)

                preset = PresetConfig(**config_data)
                self.presets[preset.name] = preset
                logger.info(f"Loaded preset: {preset.name}")
            except Exception as e:
                logger.error(f"Error loading preset from {file_path}: {str(e)}")

    def get_preset(self, name: str) -> PresetConfig:
        """
        Get a preset by name.

        Args:
            name: Name of the preset

        Returns:
            The preset configuration
        """
        preset = self.presets.get(name)
        if preset is None:
            raise InvalidArgumentError(
                f"Unknown preset {name!r}; available: {sorted(self.presets)}"
            )
        return preset

    def get_all_presets(self) -> Dict[str, PresetConfig]:
        return self.presets

    def reload_presets(self) -> None:
        """Reload all preset files."""
        self.presets = {}
        self._load_presets()
