"""
Error taxonomy for the turbulent field synthesis system.
"""

from typing import Dict, Optional


class FieldSynthesisError(Exception):
    """Base class for all errors raised by the package."""


class InvalidArgumentError(FieldSynthesisError, ValueError):
    """An argument violates an operation's preconditions."""


class DegenerateInputError(FieldSynthesisError, ValueError):
    """The input carries no variance to work with."""


class DegenerateScaleError(FieldSynthesisError, ValueError):
    """A statistic is undefined at a given lag (e.g. S_2(l) = 0)."""

    def __init__(self, message: str, lag: Optional[int] = None):
        super().__init__(message)
        self.lag = lag


class EnsembleFormatError(FieldSynthesisError, ValueError):
    """An ensemble, sidecar or CSV file is malformed."""


class CheckpointFormatError(FieldSynthesisError, ValueError):
    """A checkpoint file cannot be read or has the wrong format version."""


class EmbeddingError(FieldSynthesisError, RuntimeError):
    """Circulant embedding of a covariance is not nonnegative definite."""


class TrainingDivergenceError(FieldSynthesisError, RuntimeError):
    """A training loss became non-finite."""

    def __init__(self, step: int, losses: Dict[str, float]):
        self.step = step
        self.losses = dict(losses)
        super().__init__(f"Non-finite loss at step {step}: {self.losses}")
