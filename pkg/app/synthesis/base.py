"""
Base oracle interface for the turbulent field synthesis system.
All oracle generators must implement this interface.
"""
from abc import ABC, abstractmethod
from typing import List

import numpy as np

from app.models.field_models import FieldEnsemble, OracleSpec


class BaseOracle(ABC):
    """Base class for all analytically characterised generators."""

    def __init__(self, spec: OracleSpec):
        """
        Initialize the oracle with its parameters.

        Args:
            spec: Oracle parameters (kind, H, lambda^2, L_c, seed, R, N)
        """
        self.spec = spec
        self.name = self.__class__.__name__
        self.initialize()

    def initialize(self) -> None:
        """
        Precompute anything that does not depend on the random draws.
        Override this method to perform oracle-specific initialization.
        """
        pass

    def realization_rngs(self) -> List[np.random.Generator]:
        """One counter-based generator per realization, derived from the seed."""
        children = np.random.SeedSequence(self.spec.seed).spawn(self.spec.realizations)
        return [np.random.Generator(np.random.Philox(child)) for child in children]

    @abstractmethod
    def generate(self) -> FieldEnsemble:
        """
        Draw the R x N ensemble described by the spec.

        Returns:
            The generated ensemble
        """
        pass
