"""Exception types shared by the counting and entropy modules."""

from typing import Optional

import numpy as np


class AxialEntropyError(Exception):
    """A computation could not produce its result."""

    exit_status = 1


class BudgetExceededError(AxialEntropyError):
    """An exact or brute-force path would exceed its configured budget."""


class SpectralConvergenceError(AxialEntropyError):
    """Power iteration did not reach the requested tolerance."""

    def __init__(self, message: str, last_value: float, last_vector: Optional[np.ndarray] = None):
        super().__init__(message)
        self.last_value = last_value
        self.last_vector = last_vector


class HypothesisError(AxialEntropyError):
    """The input violates a hypothesis of the requested closed form."""


class ConfigError(AxialEntropyError):
    """The request itself is malformed."""

    exit_status = 2


class MatrixFormatError(ConfigError):
    """A matrix literal is not a square binary matrix."""


class UnknownPresetError(ConfigError):
    """A matrix reference names no known preset."""
