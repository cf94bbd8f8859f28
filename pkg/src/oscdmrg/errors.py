"""Exception types shared across the package."""

import numpy as np


class ResourceLimitError(RuntimeError):
    """An operation would exceed a configured size guard."""


class ConvergenceError(RuntimeError):
    """An iterative solver failed to reach its tolerance.

    Carries the residual norms at the point of failure so callers can see
    how far the run was from converging.
    """

    def __init__(self, message, residual_norms=None):
        super().__init__(message)
        self.residual_norms = (
            None if residual_norms is None else np.asarray(residual_norms, dtype=float)
        )


class InvalidDensityError(ValueError):
    """A matrix violates the density-matrix requirements (negative weight)."""
