"""Exception types shared across the package."""


class WindnavError(Exception):
    """Base class for all package-specific errors."""


class PlacementError(WindnavError):
    """Rejection sampling exhausted its retry budget (over-constrained layout)."""


class NumericError(WindnavError):
    """A numerical routine produced non-finite values."""


class GimbalLockError(WindnavError):
    """Pitch angle too close to +-pi/2 for a Euler-angle parameterization."""


class DecompositionError(WindnavError):
    """Matrix factorization failed even after jitter rescue."""


class UpdateError(WindnavError):
    """Kalman measurement update failed (singular innovation covariance)."""


class CalibrationError(WindnavError):
    """Least-squares identification failed (rank-deficient design matrix)."""


class FitError(WindnavError):
    """Curve fit failed (rank-deficient design matrix)."""


class NoPeakError(WindnavError):
    """Spectral peak extraction found no dominant frequency."""


class NoPathError(WindnavError):
    """Graph search could not reach the goal."""


class SensorPlacementError(WindnavError):
    """A sensor was queried from inside a solid obstacle."""


class TrainingDivergenceError(WindnavError):
    """Training loss became non-finite; carries the last finite checkpoint."""

    def __init__(self, message, checkpoint=None):
        super().__init__(message)
        self.checkpoint = checkpoint


class PlannerStuckError(WindnavError):
    """Every sampled rollout had infinite cost."""
