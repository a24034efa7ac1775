"""Exception types shared across the package."""


class RigidBrownError(Exception):
    """Base class for all package-specific errors."""


class CoincidentPointsError(RigidBrownError):
    """Two interacting particles sit at exactly the same position."""


class RangeConditionError(RigidBrownError):
    """Interaction range incompatible with the lattice (b >= c(Lambda_d) * a)."""


class CrystalValidationError(RigidBrownError):
    """Configuration violates the equal-spacing / out-of-range dichotomy."""

    def __init__(self, message, offending_pairs=None):
        super().__init__(message)
        self.offending_pairs = offending_pairs or []


class JoinDeficientError(RigidBrownError):
    """Overlap of two crystals spans too small an affine subspace to join rigidly."""


class NotAnIsometryError(RigidBrownError):
    """Displacements do not satisfy the first-order isometry constraints."""


class DegenerateFitError(RigidBrownError):
    """Cross-moment matrix is too rank-deficient for an unambiguous rotation fit."""


class SingularOperatorError(RigidBrownError):
    """The skew-projected product operator is not invertible."""

    def __init__(self, message, condition=None):
        super().__init__(message)
        self.condition = condition


class ScheduleUndefinedError(RigidBrownError):
    """Cooling schedule requested for a crystal that is not infinitesimally rigid."""


class IntegrationFailureError(RigidBrownError):
    """SDE integration produced NaN or diverging coordinates."""

    def __init__(self, message, partial_record=None):
        super().__init__(message)
        self.partial_record = partial_record


class UndersampledPathError(RigidBrownError):
    """Consecutive rotation samples too far apart for a principal logarithm."""


class DegenerateDiffusionError(RigidBrownError):
    """A pair of body moments sums to zero, so the rotation diffusion degenerates."""


class InsufficientDataError(RigidBrownError):
    """Too few surviving paths for meaningful ensemble statistics."""


class ConfigError(RigidBrownError):
    """Experiment configuration failed validation."""

    def __init__(self, problems):
        if isinstance(problems, str):
            problems = [problems]
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))
