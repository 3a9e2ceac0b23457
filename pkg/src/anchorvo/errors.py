"""Exception types raised across the pipeline."""


class AnchorVOError(Exception):
    pass


class DimensionError(AnchorVOError, ValueError):
    """Input array has an unusable shape (e.g. image smaller than 16x16)."""


class EmptyAnchorError(AnchorVOError, ValueError):
    """Covariance construction requires at least one anchor pixel."""


class SingularCovarianceError(AnchorVOError):
    """Cholesky of the anchor covariance failed even after jitter escalation."""


class DegenerateEdgeError(AnchorVOError):
    """A photometric edge produced no valid residuals."""


class AssemblyError(AnchorVOError):
    """Non-finite residual or Jacobian encountered while building the normal equations."""


class UnrecoverableSingularityError(AnchorVOError):
    """Normal equations could not be factorized even with maximum damping."""


class TrackingLostError(AnchorVOError):
    """Frame tracking diverged at the finest pyramid level."""


class EmptyVisibilityError(AnchorVOError):
    """No dense observations project into the new keyframe."""


class InsufficientDataError(AnchorVOError, ValueError):
    """Trajectory alignment needs at least three pose pairs."""


class EmptyEvaluationError(AnchorVOError, ValueError):
    """Depth evaluation found no valid pixels."""


class InputError(AnchorVOError, ValueError):
    """Dataset or scene input is missing or malformed."""


class ConfigError(AnchorVOError, ValueError):
    """Configuration value out of range or missing."""
