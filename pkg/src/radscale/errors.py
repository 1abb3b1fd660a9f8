"""Exception hierarchy shared by all modules."""


class RadscaleError(Exception):
    """Base class for all package errors."""


class InvalidInputError(RadscaleError):
    """Malformed or out-of-domain input (non-positive width, bad lambdas, ...)."""


class ValidityWindowError(RadscaleError):
    """A scaling parameter violates its validity window, e.g. |Im theta| >= pi/2."""


class WallSingularityError(RadscaleError):
    """Coefficient evaluation requested on a Weyl chamber wall."""


class DegenerateContourError(RadscaleError):
    """The exterior deformation derivative is (numerically) zero."""


class QuadratureError(RadscaleError):
    """Adaptive quadrature failed to converge; carries the last two values."""

    def __init__(self, message, last_values=None):
        super().__init__(message)
        self.last_values = last_values


class ContinuationBlockedError(RadscaleError):
    """lambda lies inside the rotated essential-spectrum tube.

    ``min_im_theta`` is the smallest |Im theta| that would move the ray
    clear of the requested spectral point.
    """

    def __init__(self, message, min_im_theta=None):
        super().__init__(message)
        self.min_im_theta = min_im_theta


class PoleProximityError(RadscaleError):
    """Resolvent solve attempted too close to an eigenvalue of the operator."""

    def __init__(self, message, nearest_eigenvalue=None):
        super().__init__(message)
        self.nearest_eigenvalue = nearest_eigenvalue


class ShiftError(RadscaleError):
    """Shift-invert factorization failed; advises a perturbed shift."""


class ConvergenceError(RadscaleError):
    """A limiting sequence (e.g. the delta-approximant family) shows no Cauchy behavior."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics


class ConfigError(RadscaleError):
    """Run configuration is malformed; message cites the offending key."""
