"""Stable elementary kernels used by the coefficient and scaling machinery."""

import numpy as np

# Below this magnitude coth is evaluated by its Laurent series to avoid
# cancellation in cosh/sinh near the chamber walls.
_COTH_SERIES_RADIUS = 1e-2


def coth(z):
    """coth z for real or complex arrays; series near z = 0.

    coth z = 1/z + z/3 - z^3/45 + O(z^5) for |z| < 1e-2.
    """
    z = np.asarray(z)
    scalar = z.ndim == 0
    z = np.atleast_1d(z)
    out = np.empty(z.shape, dtype=complex)
    small = np.abs(z) < _COTH_SERIES_RADIUS
    zs = np.where(small, z, 1.0)  # placeholder avoids 1/0 warnings
    out[small] = (1.0 / zs + zs / 3.0 - zs**3 / 45.0)[small]
    zb = np.where(small, 1.0, z)
    out[~small] = (1.0 / np.tanh(zb))[~small]
    return out[0] if scalar else out


def log_sinh(z):
    """Analytic branch of log sinh z on Re z > 0, matching the real values.

    Uses log sinh z = z - log 2 + log(1 - exp(-2z)); the last factor lies in
    the open right half-plane when Re z > 0, so the principal log is the
    analytic branch.  Safe for large Re z (no overflow) and for small z
    (expm1 keeps full precision).
    """
    z = np.asarray(z, dtype=complex)
    return z - np.log(2.0) + np.log(-np.expm1(-2.0 * z))


def sinh_ratio_sqrt(w, y):
    """The analytically continued square root of sinh(w*y)/sinh(y), y > 0.

    Continuous in w from w = 1 (where it equals 1); this is the branch that
    appears in the scaling Jacobians.  ``w`` may vary per point (exterior
    contours) and broadcasts against ``y``; entries with |y| < 1e-14 use the
    limit value sqrt(w).
    """
    y = np.abs(np.asarray(y, dtype=float))  # sinh(w y)/sinh(y) is even in y
    w = np.asarray(w, dtype=complex)
    scalar = y.ndim == 0 and w.ndim == 0
    y, w = np.atleast_1d(y), np.atleast_1d(w)
    y, w = np.broadcast_arrays(y, w)
    out = np.empty(y.shape, dtype=complex)
    tiny = y < 1e-14
    ys = np.where(tiny, 1.0, y)
    out[~tiny] = np.exp(0.5 * (log_sinh(w * ys) - log_sinh(ys)))[~tiny]
    out[tiny] = np.sqrt(w)[tiny]
    return out[0] if scalar else out
