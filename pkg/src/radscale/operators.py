"""Coefficient fields of the scaled radial operators.

All operators are written in the convention

    L u = sum_ij S_ij d_i d_j u + sum_i b_i d_i u + c u

with S = ``second_order``, b = ``first_order``, c = ``zeroth_order``, so the
unscaled H2 radial operator is -u'' - coth(r) u' with spectrum [1/4, oo).

First-order (drift) forms additionally carry divergence-form data
(``measure`` m and ``flux_tensor`` A with L = -(1/m) div(A grad)), which is
what the assembler consumes: it needs only pointwise evaluations of m and A,
never their derivatives, and the chamber-wall couplings vanish with the
measure.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DegenerateContourError,
    InvalidInputError,
    ValidityWindowError,
    WallSingularityError,
)
from .flat import SL3, FlatPoint
from .special import coth

IM_THETA_MAX = 0.5 * math.pi


@dataclass(frozen=True)
class CutoffProfile:
    """Smooth nondecreasing cutoff: 0 on [0, T], 1 on [T + width, oo).

    Built from the standard exp(-1/x) bump primitive.  ``delta`` is the
    reciprocal of sup(phi + r phi'), computed once on a fine grid; the
    exterior deformation is a diffeomorphism whenever e^theta avoids
    (-oo, 1 - delta).
    """

    T: float
    width: float = None
    delta: float = field(init=False, default=None)

    def __post_init__(self):
        if self.T <= 0:
            raise InvalidInputError(f"cutoff T must be positive, got {self.T}")
        if self.width is None:
            object.__setattr__(self, "width", self.T)
        if self.width <= 0:
            raise InvalidInputError(f"cutoff width must be positive, got {self.width}")
        r = np.linspace(0.0, self.T + 2.0 * self.width, 40001)
        sup = np.max(self.phi(r) + r * self.dphi(r))
        object.__setattr__(self, "delta", 1.0 / sup)

    @staticmethod
    def _bump(u):
        out = np.zeros_like(u, dtype=float)
        pos = u > 0
        out[pos] = np.exp(-1.0 / u[pos])
        return out

    def phi(self, r):
        r = np.asarray(r, dtype=float)
        scalar = r.ndim == 0
        u = (np.atleast_1d(r) - self.T) / self.width
        a = self._bump(u)
        b = self._bump(1.0 - u)
        out = a / (a + b)
        return out[0] if scalar else out

    def dphi(self, r):
        r = np.asarray(r, dtype=float)
        scalar = r.ndim == 0
        u = (np.atleast_1d(r) - self.T) / self.width
        a = self._bump(u)
        b = self._bump(1.0 - u)
        da = np.zeros_like(u)
        db = np.zeros_like(u)
        inside = (u > 0) & (u < 1)
        da[inside] = a[inside] / u[inside] ** 2
        db[inside] = -b[inside] / (1.0 - u[inside]) ** 2
        out = np.zeros_like(u)
        denom = (a + b)[inside]
        out[inside] = (da[inside] * b[inside] - a[inside] * db[inside]) / denom**2 / self.width
        return out[0] if scalar else out


@dataclass(frozen=True)
class ScalingParam:
    """Complex scaling parameter; uniform or exterior-with-cutoff variant."""

    theta: complex
    variant: str = "uniform"
    cutoff: CutoffProfile = None

    def __post_init__(self):
        theta = complex(self.theta)
        if abs(theta.imag) >= IM_THETA_MAX:
            raise ValidityWindowError(
                f"|Im theta| = {abs(theta.imag):.6g} violates the window |Im theta| < pi/2"
            )
        if self.variant not in ("uniform", "exterior"):
            raise InvalidInputError(f"unknown scaling variant {self.variant!r}")
        if self.variant == "exterior":
            if self.cutoff is None:
                raise InvalidInputError("exterior scaling requires a CutoffProfile")
            w = np.exp(theta)
            if abs(w.imag) < 1e-14 and w.real <= 1.0 - self.cutoff.delta + 1e-14:
                raise ValidityWindowError(
                    f"e^theta = {w.real:.6g} lies in (-inf, 1 - delta] with "
                    f"delta = {self.cutoff.delta:.6g}; the deformed map degenerates"
                )

    @property
    def w(self):
        return np.exp(complex(self.theta))

    @property
    def T(self):
        return self.cutoff.T if self.cutoff is not None else None


@dataclass(frozen=True)
class CoefficientSet:
    """Coefficients of one radial operator at one scaling parameter.

    ``second_order``/``first_order``/``zeroth_order`` map points (radii for
    H2, chamber points for SL3) to PDE coefficients; drift forms also expose
    ``measure`` and ``flux_tensor`` for divergence-form assembly.
    """

    space: str
    form: str
    scaling: ScalingParam
    second_order: callable
    first_order: callable
    zeroth_order: callable
    measure: callable = None
    flux_tensor: callable = None


def exterior_scaling_map(r, sp):
    """Deformed radius and its derivative for the exterior contour.

    Returns (Phi(r), Phi'(r)) with Phi(r) = (1 + (w-1) phi(r)) r; the
    derivative is 1 + (w-1)(phi + r phi').
    """
    if sp.variant != "exterior":
        raise InvalidInputError("exterior_scaling_map requires an exterior ScalingParam")
    r = np.asarray(r, dtype=float)
    w = sp.w
    phi = sp.cutoff.phi(r)
    dphi = sp.cutoff.dphi(r)
    deformed = (1.0 + (w - 1.0) * phi) * r
    derivative = 1.0 + (w - 1.0) * (phi + r * dphi)
    if np.any(np.abs(derivative) < 1e-10):
        raise DegenerateContourError(
            "exterior contour derivative vanishes; e^theta is too close to (-inf, 1-delta)"
        )
    return deformed, derivative


def _require_positive_radius(r):
    if np.any(np.asarray(r) <= 0):
        raise InvalidInputError("radius must be positive")


def h2_radial_coefficients(r, sp, form="first-order"):
    """Coefficient set of the scaled H2 radial operator, validated at radius r.

    first-order:  -w^{-2} d_r^2 - w^{-1} coth(w r) d_r   (weighted half-line)
    symmetrized:  -w^{-2} d_r^2 + 1/4 - 1/(4 sinh^2(w r))  (plain half-line)

    The two are related by conjugation with sinh(w r)^{1/2}; that equivalence
    is a tested property, not assumed here.
    """
    _require_positive_radius(r)
    w = sp.w

    def _arr(rr):
        return np.asarray(rr, dtype=float)

    if form == "symmetrized":
        if sp.variant != "uniform":
            raise InvalidInputError("symmetrized H2 form is only defined for uniform scaling")
        return CoefficientSet(
            "H2", "symmetrized", sp,
            second_order=lambda rr: -(w**-2) * np.ones_like(_arr(rr), dtype=complex),
            first_order=lambda rr: np.zeros_like(_arr(rr), dtype=complex),
            zeroth_order=lambda rr: 0.25 - 0.25 / np.sinh(w * _arr(rr)) ** 2,
        )

    if form != "first-order":
        raise InvalidInputError(f"unknown H2 form {form!r}")

    if sp.variant == "uniform":
        measure = lambda rr: np.sinh(w * _arr(rr))
        flux = lambda rr: (w**-2) * np.sinh(w * _arr(rr))
        second = lambda rr: -(w**-2) * np.ones_like(_arr(rr), dtype=complex)
        first = lambda rr: -(w**-1) * coth(w * _arr(rr))
    else:
        def measure(rr):
            d, dd = exterior_scaling_map(rr, sp)
            return np.sinh(d) * dd

        def flux(rr):
            d, dd = exterior_scaling_map(rr, sp)
            return np.sinh(d) / dd

        def second(rr):
            _, dd = exterior_scaling_map(rr, sp)
            return -1.0 / dd**2

        def first(rr):
            # -(flux')/measure; the contour curvature term uses a numerical
            # derivative (the assembler works from measure/flux directly).
            rr = _arr(rr)
            d, dd = exterior_scaling_map(rr, sp)
            eps = 1e-6
            _, dp = exterior_scaling_map(rr + eps, sp)
            _, dm = exterior_scaling_map(np.maximum(rr - eps, 1e-12), sp)
            d2 = (dp - dm) / (2 * eps)
            return -coth(d) / dd + d2 / dd**3

    return CoefficientSet(
        "H2", "first-order", sp,
        second_order=second, first_order=first,
        zeroth_order=lambda rr: np.zeros_like(_arr(rr), dtype=complex),
        measure=measure, flux_tensor=flux,
    )


def _chamber_alphas(x):
    x = np.asarray(x, dtype=float)
    alphas = SL3.roots @ x
    if np.any(np.abs(alphas) < 1e-14):
        raise WallSingularityError(f"point {x} lies on a Weyl chamber wall; use an offset grid")
    if np.any(alphas < 0):
        raise WallSingularityError(f"point {x} is outside the open positive chamber")
    return alphas


def sl3_radial_coefficients(p, sp):
    """Coefficient set of the scaled SL3 radial operator, validated at p.

    Uniform variant: -w^{-2} Lap - w^{-1} sum_k coth(w alpha_k(x)) <a_k, grad>,
    equivalently -(1/m) div(A grad) with m(x) = prod_k sinh(w alpha_k(x)) and
    A = w^{-2} m I.  The exterior variant composes with the radial contour
    map of exterior_scaling_map, which makes the flux tensor anisotropic.
    """
    x0 = p.x if isinstance(p, FlatPoint) else np.asarray(p, dtype=float)
    _chamber_alphas(x0)
    w = sp.w

    def alphas_of(x):
        return np.asarray(x) @ SL3.roots.T

    if sp.variant == "uniform":
        def measure(x):
            return np.prod(np.sinh(w * alphas_of(np.asarray(x, dtype=float))), axis=-1)

        def flux_tensor(x):
            return (w**-2) * np.multiply.outer(measure(x), np.eye(2))

        def second(x):
            shape = np.asarray(x, dtype=float).shape[:-1]
            return np.multiply.outer(np.ones(shape, dtype=complex), -(w**-2) * np.eye(2))

        def first(x):
            c = coth(w * alphas_of(np.asarray(x, dtype=float)))
            return -(w**-1) * np.einsum("...k,kd->...d", c, SL3.roots.astype(complex))
    else:
        def _factors(x):
            x = np.asarray(x, dtype=float)
            r = np.linalg.norm(x, axis=-1)
            phi = sp.cutoff.phi(r)
            dphi = sp.cutoff.dphi(r)
            g = 1.0 + (w - 1.0) * phi
            dpar = 1.0 + (w - 1.0) * (phi + r * dphi)
            return r, g, dpar

        def measure(x):
            x = np.asarray(x, dtype=float)
            r, g, dpar = _factors(x)
            a_def = np.prod(np.sinh(alphas_of(g[..., None] * x)), axis=-1)
            return a_def * g * dpar

        def flux_tensor(x):
            x = np.asarray(x, dtype=float)
            r, g, dpar = _factors(x)
            a_def = np.prod(np.sinh(alphas_of(g[..., None] * x)), axis=-1)
            rsafe = np.where(r == 0, 1.0, r)
            xhat = x / rsafe[..., None]
            proj = np.einsum("...i,...j->...ij", xhat, xhat)
            eye = np.broadcast_to(np.eye(2), proj.shape)
            tensor = (g / dpar)[..., None, None] * proj + (dpar / g)[..., None, None] * (eye - proj)
            return a_def[..., None, None] * tensor

        def second(x):
            return -flux_tensor(x) / measure(x)[..., None, None]

        def first(x):
            # -(div A)/m with numerical divergence; assembly-side code never
            # differentiates coefficients, so this is only for inspection.
            x = np.asarray(x, dtype=float)
            eps = 1e-6
            div = np.zeros(x.shape[:-1] + (2,), dtype=complex)
            for i in range(2):
                dx = np.zeros(2)
                dx[i] = eps
                div += (flux_tensor(x + dx)[..., i, :] - flux_tensor(x - dx)[..., i, :]) / (2 * eps)
            return -div / measure(x)[..., None]

    zeroth = lambda x: np.zeros(np.asarray(x, dtype=float).shape[:-1], dtype=complex)
    return CoefficientSet(
        "SL3", "first-order", sp,
        second_order=second, first_order=first, zeroth_order=zeroth,
        measure=measure, flux_tensor=flux_tensor,
    )


def model_operator_coefficients(kind, t, r, sp):
    """Coefficient slots of the boundary model operators in (t, r) variables.

    Both models act on the half-cylinder (t, r); t = -log s is the variable
    along a wall at infinity and r the H2 radius.  Slots hold coefficients of
    d_t^2, d_t, d_r^2, d_r and the zeroth-order term:

      Lsharp: -1/4 e^{-2 theta} d_t^2 - 1/2 e^{-theta} d_t
              + 1/3 (H2 drift form in r)
      L0:     -1/4 e^{-2 theta} d_t^2 + 1/3 (H2 drift form in r) + 1/4
    """
    _require_positive_radius(r)
    w = sp.w
    e2 = np.exp(-2.0 * complex(sp.theta))
    e1 = np.exp(-1.0 * complex(sp.theta))
    slots = {
        "t2": -0.25 * e2,
        "r2": -e2 / 3.0,
        "r1": -(e1 / 3.0) * coth(w * np.asarray(r, dtype=float)),
    }
    if kind == "Lsharp":
        slots["t1"] = -0.5 * e1
        slots["zero"] = 0.0 + 0.0j
    elif kind == "L0":
        slots["t1"] = 0.0 + 0.0j
        slots["zero"] = 0.25 + 0.0j
    else:
        raise InvalidInputError(f"unknown model operator {kind!r}")
    return slots


def _radlap2_slots(p):
    """Radial-Laplacian coefficients in the (mu, s) chart, pushed to
    orthonormal flat coordinates.

    Returns (S11, S22, b1, b2) for the operator S11 d_{x1}^2 + S22 d_{x2}^2
    + b1 d_{x1} + b2 d_{x2}; no cross term arises from this chart.
    """
    lam = p.lambdas
    mu = lam[0] / lam[1]
    s = lam[2] ** -1.5
    den = s**4 - s**2 * (mu + 1.0 / mu) + 1.0
    if abs(den) < 1e-14:
        raise InvalidInputError("evaluation point lies on the excluded coordinate locus")
    c_mu = (mu + 1.0 / mu) / (mu - 1.0 / mu) - s**2 * (mu - 1.0 / mu) / den
    c_s = 2.0 * (s**4 - 1.0) / den
    # With u = log mu = -x1/sqrt(3) and v = log s = -x2/2:
    # (1/3)(-(mu d_mu)^2) = -d_{x1}^2, (1/4)(-(s d_s)^2) = -d_{x2}^2,
    # -(1/3) c_mu d_u = (c_mu/sqrt3) d_{x1}, -(1/4) c_s d_v = (c_s/2) d_{x2}.
    return -1.0, -1.0, c_mu / math.sqrt(3.0), c_s / 2.0


def coefficient_identity_check(p):
    """Max absolute discrepancy between the (mu, s)-chart coefficients and
    the root-system drift form at a chamber point."""
    if not isinstance(p, FlatPoint):
        p = FlatPoint(x=np.asarray(p, dtype=float))
    _chamber_alphas(p.x)
    s11, s22, b1, b2 = _radlap2_slots(p)
    cs = sl3_radial_coefficients(p, ScalingParam(theta=0.0))
    S = cs.second_order(p.x)
    b = cs.first_order(p.x)
    return max(
        abs(S[0, 0] - s11),
        abs(S[1, 1] - s22),
        abs(S[0, 1]),
        abs(S[1, 0]),
        abs(b[0] - b1),
        abs(b[1] - b2),
    )
