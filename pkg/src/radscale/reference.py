"""Independent ODE reference solutions for the H2 radial problem.

Everything here deliberately avoids the grid machinery: homogeneous
solutions come from adaptive Runge-Kutta integration of

    u'' + coth(r) u' + lambda u = 0,

combined by variation of parameters (two-sided integration, Wronskian
matched), so the finite-difference resolvent and Green values can be
checked against an unrelated computational path.

Conventions match the weighted radial picture: the resolvent acts on
functions with the full-flat inner product 2 int_0^oo conj(u) v sinh dr,
and the Green function with pole at the origin is normalized by the flat
delta pairing, i.e. sinh(r) G'(r) -> -1/2 as r -> 0.
"""

import numpy as np
from scipy.integrate import cumulative_trapezoid, solve_ivp

from .errors import InvalidInputError

_R0 = 1e-5  # inner matching radius for the regular solution


def _rhs(r, y, lam):
    u, du = y
    return [du, -du / np.tanh(r) - lam * u]


def _regular_solution(lam, rmax):
    # series start: u = 1 - lam r^2/4 + O(r^4)
    y0 = [1.0 - lam * _R0**2 / 4.0, -lam * _R0 / 2.0]
    sol = solve_ivp(_rhs, (_R0, rmax), np.asarray(y0, dtype=complex), args=(lam,),
                    dense_output=True, rtol=1e-11, atol=1e-13, method="DOP853")
    if not sol.success:
        raise InvalidInputError(f"regular-solution integration failed: {sol.message}")
    return sol


def _decaying_solution(lam, rmax):
    sigma = np.sqrt(0.25 - complex(lam))
    if sigma.real < 0:
        sigma = -sigma
    m = -0.5 - sigma
    sol = solve_ivp(_rhs, (rmax, _R0), np.asarray([1.0, m], dtype=complex), args=(lam,),
                    dense_output=True, rtol=1e-11, atol=1e-13, method="DOP853")
    if not sol.success:
        raise InvalidInputError(f"decaying-solution integration failed: {sol.message}")
    return sol


class H2Reference:
    """Two-sided ODE machinery for one spectral parameter lambda.

    lambda must be off the half-line [1/4, oo) (physical sheet); the
    decaying branch uses the principal square root of 1/4 - lambda.
    """

    def __init__(self, lam, rmax=35.0, npts=300001):
        self.lam = complex(lam)
        self.rmax = float(rmax)
        reg = _regular_solution(self.lam, self.rmax)
        dec = _decaying_solution(self.lam, self.rmax)
        self.r = np.linspace(_R0, self.rmax, npts)
        ur, dur = reg.sol(self.r)
        ud, dud = dec.sol(self.r)
        self.u_reg, self.du_reg = ur, dur
        self.u_dec, self.du_dec = ud, dud
        wr = np.sinh(self.r) * (self.u_reg * self.du_dec - self.du_reg * self.u_dec)
        self.wronskian = wr[len(wr) // 2]
        self.wronskian_spread = float(np.max(np.abs(wr - self.wronskian)) / abs(self.wronskian))

    def _interp(self, fvals, r):
        r = np.asarray(r, dtype=float)
        out = np.interp(r, self.r, fvals.real) + 1j * np.interp(r, self.r, fvals.imag)
        return out

    def resolvent(self, g_fn, r_eval):
        """u = (Delta_rad - lambda)^{-1} g at the requested radii.

        g_fn is a callable of r (vectorized); the solution decays at
        infinity and is regular at the origin.
        """
        g = np.asarray(g_fn(self.r), dtype=complex)
        w = np.sinh(self.r)
        J_reg = cumulative_trapezoid(self.u_reg * g * w, self.r, initial=0.0)
        J_dec_full = cumulative_trapezoid(self.u_dec * g * w, self.r, initial=0.0)
        J_dec = J_dec_full[-1] - J_dec_full
        u = -(self.u_reg * J_dec + self.u_dec * J_reg) / self.wronskian
        return self._interp(u, r_eval)

    def green(self, r_eval):
        """Green function with pole at the origin: sinh(r) G'(r) -> -1/2.

        The normalization constant is the Wronskian itself, since
        sinh(r) u_dec'(r) tends to it as r -> 0 (u_reg -> 1, u_reg' -> 0).
        """
        G = -self.u_dec / (2.0 * self.wronskian)
        return self._interp(G, r_eval)

    def green_pairing(self, probe_fn):
        """<probe, G> in the full-flat weighted product 2 int conj(p) G sinh dr."""
        vals = np.conj(np.asarray(probe_fn(self.r), dtype=complex))
        G = -self.u_dec / (2.0 * self.wronskian)
        integrand = vals * G * np.sinh(self.r)
        return 2.0 * np.trapezoid(integrand, self.r)


def h2_resolvent_ode(lam, g_fn, r_eval, rmax=35.0):
    return H2Reference(lam, rmax=rmax).resolvent(g_fn, r_eval)


def h2_green_pairing_ode(lam, probe_fn, rmax=35.0):
    return H2Reference(lam, rmax=rmax).green_pairing(probe_fn)
