"""Eigenvalues, classification, theta-trajectories, and resolvent continuation.

The discrete operators are pencils (K, M); eigenvalue work uses the
complex-symmetric similarity Ahat = M^{-1/2} K M^{-1/2} (diagonal M, any
square-root branch: sign flips are a similarity).  Resolvent solves factor
(K - lambda M) directly.

Branch convention: the physical sheet is Im sqrt(lambda - ev0) < 0, and the
continued sheet is reached by increasing arg(lambda - ev0) through 0.  The
essential spectrum of the scaled operator is the ray ev0 + e^{-2 Im theta}
[0, oo); a spectral point is reachable once it is outside a tube around
that ray, which for points above the cut requires Im theta < 0.
"""

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sps
import scipy.sparse.linalg as spla

from .discretize import assemble_operator, build_grid, discrete_inner, project_vector
from .errors import (
    ContinuationBlockedError,
    InvalidInputError,
    PoleProximityError,
    ShiftError,
)
from .flat import FlatPoint, get_space
from .operators import (
    CutoffProfile,
    ScalingParam,
    h2_radial_coefficients,
    sl3_radial_coefficients,
)
from .scaling import apply_scaling, delta_approx

EV0 = {"H2": 0.25, "SL3": 1.0 / 3.0}

DENSE_CUTOFF = 2400

BRANCH_CONVENTION = "Im sqrt(lambda-ev0) < 0"


def default_tube_radius(z):
    """Default half-width of the essential-spectrum tube at spectral point z."""
    return 0.05 * (1.0 + abs(z))


def ray_distance(lam, ev0, im_theta):
    """Distance from lam to the rotated ray ev0 + e^{-2 i im_theta} [0, oo)."""
    z = (complex(lam) - ev0) * np.exp(2j * im_theta)
    if z.real >= 0:
        return abs(z.imag)
    return abs(z)


def required_im_theta(lam, ev0, tube_radius=None):
    """Smallest |Im theta| (theta = -i beta) that unblocks lam, or None.

    Scans beta in (0, pi/2); for points below the cut beta = 0 may already
    work, in which case 0.0 is returned.
    """
    tube = default_tube_radius(lam) if tube_radius is None else tube_radius
    for beta in np.linspace(0.0, 0.5 * math.pi - 0.02, 600):
        if ray_distance(lam, ev0, -beta) > tube:
            return float(beta)
    return None


@dataclass(frozen=True)
class SheetRegion:
    """The region S_beta = {-pi < arg(lambda - ev0) < 2 beta} of the surface."""

    beta: float
    ev0: float

    def __post_init__(self):
        if not 0.0 < self.beta < 0.5 * math.pi:
            raise InvalidInputError("beta must lie in (0, pi/2)")

    def contains(self, lam):
        arg = np.angle(complex(lam) - self.ev0)
        return -math.pi < arg < 2.0 * self.beta


@dataclass(frozen=True)
class RayFit:
    intercept: complex
    angle: float
    residual: float


@dataclass(frozen=True)
class SpectrumResult:
    theta: complex
    eigenvalues: np.ndarray
    classification: tuple
    ray_fit: RayFit
    ray_distances: np.ndarray


def _symmetrized_pencil(op):
    d = 1.0 / np.sqrt(op.M.astype(complex))
    return sps.diags(d) @ op.K @ sps.diags(d), d


def eigenvalues(op, count, shift, return_vectors=False):
    """Eigenvalues of the assembled operator nearest the shift.

    Dense solve below DENSE_CUTOFF, otherwise ARPACK shift-invert on the
    complex-symmetric similarity.  Ordering: distance to shift, ties by real
    part.  The ARPACK start vector is fixed, so results are deterministic.
    """
    n = op.size
    count = min(count, n - 2) if n > DENSE_CUTOFF else min(count, n)
    Ahat, d = _symmetrized_pencil(op)
    if n <= DENSE_CUTOFF:
        vals, vecs = sla.eig(Ahat.toarray())
    else:
        v0 = np.ones(n) / math.sqrt(n)
        try:
            vals, vecs = spla.eigs(Ahat.tocsc(), k=count, sigma=complex(shift),
                                   which="LM", v0=v0)
        except RuntimeError as exc:
            raise ShiftError(
                f"shift-invert factorization failed at shift {shift}: {exc}; "
                "perturb the shift away from the spectrum"
            ) from exc
    order = np.lexsort((vals.real, np.abs(vals - complex(shift))))
    vals = vals[order][:count]
    if not return_vectors:
        return vals
    vecs = vecs[:, order][:, :count] * d[:, None]  # back to the radial gauge
    return vals, vecs


def classify_spectrum(eigs, theta, ev0, tube_radius=None, vectors=None, grid=None):
    """Classify eigenvalues against the rotated ray and fit the ray line.

    continuum-ray: within the tube of ev0 + e^{-2 i Im theta}[0, oo);
    spurious: outer-boundary localized eigenvector (> 50% of discrete mass
    in the outer 20% annulus), when vectors and grid are supplied;
    candidate-resonance: everything else (subject to trajectory confirmation).

    The fitted ray is the least-squares complex line through the
    continuum-classified eigenvalues; its intercept is the crossing with the
    real axis (the bottom of the rotated continuum), or the lowest ray point
    when the line is horizontal.
    """
    eigs = np.asarray(eigs, dtype=complex)
    im_theta = complex(theta).imag
    dists = np.array([ray_distance(e, ev0, im_theta) for e in eigs])
    tubes = np.array([default_tube_radius(e) if tube_radius is None else tube_radius
                      for e in eigs])
    labels = []
    for e, dist, tube, idx in zip(eigs, dists, tubes, range(len(eigs))):
        if dist <= tube:
            labels.append("continuum-ray")
            continue
        if vectors is not None and grid is not None:
            v = vectors[:, idx]
            mass = np.abs(v) ** 2 * grid.measure_weights
            outer = np.linalg.norm(np.atleast_2d(grid.nodes.T).T, axis=-1) > 0.8 * grid.R
            if mass[outer].sum() > 0.5 * mass.sum():
                labels.append("spurious")
                continue
        labels.append("candidate-resonance")

    ray = eigs[[l == "continuum-ray" for l in labels]]
    if len(ray) < 3:
        warnings.warn("fewer than 3 ray points; ray fit is degenerate", stacklevel=2)
    if len(ray) >= 2:
        mean = ray.mean()
        dev = ray - mean
        d2 = np.sum(dev * dev)
        d = np.sqrt(d2) if abs(d2) > 0 else 1.0 + 0j
        d /= abs(d)
        if ((mean - ev0) * np.conj(d)).real < 0:
            d = -d
        perp = np.abs((dev * np.conj(d)).imag)
        residual = float(np.max(perp)) if len(perp) else math.inf
        if abs(d.imag) > 1e-8:
            t_cross = -mean.imag / d.imag
            intercept = mean + t_cross * d
        else:
            t_min = np.min((dev * np.conj(d)).real)
            intercept = mean + t_min * d
        fit = RayFit(intercept=complex(intercept), angle=float(np.angle(d)),
                     residual=residual)
    else:
        fit = RayFit(intercept=complex("nan"), angle=float("nan"), residual=math.inf)
    return SpectrumResult(theta=complex(theta), eigenvalues=eigs,
                          classification=tuple(labels), ray_fit=fit,
                          ray_distances=dists)


# ---------------------------------------------------------------------------
# operator construction and caching
# ---------------------------------------------------------------------------

_OPERATOR_CACHE = {}
_FACTOR_CACHE = {}
_CACHE_LIMIT = 64


def clear_caches():
    _OPERATOR_CACHE.clear()
    _FACTOR_CACHE.clear()


def _scaling_key(sp):
    cut = sp.cutoff
    return (complex(sp.theta), sp.variant,
            None if cut is None else (cut.T, cut.width))


def make_operator(space, h, R, scaling, form=None):
    """Assemble (with caching) the radial operator for one scaling parameter.

    form defaults to the drift (first-order) form; pass "symmetrized" for
    the H2 eigenvalue reference form.
    """
    if form is None:
        form = "first-order"
    key = (space, round(h, 14), round(R, 14), _scaling_key(scaling), form)
    if key in _OPERATOR_CACHE:
        return _OPERATOR_CACHE[key]
    grid = build_grid(space, h, R)
    if space == "H2":
        coeffs = h2_radial_coefficients(grid.nodes[0], scaling, form)
    else:
        coeffs = sl3_radial_coefficients(FlatPoint(x=grid.nodes[0]), scaling)
    op = assemble_operator(coeffs, grid)
    if len(_OPERATOR_CACHE) >= _CACHE_LIMIT:
        _OPERATOR_CACHE.pop(next(iter(_OPERATOR_CACHE)))
    _OPERATOR_CACHE[key] = op
    return op


def _factorize(op, lam):
    key = (id(op), complex(lam))
    if key in _FACTOR_CACHE:
        return _FACTOR_CACHE[key]
    mat = (op.K - lam * sps.diags(op.M)).tocsc()
    try:
        lu = spla.splu(mat)
    except RuntimeError as exc:
        raise PoleProximityError(
            f"resolvent factorization at lambda = {lam} failed: {exc}"
        ) from exc
    if len(_FACTOR_CACHE) >= _CACHE_LIMIT:
        _FACTOR_CACHE.pop(next(iter(_FACTOR_CACHE)))
    _FACTOR_CACHE[key] = lu
    return lu


def resolvent_apply(op, lam, rhs, rtol=1e-10, source_kind="function"):
    """Solve (A - lambda) u = rhs for the assembled operator A = M^{-1} K.

    source_kind "function" treats rhs as an element of the weighted space
    (the pencil solve is (K - lambda M) u = M rhs); "flat" treats rhs as a
    source density against the flat measure, (K - lambda M) u = rhs, which
    is the convention under which the delta approximants produce the Green
    function (the weighted measure vanishes at the origin).

    Returns (u, residual) with residual = ||(A - lambda) u - rhs|| / ||rhs||
    in the equation actually solved.
    """
    rhs = np.asarray(rhs, dtype=complex)
    lu = _factorize(op, lam)
    if source_kind == "function":
        b = op.M * rhs
    elif source_kind == "flat":
        b = rhs
    else:
        raise InvalidInputError(f"unknown source_kind {source_kind!r}")
    u = lu.solve(b)
    resid_vec = (op.K @ u) - lam * (op.M * u) - b
    scale = np.linalg.norm(b)
    residual = float(np.linalg.norm(resid_vec) / scale) if scale > 0 else 0.0
    if not np.all(np.isfinite(u)) or residual > 1e-6:
        raise PoleProximityError(
            f"solve at lambda = {lam} is pole-contaminated (residual {residual:.2e})",
            nearest_eigenvalue=None,
        )
    if residual > rtol:
        warnings.warn(f"resolvent residual {residual:.2e} above {rtol:.1e}", stacklevel=2)
    return u, residual


@dataclass(frozen=True)
class MatrixElement:
    """One continued matrix element with its provenance."""

    value: complex
    lam: complex
    theta: complex
    space: str
    h: float
    R: float
    residual: float
    sheet: str

    def __complex__(self):
        return complex(self.value)


def _check_reachable(lam, space, scaling, tube_radius):
    ev0 = EV0[space]
    dist = ray_distance(lam, ev0, complex(scaling.theta).imag)
    tube = default_tube_radius(lam) if tube_radius is None else tube_radius
    if dist <= tube:
        need = required_im_theta(lam, ev0, tube)
        raise ContinuationBlockedError(
            f"lambda = {lam} lies inside the essential-spectrum tube at "
            f"Im theta = {complex(scaling.theta).imag:.4f}; smallest unblocking "
            f"|Im theta| is {need if need is not None else 'not available'} "
            "(theta = -i beta)",
            min_im_theta=need,
        )


def _sheet_of(lam, ev0):
    return "physical" if np.angle(complex(lam) - ev0) < 0 else "continued"


def matrix_element(f, g, lam, theta, space=None, h=None, R=None,
                   variant="uniform", cutoff=None, tube_radius=None, form=None):
    """<U_conj(theta) f, R(lambda, theta) U_theta g> on the discrete grid.

    By the scaling identity this is theta-independent wherever it is defined,
    which is what makes it the analytic continuation of <f, R(lambda) g>.
    Returns a MatrixElement record (value + provenance).
    """
    space = space or f.space
    if h is None or R is None:
        raise InvalidInputError("matrix_element requires grid parameters h and R")
    scaling = theta if isinstance(theta, ScalingParam) else ScalingParam(
        theta=complex(theta), variant=variant, cutoff=cutoff)
    _check_reachable(lam, space, scaling, tube_radius)
    op = make_operator(space, h, R, scaling, form=form)
    bar = ScalingParam(theta=np.conj(complex(scaling.theta)), variant=scaling.variant,
                       cutoff=scaling.cutoff)
    uf = project_vector(apply_scaling(f, bar), op.grid)
    ug = project_vector(apply_scaling(g, scaling), op.grid)
    sol, residual = resolvent_apply(op, lam, ug)
    value = complex(np.sum(np.conj(uf) * sol * op.ip_weights))
    return MatrixElement(value=value, lam=complex(lam), theta=complex(scaling.theta),
                         space=space, h=h, R=R, residual=residual,
                         sheet=_sheet_of(lam, EV0[space]))


@dataclass(frozen=True)
class ResolventTrace:
    """Sampled matrix elements along a lambda path with sheet bookkeeping."""

    f_terms: int
    g_terms: int
    theta: complex
    space: str
    samples: tuple  # of (lam, value, sheet, cross_check_residual)
    branch_convention: str = BRANCH_CONVENTION


def continue_across_cut(f, g, lambda_path, theta, space=None, h=None, R=None,
                        tube_radius=None):
    """Sample <f, R(lambda) g> along a path continuing across the cut.

    The path must start on the physical sheet (Im(lambda - ev0) < 0); the
    sheet tag flips to "continued" once arg(lambda - ev0) >= 0.  Where the
    theta = 0 computation is defined, the stored residual is the relative
    cross-theta discrepancy against it.
    """
    space = space or f.space
    ev0 = EV0[space]
    path = [complex(z) for z in lambda_path]
    if not path:
        raise InvalidInputError("empty lambda path")
    if (path[0] - ev0).imag >= 0:
        raise InvalidInputError("path must start on the physical sheet Im(lambda-ev0) < 0")
    beta_needed = max(0.0, max(np.angle(z - ev0) for z in path) / 2.0)
    im_theta = complex(theta).imag
    if beta_needed >= -im_theta and beta_needed > 0:
        raise ContinuationBlockedError(
            f"path reaches arg(lambda-ev0) = {2*beta_needed:.3f} but -Im theta = "
            f"{-im_theta:.3f} <= {beta_needed:.3f}",
            min_im_theta=beta_needed + 0.05,
        )
    samples = []
    for lam in path:
        me = matrix_element(f, g, lam, theta, space=space, h=h, R=R,
                            tube_radius=tube_radius)
        cross = math.nan
        if _sheet_of(lam, ev0) == "physical":
            try:
                me0 = matrix_element(f, g, lam, 0.0, space=space, h=h, R=R,
                                     tube_radius=tube_radius)
                cross = abs(me.value - me0.value) / max(abs(me0.value), 1e-300)
            except ContinuationBlockedError:
                pass
        samples.append((lam, me.value, me.sheet, cross))
    return ResolventTrace(
        f_terms=len(f.centers), g_terms=len(g.centers), theta=complex(theta),
        space=space, samples=tuple(samples),
    )


def green_function(lam, theta, t_sequence, probe, space=None, h=None, R=None,
                   variant="uniform", cutoff=None, tube_radius=None):
    """Pairings <probe, R(lambda, theta) U_theta delta_t> along a t-sequence.

    The t -> 0 limit defines the Green pairing at the origin.  The exterior
    variant realizes the distributional statement: the scaling fixes
    everything inside the ball of radius T, so the delta approximants (and
    any probe supported there) are not deformed at all.
    """
    t_sequence = [float(t) for t in t_sequence]
    if any(t <= 0 for t in t_sequence) or any(
            t2 >= t1 for t1, t2 in zip(t_sequence, t_sequence[1:])):
        raise InvalidInputError("t_sequence must be positive and strictly decreasing")
    space = space or probe.space
    scaling = theta if isinstance(theta, ScalingParam) else ScalingParam(
        theta=complex(theta), variant=variant, cutoff=cutoff)
    _check_reachable(lam, space, scaling, tube_radius)
    op = make_operator(space, h, R, scaling)
    bar = ScalingParam(theta=np.conj(complex(scaling.theta)), variant=scaling.variant,
                       cutoff=scaling.cutoff)
    uf = project_vector(apply_scaling(probe, bar), op.grid)
    values = []
    for t in t_sequence:
        dt = delta_approx(t, space)
        ug = project_vector(apply_scaling(dt, scaling), op.grid)
        sol, _ = resolvent_apply(op, lam, ug, source_kind="flat")
        values.append(complex(np.sum(np.conj(uf) * sol * op.ip_weights)))
    _check_cauchy(values, t_sequence)
    return values


def green_extrapolate(values, t_sequence):
    """Linear-in-t extrapolation of the Green pairing to t = 0."""
    t1, t2 = t_sequence[-2], t_sequence[-1]
    v1, v2 = values[-2], values[-1]
    return (t1 * v2 - t2 * v1) / (t1 - t2)


def _check_cauchy(values, t_sequence):
    from .errors import ConvergenceError

    if len(values) < 3:
        return
    steps = [abs(b - a) for a, b in zip(values, values[1:])]
    if steps[-1] > 2.0 * steps[0] and steps[-1] > 1e-8 * abs(values[-1]):
        raise ConvergenceError(
            "delta-approximant sequence is not Cauchy",
            diagnostics={"t": list(t_sequence), "values": [complex(v) for v in values],
                         "steps": steps},
        )


# ---------------------------------------------------------------------------
# theta trajectories
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TrajectoryResult:
    thetas: tuple
    paths: tuple            # each a tuple of complex eigenvalues, one per theta
    scores: tuple           # mean consecutive movement per path
    classifications: tuple  # classification of each path's final point
    ambiguous: tuple        # paths with a matching ambiguity flag
    spectra: tuple          # per-theta SpectrumResult


def theta_trajectory(theta_list, space, h, R, count=24, shift=None, form=None,
                     tube_radius=None, grid_scaling="covariant"):
    """Track eigenvalues along an ordered theta list.

    Matching is nearest-neighbor with radius 3x the median consecutive gap;
    ambiguous matches (two candidates inside the radius) are flagged, not
    fatal.  With grid_scaling="covariant" the grid contracts with e^{-Re
    theta}, realizing the discrete unitary equivalence along real theta.
    """
    ev0 = EV0[space]
    if form is None:
        form = "symmetrized" if space == "H2" else None
    thetas = [complex(t) for t in theta_list]
    spectra = []
    for th in thetas:
        scale = math.exp(-th.real) if grid_scaling == "covariant" else 1.0
        op = make_operator(space, h * scale, R * scale, ScalingParam(theta=th), form=form)
        sh = shift if shift is not None else ev0 + 0.3 * np.exp(-2j * th.imag)
        vals, vecs = eigenvalues(op, count, sh, return_vectors=True)
        spectra.append(classify_spectrum(vals, th, ev0, tube_radius=tube_radius,
                                         vectors=vecs, grid=op.grid))

    paths = [[e] for e in spectra[0].eigenvalues]
    alive = list(range(len(paths)))
    ambiguous = set()
    for spec in spectra[1:]:
        pool = list(spec.eigenvalues)
        gaps = np.sort(np.abs(np.diff(np.sort_complex(np.asarray(pool)))))
        radius = 3.0 * (np.median(gaps) if len(gaps) else np.inf)
        taken = set()
        still = []
        for pi in alive:
            last = paths[pi][-1]
            dists = np.array([abs(z - last) if j not in taken else np.inf
                              for j, z in enumerate(pool)])
            j = int(np.argmin(dists))
            if not np.isfinite(dists[j]) or dists[j] > radius:
                continue  # path ends here
            inside = np.sum(dists <= radius)
            if inside > 1:
                ambiguous.add(pi)
            taken.add(j)
            paths[pi].append(pool[j])
            still.append(pi)
        alive = still

    full = [tuple(p) for p in paths if len(p) == len(thetas)]
    kept_idx = [i for i, p in enumerate(paths) if len(p) == len(thetas)]
    scores = tuple(
        float(np.mean([abs(b - a) for a, b in zip(p, p[1:])])) if len(p) > 1 else 0.0
        for p in full
    )
    final_class = []
    last_spec = spectra[-1]
    for p in full:
        j = int(np.argmin(np.abs(last_spec.eigenvalues - p[-1])))
        final_class.append(last_spec.classification[j])
    return TrajectoryResult(
        thetas=tuple(thetas), paths=tuple(full), scores=tuple(scores),
        classifications=tuple(final_class),
        ambiguous=tuple(sorted(kept_idx.index(i) for i in ambiguous if i in kept_idx)),
        spectra=tuple(spectra),
    )


def resonance_candidates(traj, score_threshold=1e-2):
    """Indices of stationary off-ray paths (the pre-confirmation candidates)."""
    out = []
    for i, (score, label) in enumerate(zip(traj.scores, traj.classifications)):
        if label == "candidate-resonance" and score < score_threshold:
            out.append(i)
    return out


def confirmed_resonances(theta_list, space, h, R, count=24, score_threshold=1e-2,
                         match_tol=5e-3):
    """Candidates surviving theta-stationarity, grid refinement and R growth.

    A resonance is only ever reported if its path is stationary across at
    least three Im theta values and its terminal value persists (within
    match_tol) when h is halved and when R is enlarged by 25%.
    """
    if len(theta_list) < 3:
        raise InvalidInputError("need at least three theta values for confirmation")
    base = theta_trajectory(theta_list, space, h, R, count=count)
    cands = resonance_candidates(base, score_threshold)
    if not cands:
        return []
    fine = theta_trajectory(theta_list, space, h / 2.0, R, count=count)
    wide = theta_trajectory(theta_list, space, h, 1.25 * R, count=count)
    confirmed = []
    for i in cands:
        z = base.paths[i][-1]
        ok_fine = any(
            abs(p[-1] - z) < match_tol and lab == "candidate-resonance"
            for p, lab in zip(fine.paths, fine.classifications))
        ok_wide = any(
            abs(p[-1] - z) < match_tol and lab == "candidate-resonance"
            for p, lab in zip(wide.paths, wide.classifications))
        if ok_fine and ok_wide:
            confirmed.append(z)
    return confirmed
