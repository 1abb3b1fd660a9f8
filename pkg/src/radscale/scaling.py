"""The scaling group acting on radial functions.

Radial functions are represented exactly as finite Weyl-symmetrized Gaussian
mixtures (never by grid samples), so that evaluation at complex-rotated
arguments is closed form.  The action is

    (U_theta f)(x) = j_theta(x)^{1/2} f(e^theta x),

with the flat-radial Jacobian j_theta(x) = e^{dim*theta} a(e^theta x)/a(x)
forced by unitarity on L^2(a dx); the exterior variant replaces e^theta x by
the deformed contour that is the identity on the ball of radius T.
"""

import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import InvalidInputError, QuadratureError, ValidityWindowError
from .flat import get_space
from .operators import IM_THETA_MAX, ScalingParam
from .special import sinh_ratio_sqrt

# |Im theta| beyond which the scaled Gaussians leave the slab-decay class;
# the operators stay defined (the group law extends the usable range), but
# results carry a flag.
SLAB_DECAY_IM = 0.25 * math.pi


@dataclass(frozen=True)
class AnalyticVector:
    """Finite Gaussian mixture sum_j c_j exp(-(x - mu_j)^2 / t_j).

    ``centers`` has shape (n, dim), ``widths`` (n,) positive, ``coeffs`` (n,)
    complex.  (z)^2 means the analytic sum of squared components, so the
    terms evaluate at complex arguments.
    """

    space: str
    centers: np.ndarray
    widths: np.ndarray
    coeffs: np.ndarray
    symmetrized: bool = False

    @property
    def dim(self):
        return get_space(self.space).dim

    def __call__(self, x):
        """Evaluate at points of shape (..., dim); complex arguments allowed."""
        x = np.asarray(x)
        if self.dim == 1 and (x.ndim == 0 or x.shape[-1] != 1):
            x = x[..., None]
        diff = x[..., None, :] - self.centers  # (..., n, dim)
        q = np.sum(diff * diff, axis=-1)       # analytic square, no conjugation
        return np.sum(self.coeffs * np.exp(-q / self.widths), axis=-1)

    def euclidean_mass(self):
        """Exact integral over the flat w.r.t. Lebesgue measure.

        Each Gaussian term integrates to c_j (pi t_j)^{dim/2}; this is the
        pairing against the constant function 1.
        """
        return complex(np.sum(self.coeffs * (math.pi * self.widths) ** (self.dim / 2.0)))

    def to_json_dict(self):
        return {
            "space": self.space,
            "symmetrized": self.symmetrized,
            "terms": [
                {
                    "center": [float(c) for c in center],
                    "width": float(width),
                    "coeff": [float(coeff.real), float(coeff.imag)],
                }
                for center, width, coeff in zip(self.centers, self.widths, self.coeffs)
            ],
        }

    @staticmethod
    def from_json_dict(d):
        terms = d["terms"]
        centers = np.array([t["center"] for t in terms], dtype=float)
        widths = np.array([t["width"] for t in terms], dtype=float)
        coeffs = np.array([complex(t["coeff"][0], t["coeff"][1]) for t in terms])
        return AnalyticVector(
            space=d["space"], centers=centers, widths=widths, coeffs=coeffs,
            symmetrized=bool(d["symmetrized"]),
        )


def make_analytic_vector(centers, widths, coeffs, symmetrize=True, space="SL3"):
    """Build a Gaussian mixture, optionally completing centers to Weyl orbits.

    Symmetrization appends every distinct Weyl image of each center with the
    same width and coefficient; centers already related by the group are
    merged at 1e-12.
    """
    sp = get_space(space)
    centers = np.atleast_2d(np.asarray(centers, dtype=float))
    if centers.shape[-1] != sp.dim:
        if sp.dim == 1 and centers.ndim == 2 and centers.shape[0] == 1:
            centers = centers.T
        else:
            raise InvalidInputError(
                f"centers have dimension {centers.shape[-1]}, space {space} needs {sp.dim}"
            )
    widths = np.broadcast_to(np.asarray(widths, dtype=float), centers.shape[:1]).copy()
    coeffs = np.broadcast_to(np.asarray(coeffs, dtype=complex), centers.shape[:1]).copy()
    if np.any(widths <= 0):
        raise InvalidInputError("all widths must be positive")

    if not symmetrize:
        return AnalyticVector(space, centers, widths, coeffs, symmetrized=False)

    out_c, out_w, out_k = [], [], []
    for center, width, coeff in zip(centers, widths, coeffs):
        images = []
        for mat in sp.weyl:
            im = mat @ center
            if not any(np.max(np.abs(im - e)) <= 1e-12 for e in images):
                images.append(im)
        for im in images:
            out_c.append(im)
            out_w.append(width)
            out_k.append(coeff)
    return AnalyticVector(
        space, np.array(out_c), np.array(out_w), np.array(out_k), symmetrized=True
    )


def delta_approx(t, space="SL3"):
    """Mass-one Gaussian of width t at the origin (heat kernel at time t/4...).

    In 2D the normalization is 1/(pi t); in 1D it is 1/sqrt(pi t).  Pairing
    against the flat Euclidean measure converges to evaluation at the origin
    at rate O(t).
    """
    if t <= 0:
        raise InvalidInputError(f"delta width must be positive, got {t}")
    sp = get_space(space)
    norm = 1.0 / (math.pi * t) if sp.dim == 2 else 1.0 / math.sqrt(math.pi * t)
    return AnalyticVector(
        space=space,
        centers=np.zeros((1, sp.dim)),
        widths=np.array([float(t)]),
        coeffs=np.array([norm], dtype=complex),
        symmetrized=True,
    )


@dataclass(frozen=True)
class ScaledFunction:
    """U_theta applied to an AnalyticVector (or to another ScaledFunction)."""

    base: object
    scaling: ScalingParam
    space: str
    slab_boundary_flag: bool = False

    @property
    def dim(self):
        return get_space(self.space).dim

    def __call__(self, x):
        """Evaluate at real points of shape (..., dim)."""
        sp = get_space(self.space)
        x = np.asarray(x)
        if np.iscomplexobj(x):
            if np.max(np.abs(x.imag)) > 1e-14 * max(1.0, np.max(np.abs(x.real))):
                raise InvalidInputError("scaled functions are defined on the real flat")
            x = x.real
        x = np.asarray(x, dtype=float)
        if sp.dim == 1 and (x.ndim == 0 or x.shape[-1] != 1):
            x = x[..., None]
        param = self.scaling
        if param.variant == "uniform":
            w = param.w
            if w.imag == 0:
                w = w.real
            jac = np.full(x.shape[:-1], np.exp(0.5 * sp.dim * complex(param.theta)), dtype=complex)
            alph = x @ sp.roots.T
            for k in range(sp.roots.shape[0]):
                jac = jac * sinh_ratio_sqrt(w, alph[..., k])
            return jac * self.base(w * x)
        # exterior contour: identity inside B_T, uniform scaling far out
        r = np.linalg.norm(x, axis=-1)
        phi = param.cutoff.phi(r)
        dphi = param.cutoff.dphi(r)
        w = param.w
        g = 1.0 + (w - 1.0) * phi
        dpar = 1.0 + (w - 1.0) * (phi + r * dphi)
        jac = np.sqrt(dpar + 0j)
        if sp.dim == 2:
            jac = jac * np.sqrt(g + 0j)
        alph = x @ sp.roots.T
        for k in range(sp.roots.shape[0]):
            jac = jac * sinh_ratio_sqrt(g, alph[..., k])
        return jac * self.base(g[..., None] * x)


def apply_scaling(f, theta, variant="uniform", cutoff=None):
    """U_theta f (uniform) or U_{theta,T} f (exterior) as a ScaledFunction.

    theta may also be a ScalingParam, in which case variant/cutoff are taken
    from it.  theta = 0 returns f unchanged.
    """
    if isinstance(theta, ScalingParam):
        param = theta
    else:
        param = ScalingParam(theta=complex(theta), variant=variant, cutoff=cutoff)
    if abs(complex(param.theta).imag) >= IM_THETA_MAX:
        raise ValidityWindowError("|Im theta| must be < pi/2")
    if isinstance(f, ScaledFunction):
        space = f.space
    elif isinstance(f, AnalyticVector):
        space = f.space
    else:
        raise InvalidInputError(f"cannot scale object of type {type(f)!r}")
    if complex(param.theta) == 0 and param.variant == "uniform":
        return f
    flag = abs(complex(param.theta).imag) >= SLAB_DECAY_IM
    return ScaledFunction(base=f, scaling=param, space=space, slab_boundary_flag=flag)


def scale_lambdas(lambdas, theta):
    """Pointwise scaling of a diagonal representative: lam_i -> lam_i^w.

    For complex theta the entries are complex; their product stays 1.
    """
    lam = np.asarray(lambdas, dtype=float)
    if np.any(lam <= 0):
        raise InvalidInputError("lambdas must be positive")
    w = np.exp(complex(theta))
    out = np.exp(w * np.log(lam.astype(complex)))
    return out.real if abs(w.imag) < 1e-300 and np.all(np.abs(out.imag) < 1e-12) else out


def _gaussian_box(f, slope, margin=41.0):
    """Half-width of a box outside which every term of f (times a weight of
    log-slope ``slope``) is below exp(-margin) of its peak.

    Scaled functions unwrap to their base mixture; a real contraction
    (theta < 0) widens the box by e^{-theta}, and the Jacobian growth of an
    expansion is absorbed into the slope.
    """
    scalefac = 1.0
    while isinstance(f, ScaledFunction):
        re_theta = complex(f.scaling.theta).real
        scalefac *= max(1.0, float(np.exp(-re_theta)))
        slope += 2.0 * max(0.0, math.exp(re_theta) - 1.0)
        f = f.base
    radius = 0.0
    centers = np.linalg.norm(np.atleast_2d(f.centers), axis=-1)
    for c, t in zip(centers, f.widths):
        s = 1.0 / t
        d = (slope + math.sqrt(slope**2 + 4.0 * s * margin)) / (2.0 * s)
        radius = max(radius, c + d)
    return scalefac * radius + 2.0


def _tensor_gauss(npts, lo, hi, dim):
    nodes, weights = np.polynomial.legendre.leggauss(npts)
    half = 0.5 * (hi - lo)
    nodes = lo + half * (nodes + 1.0)
    weights = weights * half
    if dim == 1:
        return nodes[:, None], weights
    X, Y = np.meshgrid(nodes, nodes, indexing="ij")
    pts = np.column_stack([X.ravel(), Y.ravel()])
    W = np.outer(weights, weights).ravel()
    return pts, W


# x(y) for the SL3 chamber parametrization by simple-root values y1, y2 >= 0;
# the Euclidean area element is sqrt(det G) = 2 sqrt(3) in these coordinates.
_SL3_CHAMBER_JAC = 2.0 * math.sqrt(3.0)


def _chamber_points(y):
    x1 = math.sqrt(3.0) * y[:, 0]
    x2 = y[:, 0] + 2.0 * y[:, 1]
    return np.column_stack([x1, x2])


def _is_symmetric(f):
    base = f
    while isinstance(base, ScaledFunction):
        base = base.base
    return bool(base.symmetrized)


def quadrature_nodes(f, g=None, npts=96):
    """Shared tensor Gauss-Legendre nodes covering the support of f (and g)."""
    space = get_space(f.space)
    slope = 2.0 * float(np.linalg.norm(space.rho))
    L = _gaussian_box(f, slope)
    if g is not None:
        L = min(L, _gaussian_box(g, slope))
    return _tensor_gauss(npts, -L, L, space.dim)


def inner_product(f, g, measure="weighted-a", rtol=1e-10, max_refine=9):
    """<f, g> over the full flat, conjugate-linear in the first slot.

    measure: "weighted-a" uses the radial density a(x) (the sinh product);
    "euclidean" uses the flat Lebesgue measure.  Weighted products are
    evaluated over the positive chamber (where the density is smooth) times
    the Weyl order, so both functions must be Weyl-symmetric there.  The
    tensor Gauss-Legendre rule is refined until the relative change between
    consecutive levels drops below rtol.
    """
    space_name = f.space if hasattr(f, "space") else g.space
    space = get_space(space_name)
    if getattr(g, "space", space_name) != space_name:
        raise InvalidInputError("inner_product requires both functions on the same space")
    if measure not in ("weighted-a", "euclidean"):
        raise InvalidInputError(f"unknown measure {measure!r}")
    weighted = measure == "weighted-a"
    if weighted and not (_is_symmetric(f) and _is_symmetric(g)):
        raise InvalidInputError(
            "the weighted inner product lives on the Weyl-invariant subspace; "
            "symmetrize both arguments"
        )
    slope = 2.0 * float(np.linalg.norm(space.rho)) if weighted else 0.0
    # The integrand decays once either factor does.
    L = min(_gaussian_box(f, slope), _gaussian_box(g, slope))

    history = []
    npts = 48
    for _ in range(max_refine):
        if weighted:
            # chamber coordinates: y in (0, L]^dim, |W| copies
            ypts, wts = _tensor_gauss(npts, 0.0, L, space.dim)
            if space.dim == 2:
                pts = _chamber_points(ypts)
                wts = wts * _SL3_CHAMBER_JAC
            else:
                pts = ypts
            dens = np.prod(np.sinh(pts @ space.roots.T), axis=-1)
            vals = np.conj(f(pts)) * g(pts) * dens
            total = len(space.weyl) * np.sum(vals * wts)
        else:
            pts, wts = _tensor_gauss(npts, -L, L, space.dim)
            total = np.sum(np.conj(f(pts)) * g(pts) * wts)
        if history:
            scale = max(abs(total), abs(history[-1]), 1e-300)
            if abs(total - history[-1]) / scale < rtol:
                return total
        history.append(total)
        npts = int(npts * 1.5)
    raise QuadratureError(
        f"inner product did not converge to rtol={rtol}", last_values=tuple(history[-2:])
    )


def group_law_residual(theta1, theta2, f, npts=64):
    """sup-norm over quadrature nodes of U_t1 U_t2 f - U_{t1+t2} f.

    The group law is tested on the real group, where all operators are
    bounded; complex arguments raise.
    """
    if abs(complex(theta1).imag) > 0 or abs(complex(theta2).imag) > 0:
        raise InvalidInputError("group law residual is defined for real theta only")
    t1, t2 = float(np.real(theta1)), float(np.real(theta2))
    composed = apply_scaling(apply_scaling(f, t2), t1)
    direct = apply_scaling(f, t1 + t2)
    pts, _ = quadrature_nodes(f, npts=npts)
    return float(np.max(np.abs(composed(pts) - direct(pts))))
