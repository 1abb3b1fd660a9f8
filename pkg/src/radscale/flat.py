"""Geometry of the flats: A2 root data, Weyl action, densities, boundary functions.

The 2-dimensional flat of SL(3)/SO(3) is parametrized by orthonormal
coordinates x = (x1, x2) in which the metric induced by the Killing form is
Euclidean and the three positive roots have squared length 1/3, so that the
bottom of the continuous spectrum sits at |rho|^2 = 1/3.  The half-line flat
of H2 is handled by the same interfaces with a single root of length 1 and
threshold 1/4.

Chamber coordinates y = (y1, y2) are the values of the two simple roots,
y_k = <a_k, x>; the closed positive chamber is {y1 >= 0, y2 >= 0}.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidInputError

_SQRT3 = np.sqrt(3.0)

# Tolerance for recognizing coincident orbit points; all maps here are
# closed-form, so 1e-12 absolute is safe.
ORBIT_TOL = 1e-12


@dataclass(frozen=True)
class RootSystemA2:
    """A2 root data normalized so the spectral threshold is exactly 1/3."""

    positive_roots: np.ndarray  # shape (3, 2); rows a1, a2, a3 = a1 + a2
    rho_vector: np.ndarray      # half-sum of positive roots = a3
    threshold: float            # |rho|^2, stored exactly as 1/3

    def simple_root_values(self, x):
        """Chamber coordinates y = (<a1,x>, <a2,x>) of a point (or array of points)."""
        x = np.asarray(x, dtype=float)
        return x @ self.positive_roots[:2].T


def build_root_system():
    """Return the A2 root data with |a_k|^2 = 1/3 and threshold 1/3."""
    a1 = np.array([1.0 / _SQRT3, 0.0])
    a2 = np.array([-0.5 / _SQRT3, 0.5])
    roots = np.vstack([a1, a2, a1 + a2])
    return RootSystemA2(positive_roots=roots, rho_vector=a1 + a2, threshold=1.0 / 3.0)


ROOTS = build_root_system()


def _check_lambdas(lambdas):
    lam = np.asarray(lambdas, dtype=float)
    if lam.shape != (3,):
        raise InvalidInputError(f"expected a triple of eigenvalue ratios, got shape {lam.shape}")
    if np.any(lam <= 0):
        raise InvalidInputError(f"lambdas must be positive, got {lam}")
    if abs(lam[0] * lam[1] * lam[2] - 1.0) > 1e-12:
        raise InvalidInputError(f"product of lambdas must be 1, got {lam[0]*lam[1]*lam[2]!r}")
    return lam


@dataclass(frozen=True)
class FlatPoint:
    """A point of the SL3 flat in orthonormal coordinates, with cached ratios."""

    x: np.ndarray
    _lambdas: np.ndarray = field(default=None, repr=False)

    @property
    def lambdas(self):
        """Sorted diagonal entries (lam1 <= lam2 <= lam3, product 1)."""
        if self._lambdas is not None:
            return self._lambdas
        return lambdas_from_x(self.x)

    @property
    def chamber_coords(self):
        """(y1, y2) = (log(lam2/lam1), log(lam3/lam2)) of the chamber representative."""
        lam = self.lambdas
        return np.array([np.log(lam[1] / lam[0]), np.log(lam[2] / lam[1])])


def x_from_log_lambdas(h):
    """Orthonormal coordinates of diag(exp h); h need not be sorted."""
    h = np.asarray(h, dtype=float)
    return np.array([_SQRT3 * (h[1] - h[0]), 2.0 * h[2] - h[0] - h[1]])


def log_lambdas_from_x(x):
    """Inverse of x_from_log_lambdas (unsorted representative)."""
    y1 = x[0] / _SQRT3
    y2 = 0.5 * (x[1] - x[0] / _SQRT3)
    h1 = -(2.0 * y1 + y2) / 3.0
    return np.array([h1, h1 + y1, h1 + y1 + y2])


def lambdas_from_x(x):
    """Sorted (lam1 <= lam2 <= lam3) triple of the Weyl orbit through x."""
    return np.exp(np.sort(log_lambdas_from_x(x)))


def flat_coords(lambdas):
    """Map a positive triple with product 1 to a FlatPoint.

    The map is invertible up to the Weyl action: FlatPoint.lambdas returns
    the sorted triple.
    """
    lam = _check_lambdas(lambdas)
    x = x_from_log_lambdas(np.log(lam))
    return FlatPoint(x=x, _lambdas=np.sort(lam))


def _weyl_matrices():
    """The six orthogonal 2x2 matrices of the S3 action in x-coordinates."""
    import itertools

    mats = []
    basis_h = [np.array([1.0, -1.0, 0.0]), np.array([1.0, 1.0, -2.0])]
    basis_x = np.column_stack([x_from_log_lambdas(h) for h in basis_h])
    inv = np.linalg.inv(basis_x)
    for perm in itertools.permutations(range(3)):
        cols = [x_from_log_lambdas(h[list(perm)]) for h in basis_h]
        mats.append(np.column_stack(cols) @ inv)
    return mats


WEYL_MATRICES = _weyl_matrices()


@dataclass(frozen=True)
class WeylOrbit:
    """Orbit of a FlatPoint under S3; size 1, 3 or 6."""

    points: tuple

    def __len__(self):
        return len(self.points)


def weyl_orbit(p):
    """Orbit of p (FlatPoint or raw coordinates) with duplicates merged at 1e-12."""
    x = p.x if isinstance(p, FlatPoint) else np.asarray(p, dtype=float)
    images = [w @ x for w in WEYL_MATRICES]
    kept = []
    for im in images:
        if not any(np.max(np.abs(im - k)) <= ORBIT_TOL for k in kept):
            kept.append(im)
    return WeylOrbit(points=tuple(FlatPoint(x=k) for k in kept))


def density_a(p):
    """Weyl-invariant density a(x) = prod_k |sinh <a_k, x>| (normalization c = 1).

    Accepts a FlatPoint, a coordinate pair, or an array of shape (..., 2).
    """
    x = p.x if isinstance(p, FlatPoint) else np.asarray(p, dtype=float)
    alpha = x @ ROOTS.positive_roots.T
    return np.prod(np.abs(np.sinh(alpha)), axis=-1)


def boundary_rho(lambdas):
    """Total boundary defining function (sum over i != j of lam_i/lam_j)^(-1)."""
    lam = _check_lambdas(lambdas)
    total = 0.0
    for i in range(3):
        for j in range(3):
            if i != j:
                total += lam[i] / lam[j]
    return 1.0 / total


@dataclass(frozen=True)
class RadialSpace:
    """Flat data shared by H2 and SL3 radial problems.

    ``roots`` are the positive-root vectors whose sinh factors build the
    radial density; ``weyl`` lists the orthogonal matrices of the Weyl
    action; ``threshold`` is the bottom of the continuous spectrum.
    """

    name: str
    dim: int
    roots: np.ndarray
    rho: np.ndarray
    threshold: float
    weyl: tuple

    def root_values(self, x):
        x = np.asarray(x, dtype=float)
        if x.ndim == 1 and self.dim == 1:
            x = x[:, None] if x.shape != (1,) else x[None, :]
        return np.atleast_2d(x) @ self.roots.T


H2 = RadialSpace(
    name="H2",
    dim=1,
    roots=np.array([[1.0]]),
    rho=np.array([0.5]),
    threshold=0.25,
    weyl=(np.array([[1.0]]), np.array([[-1.0]])),
)

SL3 = RadialSpace(
    name="SL3",
    dim=2,
    roots=ROOTS.positive_roots.copy(),
    rho=ROOTS.rho_vector.copy(),
    threshold=ROOTS.threshold,
    weyl=tuple(WEYL_MATRICES),
)

SPACES = {"H2": H2, "SL3": SL3}


def get_space(name):
    try:
        return SPACES[name]
    except KeyError:
        raise InvalidInputError(f"unknown space {name!r}; expected one of {sorted(SPACES)}")
