"""Grids and complex-matrix assembly for the radial operators.

H2 lives on the offset half-line r_j = (j + 1/2) h, r_j < R.  The SL3
chamber is parametrized by simple-root coordinates y = (y1, y2) (a point is
x = (sqrt3 y1, y1 + 2 y2) in the orthonormal flat), and the grid is the
cell-centered square lattice y = ((i+1/2) h, (j+1/2) h) truncated at
|x| <= R.  In the flat metric this is a triangular lattice whose three
directions e1 = (1,0), e2 = (0,1), e3 = (1,-1) (index steps) support an
O(h^2) divergence-form stencil:

    div(A grad u)(p) ~ (1/h^2) sum_{d in +-{e1,e2,e3}} c_d(mid)(u(p+d) - u(p))

with direction weights c_d obtained from B = Jinv A Jinv^T
(c1 = B11+B12, c2 = B22+B12, c3 = -B12).  Edge midpoints that straddle a
Weyl wall land exactly on it, where the measure vanishes, so the wall
coupling drops out; for Weyl-even functions this is the mirror-ghost
(reflection) boundary condition, since any bounded ghost value multiplies a
zero weight.  The outer boundary is Dirichlet.

The drift (first-order) forms assemble as the pencil (K, M): K is the
complex-symmetric stiffness including zeroth-order terms, M the diagonal of
measure values, and the operator matrix is M^{-1} K.  The H2 symmetrized
form assembles directly (M = I); its wall row uses the ghost coefficient
1 - sqrt(3), which reproduces the r^{1/2} wall mode of the critical
-1/(4r^2) potential and restores second-order eigenvalue convergence.
"""

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sps

from .errors import InvalidInputError
from .flat import get_space
from .operators import CoefficientSet

_SQRT3 = math.sqrt(3.0)
# x = J y for the chamber parametrization
_J = np.array([[_SQRT3, 0.0], [1.0, 2.0]])
_JINV = np.linalg.inv(_J)
_CELL_AREA = 2.0 * _SQRT3  # det J
_DIRECTIONS = ((1, 0), (0, 1), (1, -1))

# Ghost factor of the symmetrized H2 wall row, fitted so the discrete
# operator annihilates the r^{1/2} mode of -d_r^2 - 1/(4 r^2).
SYM_WALL_GHOST = 1.0 - _SQRT3


def chamber_to_x(y):
    """Map simple-root coordinates (..., 2) to orthonormal flat coordinates."""
    y = np.asarray(y, dtype=float)
    return y @ _J.T


@dataclass(frozen=True)
class Grid:
    """Offset grid over the half-line (H2) or the positive chamber (SL3).

    ``nodes`` holds radii (N,) for H2 and flat x-coordinates (N, 2) for SL3;
    ``measure_weights`` are the positive weights of the discrete inner
    product approximating the full-flat integral against a(x) dx (they
    include the Weyl order and the cell volume).
    """

    space: str
    h: float
    R: float
    nodes: np.ndarray
    measure_weights: np.ndarray
    offset: bool = True
    ij: np.ndarray = None          # SL3 only: integer labels per node
    _ids: np.ndarray = field(default=None, repr=False)  # SL3 lattice -> node id

    @property
    def size(self):
        return self.nodes.shape[0]

    @property
    def cell_volume(self):
        return self.h if self.space == "H2" else _CELL_AREA * self.h**2


def build_grid(space, h, R):
    """Cell-centered grid of spacing h truncated at radius R."""
    if h <= 0:
        raise InvalidInputError(f"grid spacing must be positive, got {h}")
    if R <= 2 * h:
        raise InvalidInputError(f"outer radius must exceed 2h, got R={R}, h={h}")
    sp = get_space(space)
    if sp.dim == 1:
        r = (np.arange(int(np.ceil(R / h)) + 1) + 0.5) * h
        r = r[r < R * (1.0 - 1e-14)]
        weights = 2.0 * np.sinh(r) * h
        return Grid(space="H2", h=h, R=R, nodes=r, measure_weights=weights)

    nmax = int(np.ceil(R / (2.0 * h))) + 1
    ii, jj = np.meshgrid(np.arange(nmax), np.arange(nmax), indexing="ij")
    y1 = (ii + 0.5) * h
    y2 = (jj + 0.5) * h
    # |x|^2 = 4 (y1^2 + y1 y2 + y2^2)
    keep = 4.0 * (y1**2 + y1 * y2 + y2**2) <= R**2
    ids = -np.ones((nmax, nmax), dtype=np.int64)
    ids[keep] = np.arange(np.count_nonzero(keep))
    ij = np.column_stack([ii[keep], jj[keep]])
    y = (ij + 0.5) * h
    x = chamber_to_x(y)
    a = np.prod(np.abs(np.sinh(x @ sp.roots.T)), axis=-1)
    weights = len(sp.weyl) * a * _CELL_AREA * h**2
    return Grid(space="SL3", h=h, R=R, nodes=x, measure_weights=weights,
                ij=ij, _ids=ids)


@dataclass(frozen=True)
class AssembledOperator:
    """Discretized radial operator: pencil (K, M) with operator M^{-1} K.

    K is complex symmetric (exactly, after the reported symmetrization at
    theta = 0); M holds the node values of the measure (ones for the H2
    symmetrized form).  ``ip_weights`` are the real weights of the discrete
    inner product on the operator's own function representation.
    """

    grid: Grid
    form: str
    scaling: object
    bc: tuple
    K: sps.csr_matrix
    M: np.ndarray
    ip_weights: np.ndarray
    sym_defect: float

    @property
    def matrix(self):
        """The operator matrix A = M^{-1} K as a sparse matrix."""
        return sps.diags(1.0 / self.M) @ self.K

    @property
    def size(self):
        return self.grid.size

    def apply(self, u):
        return (self.K @ u) / self.M


def _direction_weights(B):
    """Direction-resolved conductivities from B = Jinv A Jinv^T (vectorized)."""
    c1 = B[..., 0, 0] + B[..., 0, 1]
    c2 = B[..., 1, 1] + B[..., 0, 1]
    c3 = -B[..., 0, 1]
    return c1, c2, c3


def _assemble_sl3(coeffs, grid, bc):
    sp = get_space("SL3")
    h = grid.h
    n = grid.size
    ids = grid._ids
    ij = grid.ij
    rows, cols, vals = [], [], []
    diag = np.zeros(n, dtype=complex)

    def edge_weights(mid_y):
        x = chamber_to_x(mid_y)
        A = np.asarray(coeffs.flux_tensor(x), dtype=complex)
        B = np.einsum("ab,...bc,dc->...ad", _JINV, A, _JINV)
        return _direction_weights(B)

    def lattice_ids(ai, aj):
        inb = (ai >= 0) & (aj >= 0) & (ai < ids.shape[0]) & (aj < ids.shape[1])
        safe_i = np.clip(ai, 0, ids.shape[0] - 1)
        safe_j = np.clip(aj, 0, ids.shape[1] - 1)
        return np.where(inb, ids[safe_i, safe_j], -1)

    for k, (di, dj) in enumerate(_DIRECTIONS):
        # interior edges p -> q = p + d
        qid = lattice_ids(ij[:, 0] + di, ij[:, 1] + dj)
        mid_y = (ij + 0.5 + 0.5 * np.array([di, dj])) * h
        c_all = edge_weights(mid_y)[k] / h**2

        mask = qid >= 0
        p, q, c = np.arange(n)[mask], qid[mask], c_all[mask]
        diag[p] += c
        diag[q] += c
        rows.extend([p, q])
        cols.extend([q, p])
        vals.extend([-c, -c])

        # boundary edges, both orientations
        for sgn in (+1, -1):
            bid = lattice_ids(ij[:, 0] + sgn * di, ij[:, 1] + sgn * dj)
            missing = bid < 0
            if not np.any(missing):
                continue
            mid = (ij[missing] + 0.5 + 0.5 * sgn * np.array([di, dj])) * h
            on_wall = (np.abs(mid[:, 0]) < 1e-12 * h) | (np.abs(mid[:, 1]) < 1e-12 * h)
            # wall faces: measure vanishes, flux drops (mirror-ghost value
            # times zero weight); outer faces: Dirichlet ghost value 0
            outer = ~on_wall
            if np.any(outer):
                cb = edge_weights(mid[outer])[k] / h**2
                diag[np.arange(n)[missing][outer]] += cb

    K = sps.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(n, n), dtype=complex,
    ).tocsr()
    K = K + sps.diags(diag)
    m = np.asarray(coeffs.measure(grid.nodes), dtype=complex)
    z = np.asarray(coeffs.zeroth_order(grid.nodes), dtype=complex)
    K = K + sps.diags(m * z)
    return K, m


def _assemble_h2_drift(coeffs, grid, bc):
    h = grid.h
    n = grid.size
    mid = np.arange(n + 1) * h  # edge midpoints; r = 0 is the wall face
    c = np.asarray(coeffs.flux_tensor(mid), dtype=complex) / h**2
    c[0] = 0.0  # wall face: measure vanishes there (sinh 0 = 0); reflection BC
    diag = c[:-1] + c[1:]  # includes the Dirichlet outer face c[n]
    off = -c[1:-1]
    K = sps.diags([off, diag, off], [-1, 0, 1], format="csr", dtype=complex)
    m = np.asarray(coeffs.measure(grid.nodes), dtype=complex)
    z = np.asarray(coeffs.zeroth_order(grid.nodes), dtype=complex)
    K = K + sps.diags(m * z)
    return K, m


def _assemble_h2_symmetrized(coeffs, grid, bc):
    h = grid.h
    n = grid.size
    w2 = -np.asarray(coeffs.second_order(grid.nodes), dtype=complex)  # = w^{-2}
    V = np.asarray(coeffs.zeroth_order(grid.nodes), dtype=complex)
    diag = 2.0 * w2 / h**2 + V
    diag = diag.copy()
    diag[0] = (2.0 - SYM_WALL_GHOST) * w2[0] / h**2 + V[0]
    off = -w2[:-1] / h**2  # constant kinetic coefficient; off[j] couples j, j+1
    K = sps.diags([off, diag, off], [-1, 0, 1], format="csr", dtype=complex)
    m = np.ones(n, dtype=complex)
    return K, m


def assemble_operator(coeffs, grid, bc=("reflect-at-walls", "dirichlet-outer")):
    """Assemble the complex matrix pencil of a CoefficientSet on a grid.

    Returns an AssembledOperator.  At theta = 0 the stiffness is symmetrized
    exactly and the correction norm recorded; for theta != 0 the defect is
    only reported (the scaled operator is genuinely non-normal and K is
    complex symmetric by construction).
    """
    if not isinstance(coeffs, CoefficientSet):
        raise InvalidInputError("assemble_operator needs a CoefficientSet")
    space = "H2" if coeffs.space == "H2" else "SL3"
    if space != grid.space:
        raise InvalidInputError(f"coefficients for {coeffs.space} vs grid on {grid.space}")
    if tuple(bc) != ("reflect-at-walls", "dirichlet-outer"):
        raise InvalidInputError(f"unsupported boundary conditions {bc!r}")

    if space == "SL3":
        K, m = _assemble_sl3(coeffs, grid, bc)
        ip = grid.measure_weights
    elif coeffs.form == "symmetrized":
        K, m = _assemble_h2_symmetrized(coeffs, grid, bc)
        ip = np.full(grid.size, 2.0 * grid.h)
    else:
        K, m = _assemble_h2_drift(coeffs, grid, bc)
        ip = grid.measure_weights

    defect_mat = (K - K.T).tocoo()
    defect = float(np.max(np.abs(defect_mat.data))) if defect_mat.nnz else 0.0
    theta = complex(coeffs.scaling.theta)
    if theta == 0 and defect > 0:
        K = 0.5 * (K + K.T)
    return AssembledOperator(
        grid=grid, form=coeffs.form, scaling=coeffs.scaling, bc=tuple(bc),
        K=K.tocsr(), M=m, ip_weights=np.asarray(ip, dtype=float), sym_defect=defect,
    )


def project_vector(f, grid):
    """Evaluate an analytic vector or scaled function at the grid nodes."""
    space = getattr(f, "space", None)
    if space is not None and space != grid.space:
        raise InvalidInputError(f"function on {space} vs grid on {grid.space}")
    if grid.space == "H2":
        return np.asarray(f(grid.nodes[:, None]), dtype=complex)
    return np.asarray(f(grid.nodes), dtype=complex)


def symmetrized_gauge(op, vec):
    """Map a radial-function grid vector into the H2 symmetrized gauge.

    Multiplies by sinh(w r)^{1/2} so that drift-form vectors can be paired
    with symmetrized-form matrices.
    """
    from .special import sinh_ratio_sqrt  # local import to avoid cycles

    if op.grid.space != "H2":
        raise InvalidInputError("symmetrized gauge applies to H2 grids")
    w = op.scaling.w
    r = op.grid.nodes
    return vec * np.sqrt(np.sinh(r)) * sinh_ratio_sqrt(w, r)


def write_matrix_market(op, path):
    """Dump the operator matrix in Matrix Market coordinate format."""
    from scipy.io import mmwrite

    mmwrite(str(path), sps.coo_matrix(op.matrix), field="complex", symmetry="general")


def discrete_inner(op_or_grid, u, v):
    """Discrete weighted inner product, conjugate-linear in the first slot."""
    w = op_or_grid.ip_weights if hasattr(op_or_grid, "ip_weights") else op_or_grid.measure_weights
    return complex(np.sum(np.conj(u) * v * w))
