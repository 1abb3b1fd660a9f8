"""radscale: complex scaling for radial Laplacians on H2 and SL(3)/SO(3).

Rotated essential spectra, analytic continuation of resolvent matrix
elements and Green's functions across the continuous spectrum, and
theta-trajectory resonance sweeps, on finite-difference grids over the
half-line and the positive Weyl chamber.
"""

__version__ = "0.1.0"

from .flat import (
    FlatPoint,
    RootSystemA2,
    WeylOrbit,
    boundary_rho,
    build_root_system,
    density_a,
    flat_coords,
    weyl_orbit,
)
from .operators import (
    CoefficientSet,
    CutoffProfile,
    ScalingParam,
    coefficient_identity_check,
    exterior_scaling_map,
    h2_radial_coefficients,
    model_operator_coefficients,
    sl3_radial_coefficients,
)
from .scaling import (
    AnalyticVector,
    ScaledFunction,
    apply_scaling,
    delta_approx,
    group_law_residual,
    inner_product,
    make_analytic_vector,
    scale_lambdas,
)
