"""Extrapolated polynomial lattice rules over finite fields F_b."""

from .cbc import (
    CriterionReport,
    cbc_fast,
    cbc_slow,
    circular_convolve,
    criterion_B,
    criterion_dual_oracle,
    criterion_pointwise,
    exhaustive_best,
)
from .errors import ResourceError, UsageError, VerificationError
from .extrapolation import ExtrapolationScheme, extrapolate_chain, richardson_coeffs
from .gfpoly import FieldTable, GFPoly, build_field_table, find_irreducible
from .matvec import CirculantProfile, build_profile, fast_product, naive_product
from .pointset import LatticeRule, PointSet, generate_points, regular_grid
from .quadrature import (
    Integrand,
    QuadratureReport,
    builtin_integrands,
    convergence_sweep,
    eplr_integrate,
    grid_quadrature,
    make_integrand,
    qmc_mean,
)
from .walsh import WeightModel, E_alpha_lambda, cbc_bound, existence_bound, w_alpha_at

__version__ = "0.1.0"
