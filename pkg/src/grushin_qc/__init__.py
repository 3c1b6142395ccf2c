"""Numerical toolkit for the alpha-Grushin plane.

Distances, lengths and measures; curve diagnostics; discrete 2-modulus;
quasiconformal distortion estimators; and named verification suites.
"""

from .curves import (
    CantorCurveSpec,
    ParametricCurve,
    cantor_curve,
    density_transport,
    monotone_permutation_check,
    rectifiability_probe,
    sample_curve,
    section5_euclidean_curve,
    section5_grushin_curve,
)
from .distance import (
    DistanceResult,
    SolverOptions,
    grushin_distance,
    grushin_sphere_sample,
    snowflake_constant,
)
from .geometry import (
    Point,
    Polyline,
    canonical_phi,
    canonical_phi_inverse,
    dilate,
    grushin_area,
    grushin_speed,
    snowflake_distance_on_Y,
)
from .grid import DensityGrid
from .modulus import (
    CurveFamily,
    ModulusResult,
    line_integral,
    ring_family,
    section5_modulus_bound,
    solve_modulus,
)
from .qc import (
    DistortionReport,
    MapSpec,
    beltrami_coefficient,
    data_conversions,
    eval_map,
    metric_dilatation,
    parse_map,
    quasisymmetry_profile,
)
from .quadrature import QuadratureError, grushin_length

__all__ = [name for name in dir() if not name.startswith("_")]
