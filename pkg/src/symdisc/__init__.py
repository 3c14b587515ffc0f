"""Minimum-error measurements for geometrically uniform mixed-state ensembles."""
from .config import DEFAULT, DIMENSION_CAP, MAX_DENSE_VARS, Tolerances
from .errors import *  # noqa: F401,F403
from .operators import (
    DensityOperator,
    EigenStructure,
    SymmetryOperator,
    commutator_norm,
    conjugate_power,
    eigenstructure,
    group_average,
    pinch,
    validate_density,
    validate_symmetry,
)
from .ensemble import (
    GUEnsemble,
    average_state,
    build_ensemble,
    cyclic_shift,
    ppm_ensemble,
    random_ensemble,
    rotation_ensemble,
)
from .sdp import (
    BlockDiagOperator,
    BlockSpec,
    SolveReport,
    count_variables,
    lift,
    positive_part,
    solve_dp1,
    solve_dp3,
    solve_trace_min,
)
from .povm import (
    POVM,
    expand_povm,
    recover_reference_povm,
    srm_povm,
    success_probability,
    verify_optimality,
)
from .closedform import (
    RotationExampleParams,
    closed_form_pe,
    closed_form_povm,
    closed_form_xtilde,
)

__version__ = "0.1.0"
