"""Spectral theory of periodic Jacobi operators with complex coefficients."""

from .cpoly import CPoly, RootFindingError, RootSet, interpolate, roots
from .floquet import (
    BranchPoints,
    ConsistencyError,
    FloquetPoleError,
    FundamentalSolutions,
    MonodromyData,
    branch_points,
    floquet_solution_at,
    fundamental_solutions,
    monodromy,
    multipliers_at,
    unperturbed_discriminant,
)
from .inverse import (
    InconsistentSpectraError,
    InverseProblem,
    InverseSolutionSet,
    InverseSolverError,
    ambiguity_demo,
    discriminant_jacobian,
    schrodinger_discriminant,
    solve_inverse,
    two_spectra_reconstruct,
)
from .operator import (
    FourierCoeffs,
    JacobiOperator,
    SignPattern,
    borg_family,
    fourier,
    normalize,
    reflect,
    shift,
    sign_flip,
    synthesize,
    unperturbed,
)
from .spectral import (
    borg_classify,
    classify_eigenvalue,
    dirichlet_spectrum,
    double_period_matrix,
    floquet_matrix,
    interval_spectrum_check,
    jordan_structure,
    trace_identities,
    trace_spectrum,
)
from .toda import (
    TodaState,
    TodaTrajectory,
    dirichlet_evolution_check,
    integrate,
    toda_rhs,
)

__all__ = [
    "BranchPoints",
    "CPoly",
    "ConsistencyError",
    "FloquetPoleError",
    "FourierCoeffs",
    "FundamentalSolutions",
    "InconsistentSpectraError",
    "InverseProblem",
    "InverseSolutionSet",
    "InverseSolverError",
    "JacobiOperator",
    "MonodromyData",
    "RootFindingError",
    "RootSet",
    "SignPattern",
    "TodaState",
    "TodaTrajectory",
    "ambiguity_demo",
    "borg_classify",
    "borg_family",
    "branch_points",
    "classify_eigenvalue",
    "dirichlet_evolution_check",
    "dirichlet_spectrum",
    "discriminant_jacobian",
    "double_period_matrix",
    "floquet_matrix",
    "floquet_solution_at",
    "fourier",
    "fundamental_solutions",
    "integrate",
    "interpolate",
    "interval_spectrum_check",
    "jordan_structure",
    "monodromy",
    "multipliers_at",
    "normalize",
    "reflect",
    "roots",
    "schrodinger_discriminant",
    "shift",
    "sign_flip",
    "solve_inverse",
    "synthesize",
    "toda_rhs",
    "trace_identities",
    "trace_spectrum",
    "two_spectra_reconstruct",
    "unperturbed",
    "unperturbed_discriminant",
]
