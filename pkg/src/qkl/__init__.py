"""Karhunen-Loeve expansions for quantum Wiener processes and open
quantum harmonic oscillators, with Williamson-symplectic evaluation of
quadratic-exponential costs and a truncated-Fock brute-force oracle."""

from .errors import (
    ConfigError,
    InfeasibleError,
    NotHurwitzError,
    NotPositiveDefiniteError,
    QklError,
    ToleranceError,
)
from .fock import TruncatedMode, build_mode, oracle_moments, oracle_qef
from .kernel_eig import (
    KernelEigendecomposition,
    mercer_reconstruction,
    nystrom_decompose,
    qcf_exponent,
    spectral_tail,
    trace_target,
)
from .linalg import (
    J2,
    WilliamsonFactorization,
    block_symplectic,
    expm,
    herm_eig,
    lyap,
    pair_symplectic,
    spectral_radius,
    williamson,
)
from .oqho import (
    CovarianceKernel,
    OqhoModel,
    build_model,
    canonical_model,
    model_from_state_space,
    pr_residual,
    recover_theta,
    steady_covariance,
    two_point_ccr,
    two_point_covariance,
)
from .qef import (
    QefProblem,
    assemble_quadratic_form,
    diamond,
    evaluate_qef,
    feasibility,
    gram_block,
    mean_quadratic_cost,
    qef_value,
)
from .response import (
    BilinearForms,
    GeneratorMap,
    SolutionExpansion,
    cross_commutator,
    expansion_covariance,
    fourier_coefficient,
    fourier_coefficients,
    fundamental_series,
    map_commutator,
    map_covariance,
    mode_resolvent,
    solution_expansion,
    vacuum_forms,
)
from .sinbasis import (
    Quadrature,
    SinBasis,
    coefficient_ccr,
    coefficient_covariance,
    composite_gauss_legendre,
    mercer_min,
    mercer_tail_bound,
    quadrature_for_size,
    recovered_ccr_gram,
    wiener_ccr,
)

__version__ = "0.1.0"
