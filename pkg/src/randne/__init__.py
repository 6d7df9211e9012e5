"""Randomized preconditioning for dense full column-rank least squares.

The package builds a sketch of a tall dense matrix (orthonormal cosine
transform, random signs, uniform row sampling), takes the triangular factor
of the sketch as a right preconditioner, and solves the least squares
problem through preconditioned or half-preconditioned normal equations.
Alongside the solvers it ships first-order error bounds evaluated from
measured spectral quantities, structural identity checks, and a Monte Carlo
validation of the preconditioned spectrum intervals; the ``randne`` command
line tool drives residual sweep experiments producing CSV files and
figures.
"""

from .bounds import (
    BOUND_NAMES,
    BoundComponents,
    BoundReport,
    amplifier_eta,
    bound_hpne,
    bound_hpne_sym,
    bound_ls,
    bound_ne,
    bound_pne,
    bound_pne_sym_ap,
    bound_pne_sym_rs,
    evaluate_bound,
    measure_components,
    spectral_components,
)
from .errors import (
    ConfigError,
    DegenerateResidual,
    EtaUndefined,
    HypothesisViolated,
    IOFailure,
    NotOrthonormal,
    NotPositiveDefinite,
    NumericalError,
    RandneError,
    RankDeficient,
    RankDeficientSketch,
    SingularSystem,
    SingularTriangular,
    ZeroSolution,
)
from .experiments import ExperimentConfig, ResidualGrid, run_sweep
from .linalg import EPS, cond2, singular_values, spectral_norm, thin_qr
from .mtx import read_matrix, write_matrix
from .precondition import (
    Preconditioner,
    build,
    identity_preconditioner,
    load_preconditioner,
    save_preconditioner,
)
from .precondition import apply as apply_preconditioner
from .problems import (
    LeastSquaresProblem,
    ProblemFamily,
    generate,
    load_problem,
    save_problem,
    triangular_with_cond,
)
from .rng import SeededRng, derive_seed, make_rng
from .sketch import coherence, sample_count, smooth_and_sample
from .solvers import (
    METHODS,
    SolveReport,
    solve_hpne,
    solve_normal,
    solve_pne,
    solve_qr,
)
from .validation import (
    perturb_check_hpne,
    perturb_check_pne,
    prob_cond_mc,
    reciprocal_sv_check,
    residual_identity_check,
)

__version__ = "0.1.0"

__all__ = [
    "BOUND_NAMES",
    "BoundComponents",
    "BoundReport",
    "ConfigError",
    "DegenerateResidual",
    "EPS",
    "EtaUndefined",
    "ExperimentConfig",
    "HypothesisViolated",
    "IOFailure",
    "LeastSquaresProblem",
    "METHODS",
    "NotOrthonormal",
    "NotPositiveDefinite",
    "NumericalError",
    "Preconditioner",
    "ProblemFamily",
    "RandneError",
    "RankDeficient",
    "RankDeficientSketch",
    "ResidualGrid",
    "SeededRng",
    "SingularSystem",
    "SingularTriangular",
    "SolveReport",
    "ZeroSolution",
    "amplifier_eta",
    "apply_preconditioner",
    "bound_hpne",
    "bound_hpne_sym",
    "bound_ls",
    "bound_ne",
    "bound_pne",
    "bound_pne_sym_ap",
    "bound_pne_sym_rs",
    "build",
    "coherence",
    "cond2",
    "derive_seed",
    "evaluate_bound",
    "generate",
    "identity_preconditioner",
    "load_preconditioner",
    "load_problem",
    "make_rng",
    "measure_components",
    "perturb_check_hpne",
    "perturb_check_pne",
    "prob_cond_mc",
    "read_matrix",
    "reciprocal_sv_check",
    "residual_identity_check",
    "run_sweep",
    "sample_count",
    "save_preconditioner",
    "save_problem",
    "singular_values",
    "smooth_and_sample",
    "solve_hpne",
    "solve_normal",
    "solve_pne",
    "solve_qr",
    "spectral_components",
    "spectral_norm",
    "thin_qr",
    "triangular_with_cond",
    "write_matrix",
]
