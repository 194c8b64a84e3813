"""l_p-norm regression by primal-dual iteratively reweighted least squares."""

from .errors import *  # noqa: F401,F403
from .instances import (
    RandomGraphSpec,
    RandomMatrixSpec,
    gen_random_graph,
    gen_random_matrix,
    load_csv,
)
from .linsys import (
    AffineSystem,
    ResidualSystem,
    WeightedLsSolver,
    energy,
    solve_augmented_ls,
    solve_general_structured,
    solve_weighted_ls,
)
from .low_precision import SubSolverConfig, invariant_witness, l2p_minimization, sub_solver
from .reductions import (
    GeneralInstance,
    RegressionInstance,
    lift_general,
    solve_small_p,
    solve_small_p_residual,
)
from .refinement import bregman_sandwich_check, lp_refine, res_value
from .report import SolveReport, emit_plot_data, run_solver
from .residual import ResidualProblem, residual_invariant_witness, residual_solve

__version__ = "0.1.0"
