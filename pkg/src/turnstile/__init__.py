"""No-U-Turn sampling with interchangeable tree builders.

The package centers on two implementations of trajectory-tree construction:
a recursive reference and an iterative builder that stores one node per tree
level, bit-indexed by leaf number.  They are bitwise-interchangeable, which
the ``compare-trees`` command and test suite verify exhaustively.  Around
them: warmup adaptation (dual-averaging step size, windowed diagonal mass),
deterministic splittable randomness, multi-chain execution whose output is
identical across sequential and parallel modes, ESS/R-hat diagnostics, and a
benchmarking CLI.
"""

from .adapt import (
    DualAveragingState,
    WarmupAdapter,
    WelfordState,
    da_update,
    find_reasonable_step_size,
    warmup_schedule,
    welford_update,
    welford_variance,
)
from .chains import MODE_PARALLEL, MODE_SEQUENTIAL, ChainResult, RunConfig, chain_keys, run
from .diagnostics import Summary, ess, split_rhat, summarize
from .integrator import MassMatrix, PhasePoint, hamiltonian, is_divergent, kinetic_energy, leapfrog
from .kernels import NUMBA_ENABLED
from .models import (
    LogisticRegressionData,
    TargetModel,
    fd_gradient,
    funnel_model,
    gaussian_model,
    load_logistic_csv,
    logistic_regression_model,
    model_from_descriptor,
    std_normal_model,
)
from .rng import RngKey
from .sampler import (
    ITERATIVE,
    RECURSIVE,
    SamplerConfig,
    TransitionStats,
    hmc_transition,
    nuts_transition,
    nuts_transition_from,
)
from .tree import (
    CLASSIC,
    GENERALIZED,
    NodeStore,
    Tree,
    TreeTrace,
    build_tree_iterative,
    build_tree_recursive,
    check_uturn,
    trees_equal,
)
from .treemath import bit_count, candidate_set, subtree_leftmost, trailing_ones

__version__ = "0.1.0"
