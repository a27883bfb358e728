"""Comparator-adaptive swap-regret minimization and no-regret game dynamics.

Core pieces: a mixture prior over binary action transformations whose mass
scales with comparator complexity, kernelized exponential weights over all
d^d transformations in O(d^2) time per round, a prior-aware reduction to
per-action subroutines, meta aggregation over learning rates, and optimistic
self-play dynamics with fast equilibrium-gap decay.
"""

from .analytics import (
    ExpertTrace,
    RegretReport,
    best_external,
    best_internal,
    best_swap,
    cumulative_matrix,
    equilibrium_gaps,
    equilibrium_gaps_direct,
    quantile_regret,
    regret_against,
    regret_report,
)
from .bm import BmState, bm_init, bm_propose, bm_update
from .games import (
    GamePlayer,
    GameSpec,
    JointTrace,
    expected_loss_vector,
    make_constant_sum_polymatrix,
    make_zero_sum,
    matching_pennies,
    run_self_play,
)
from .harness import (
    ExperimentConfig,
    run_expert_experiment,
    run_game_experiment,
    run_sweep,
    run_verification_suite,
)
from .kernel import SwapMwu, kernel_eval
from .learners import (
    MwuState,
    OmwuState,
    mwu_current,
    mwu_init,
    mwu_update,
    omwu_init,
    omwu_predict,
    omwu_update,
)
from .meta import MetaBmMwu, MetaKernelMwu
from .priors import (
    ComplexityReport,
    PriorFamily,
    complexity,
    enumerate_binary,
    make_prior_family,
    prior_mass,
    transform_matrix,
)
from .simplex import stationary_distribution

__version__ = "0.1.0"
