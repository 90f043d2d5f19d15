"""Tabular Markov-potential-game lab.

Dense game tensors, an exact policy-evaluation oracle, independent
policy-gradient learners, equilibrium diagnostics, and a CSV experiment
harness.
"""

from .game import (
    GameError,
    JointActionIndex,
    NumericError,
    PolicyProfile,
    PotentialSpec,
    TabularGame,
    joint_policy_prob,
    load_game,
    save_game,
    softmax_project,
    verify_potential,
)
from .oracle import (
    EvaluationBundle,
    evaluate,
    induced_transition,
    marginalized_reward,
    mc_estimate,
    mismatch_coefficient,
)
from .learners import (
    LearnerConfig,
    apply_step,
    npg_step,
    pg_softmax_step,
    projected_q_step,
    regularized_npg_step,
    static_npg_step,
    static_safe_eta,
    theorem_safe_eta,
)
from .metrics import (
    BoundReport,
    IterationRecord,
    best_response,
    f_alpha,
    gap_diagnostics,
    l1_distance,
    ne_gap,
    theorem_bound,
)
from .envs import (
    CongestionConfig,
    make_congestion,
    make_delta_matrix,
    make_random_mpg,
    make_synthetic,
)
from .harness import EnvConfig, RunConfig, compare, run, sweep_delta

__version__ = "0.1.0"
