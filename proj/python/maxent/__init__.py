"""Maximum-entropy exploration in finite-horizon tabular MDPs.

Tables are numpy arrays indexed (step, state, action[, next_state]).
"""

from ._maxent import (
    Aggregation,
    ConfigError,
    MarkovPolicy,
    MixturePolicy,
    TabularMDP,
    deterministic_ring,
    double_chain,
    entgame,
    enumerated_trajectory_entropy,
    grid_world,
    mtee_gap,
    optimal_mvee,
    random_mdp,
    reg_entgame,
    rf_explore,
    run_experiment,
    solve_mtee,
    solve_regularized,
    trajectory_entropy,
    ucbvi_ent,
    visitation,
    visitation_entropy,
)

__all__ = [
    "Aggregation",
    "ConfigError",
    "MarkovPolicy",
    "MixturePolicy",
    "TabularMDP",
    "deterministic_ring",
    "double_chain",
    "entgame",
    "enumerated_trajectory_entropy",
    "grid_world",
    "mtee_gap",
    "optimal_mvee",
    "random_mdp",
    "reg_entgame",
    "rf_explore",
    "run_experiment",
    "solve_mtee",
    "solve_regularized",
    "trajectory_entropy",
    "ucbvi_ent",
    "visitation",
    "visitation_entropy",
]
