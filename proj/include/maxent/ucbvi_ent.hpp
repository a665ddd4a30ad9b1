#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <vector>

#include "maxent/core.hpp"
#include "maxent/rf_explore.hpp"
#include "maxent/soft_planning.hpp"

namespace maxent {

/// Confidence thresholds for a cell visited n times.
struct Thresholds {
    double kl = 0.0;       // log(4SAH/delta) + S log(e(1+n))
    double conc = 0.0;     // log(4SAH/delta) + log(4e n(2n+1)), n floored at 1
    double cnt = 0.0;      // log(4SAH/delta)
    double entropy = 0.0;  // log^2(n) (log(4SAH/delta) + log(n(n+1))), 0 for n <= 1
};

Thresholds thresholds(double delta, std::uint64_t n, std::size_t S, std::size_t A, std::size_t H);

struct UcbviOptions {
    double delta = 0.1;
    /// Multiplies every bonus, including the caps used for unvisited cells.
    double bonus_scale = 1.0;
};

/// Upper and lower value bounds with the bonuses that produced them.
struct ConfidenceState {
    std::size_t num_states = 0, num_actions = 0, horizon = 0;
    double value_cap = 0.0;  // H * Rmax
    std::vector<double> Q_upper, Q_lower;  // (H, S, A)
    std::vector<double> V_upper, V_lower;  // (H + 1, S)
    std::vector<double> transition_bonus;  // (H, S, A)
    std::vector<double> correction_bonus;  // (H, S, A)
    std::vector<double> entropy_bonus;     // (H, S, A), without the kappa factor
    std::vector<double> variance_term;     // (H, S, A): Var_p(V_upper_{h+1})
    /// Soft-greedy policy with respect to Q_upper.
    MarkovPolicy policy;

    double q_upper(std::size_t h, std::size_t s, std::size_t a) const {
        return Q_upper[(h * num_states + s) * num_actions + a];
    }
    double q_lower(std::size_t h, std::size_t s, std::size_t a) const {
        return Q_lower[(h * num_states + s) * num_actions + a];
    }
};

/// One backward pass. `model` is the transition estimate (the empirical model
/// of `counts`, or an injected one); rewards use r + kappa H(model).
ConfidenceState compute_bounds(const CountTables& counts, const TabularMDP& model,
                               const RegularizedSpec& spec, const UcbviOptions& options);

struct GapTables {
    std::size_t num_states = 0, num_actions = 0, horizon = 0;
    std::vector<double> G;  // (H + 1, S, A); the last slice is 0
    /// sum_a policy_1(a|s_1) G_1(s_1, a).
    double initial = 0.0;

    double g(std::size_t h, std::size_t s, std::size_t a) const {
        return G[(h * num_states + s) * num_actions + a];
    }
};

GapTables gap_recursion(const ConfidenceState& state, const CountTables& counts,
                        const TabularMDP& model, const RegularizedSpec& spec,
                        const MarkovPolicy& policy, const UcbviOptions& options);

struct UcbviConfig {
    double epsilon = 0.5;
    UcbviOptions options;
    std::size_t max_episodes = 200000;
    /// Counters shared across steps (stage-homogeneous environments).
    bool shared_counts = false;
    /// Diagnostics cadence in episodes; the stopping episode is always logged.
    std::size_t log_every = 1;
};

struct UcbviResult {
    MarkovPolicy policy;
    std::size_t stopping_episode = 0;
    bool converged = false;
    DiagnosticsLog log;
    CountTables counts;
    std::uint64_t env_episodes = 0;
    std::uint64_t env_steps = 0;
};

/// Called after bounds and gap are computed from the data of the first t
/// episodes, before the stopping check.
using UcbviObserver =
    std::function<void(std::size_t t, const ConfidenceState&, const GapTables&)>;

/// Stops at the first t whose next policy has gap <= epsilon; gives up after
/// max_episodes episodes and returns the last policy flagged not converged.
UcbviResult run_ucbvi_ent(EnvironmentHandle& env, const RegularizedSpec& spec,
                          const UcbviConfig& config, std::uint64_t seed,
                          const UcbviObserver& observer = {});

}  // namespace maxent
