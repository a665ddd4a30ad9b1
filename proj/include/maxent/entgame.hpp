#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "maxent/core.hpp"
#include "maxent/rf_explore.hpp"

namespace maxent {

/// How visit counters are shared across steps.
enum class Aggregation {
    PerStep,           // one counter per (h, s, a)
    StageHomogeneous,  // one counter per (s, a), shared by all steps
};

/// Pseudo-count mixture forecaster. Predicts (n + n0) / (k + S A n0) per step,
/// where k is the number of observed episodes.
class ForecasterState {
public:
    ForecasterState() = default;
    ForecasterState(std::size_t num_states, std::size_t num_actions, std::size_t horizon,
                     std::size_t prior, Aggregation aggregation = Aggregation::PerStep);

    void observe(const Trajectory& traj);

    std::size_t prior() const { return n0_; }
    std::size_t total_prior() const { return S_ * A_ * n0_; }
    std::uint64_t episodes() const { return counts_.episodes(); }
    Aggregation aggregation() const { return aggregation_; }
    const CountTables& counts() const { return counts_; }

    /// Pseudo-count n_h(s,a) + n0 (summed over steps in stage-homogeneous mode).
    double pseudo_count(std::size_t h, std::size_t s, std::size_t a) const;

private:
    std::size_t S_ = 0, A_ = 0, H_ = 0, n0_ = 1;
    Aggregation aggregation_ = Aggregation::PerStep;
    CountTables counts_;
};

/// Current prediction. Every step slice sums to 1 and every entry is at least
/// n0 / (k + t0).
VisitationProfile forecast(const ForecasterState& state);

/// Realised log-loss sum_h log(1 / prediction_h(s_h, a_h)).
double log_loss(const VisitationProfile& prediction, const Trajectory& traj);

struct SamplerOptions {
    double delta = 0.1;
    std::size_t prior = 1;
    double bonus_scale = 1.0;
};

struct SamplerPlan {
    std::size_t num_states = 0, num_actions = 0, horizon = 0;
    std::vector<double> Q;  // (H, S, A)
    std::vector<double> V;  // (H + 1, S)
    std::vector<double> bonus;  // (H, S, A)
    double cap = 0.0;
    MarkovPolicy policy;

    double q(std::size_t h, std::size_t s, std::size_t a) const {
        return Q[(h * num_states + s) * num_actions + a];
    }
    double v(std::size_t h, std::size_t s) const { return V[h * num_states + s]; }
};

/// Hoeffding-style sampler bonus for a cell visited n >= 1 times at episode t.
double sampler_bonus(std::uint64_t n, std::uint64_t t, std::size_t S, std::size_t A,
                     std::size_t H, double delta);

/// Optimistic planning against the prediction: Q = log(1/prediction) + p V + b,
/// V = clip(max_a Q, 0, H log(t/n0 + SA)); greedy, lowest-index ties.
/// Bonuses are capped at the clip level; cells with n = 0 get the cap.
SamplerPlan sampler_plan(const CountTables& counts, const TabularMDP& model,
                         const VisitationProfile& prediction, std::uint64_t t,
                         const SamplerOptions& options);

enum class EntGameVariant { Plain, Regularized };

struct EntGameConfig {
    std::size_t episodes = 1000;  // T
    std::size_t prior = 1;        // n0
    double delta = 0.1;
    double bonus_scale = 1.0;
    Aggregation aggregation = Aggregation::PerStep;
    EntGameVariant variant = EntGameVariant::Plain;
    // Regularized variant only.
    std::size_t exploration_episodes = 1;  // per goal
    std::size_t model_episodes = 1;

    /// Throws std::invalid_argument.
    void check() const;
};

struct EntGameResult {
    MixturePolicy mixture;
    /// Per episode: "log_loss", "empirical_ve", and "sampler_value" (plain) or
    /// "planner_value" (regularized).
    DiagnosticsLog log;
    /// Per-step visit counts of the T learning episodes.
    CountTables counts;
    std::uint64_t env_episodes = 0;
    std::uint64_t env_steps = 0;
    /// Regularized variant: interactions spent before the learning episodes.
    std::uint64_t exploration_episodes = 0;
};

EntGameResult run_entgame(EnvironmentHandle& env, const EntGameConfig& config, std::uint64_t seed);

/// Exploration phase (goal mixture, then model estimation) followed by the
/// learning episodes on the estimated model.
EntGameResult run_reg_entgame(EnvironmentHandle& env, const EntGameConfig& config,
                              std::uint64_t seed);
/// Learning episodes only, on a fixed model.
EntGameResult run_reg_entgame_on_model(EnvironmentHandle& env, const TabularMDP& model,
                                       const EntGameConfig& config, std::uint64_t seed);

/// sum_t log_loss_t - sum_t sum_h log(1 / comparator_h(s_h^t, a_h^t)), with the
/// second sum computed from the visit counts. Throws if the comparator is not
/// a per-step distribution or the log and counts disagree on T.
double forecaster_regret(const DiagnosticsLog& log, const CountTables& counts,
                         const VisitationProfile& comparator);

/// H S A log(e (T + 1)) - T sum_h KL(average_h, comparator_h).
double forecaster_regret_bound(const CountTables& counts, const VisitationProfile& comparator);

}  // namespace maxent
