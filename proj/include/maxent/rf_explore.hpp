#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <vector>

#include "maxent/core.hpp"
#include "maxent/soft_planning.hpp"

namespace maxent {

/// Interaction handle around an environment. Counts every episode and step
/// taken through it. `known_model()` exposes the true transitions for
/// diagnostics only; learners never read it.
class EnvironmentHandle {
public:
    explicit EnvironmentHandle(TabularMDP mdp, bool expose_model = true)
        : mdp_(std::move(mdp)), expose_(expose_model) {}

    Trajectory rollout(const MarkovPolicy& policy, Rng& rng);
    Trajectory rollout(const MixturePolicy& policy, Rng& rng);

    std::size_t num_states() const { return mdp_.num_states(); }
    std::size_t num_actions() const { return mdp_.num_actions(); }
    std::size_t horizon() const { return mdp_.horizon(); }
    std::size_t initial_state() const { return mdp_.initial_state(); }

    std::uint64_t episodes() const { return episodes_; }
    std::uint64_t steps() const { return episodes_ * mdp_.horizon(); }

    const TabularMDP* known_model() const { return expose_ ? &mdp_ : nullptr; }

private:
    TabularMDP mdp_;
    bool expose_ = true;
    std::uint64_t episodes_ = 0;
};

/// Online learner for a fixed reward: proposes a policy per episode and
/// consumes the resulting trajectory.
class RegretMinimizer {
public:
    virtual ~RegretMinimizer() = default;
    virtual MarkovPolicy next_policy() = 0;
    virtual void observe(const Trajectory& traj) = 0;
};

/// Model-based optimistic value iteration with empirical-Bernstein transition
/// bonuses for a known reward in [0, r_max]. Greedy policies; tied actions are
/// played uniformly.
class OptimisticRegretMinimizer : public RegretMinimizer {
public:
    OptimisticRegretMinimizer(std::size_t num_states, std::size_t num_actions,
                              std::size_t horizon, std::vector<double> rewards, double delta);

    MarkovPolicy next_policy() override;
    void observe(const Trajectory& traj) override;

    const CountTables& counts() const { return counts_; }

private:
    std::size_t S_, A_, H_;
    std::vector<double> rewards_;
    std::vector<double> cap_;  // (H + 1): max reward-to-go from step h
    double delta_;
    CountTables counts_;
};

/// Sparse reward 1{s = goal_state, h = goal_step}.
std::vector<double> goal_reward(std::size_t S, std::size_t A, std::size_t H,
                                std::size_t goal_state, std::size_t goal_step);

/// Runs the regret minimizer for `episodes` episodes on the goal reward and
/// returns every policy it played, each made uniform at (goal_state, goal_step).
std::vector<MarkovPolicy> goal_policies(EnvironmentHandle& env, std::size_t goal_state,
                                        std::size_t goal_step, std::size_t episodes,
                                        double delta, std::uint64_t seed);

struct ExplorationPhaseResult {
    MixturePolicy mixture;
    /// Exact visitation of the mixture on the true model when it is known.
    std::optional<VisitationProfile> visitation;
    CountTables counts;
    EmpiricalModel model;
};

/// Mixture over the goal policies of every (state, step) goal. Goal g uses
/// the child seed derive_seed(seed, g).
ExplorationPhaseResult build_mixture(EnvironmentHandle& env, std::size_t episodes_per_goal,
                                     double delta, std::uint64_t seed);

struct CollectedData {
    CountTables counts;
    EmpiricalModel model;
};

/// Samples `episodes` fresh trajectories under `mixture` and estimates the model.
CollectedData collect_and_estimate(EnvironmentHandle& env, const MixturePolicy& mixture,
                                   std::size_t episodes, std::uint64_t seed);

/// Soft-greedy policies for each spec, all planned on the same model.
std::vector<MarkovPolicy> plan_on_model(const TabularMDP& model,
                                        const std::vector<RegularizedSpec>& specs);

struct SampleAccounting {
    std::uint64_t phase1_episodes = 0, phase1_steps = 0;
    std::uint64_t phase2_episodes = 0, phase2_steps = 0;
};

struct RfExploreResult {
    std::vector<MarkovPolicy> policies;
    ExplorationPhaseResult exploration;
    SampleAccounting accounting;
};

/// Two-phase reward-free exploration followed by empirical regularized planning.
RfExploreResult rf_explore_ent(EnvironmentHandle& env, const std::vector<RegularizedSpec>& specs,
                               std::size_t episodes_per_goal, std::size_t model_episodes,
                               double delta, std::uint64_t seed);

}  // namespace maxent
