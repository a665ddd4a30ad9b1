#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "maxent/core.hpp"
#include "maxent/soft_planning.hpp"

namespace maxent {

/// One state-action path (s_1, a_1, ..., s_H, a_H) and its probability.
struct PathProbability {
    std::vector<std::size_t> states;
    std::vector<std::size_t> actions;
    double probability = 0.0;
};

/// Exact path distribution q^pi. Only paths with positive probability are kept.
struct TrajectoryTable {
    std::size_t num_states = 0, num_actions = 0, horizon = 0;
    std::vector<PathProbability> paths;

    double total_mass() const;
    /// Shannon entropy of q^pi.
    double entropy() const;
    /// Per-step marginals of the path distribution.
    VisitationProfile marginals() const;
    /// KL(q^pi, product of its per-step marginals).
    double kl_to_product_of_marginals() const;
};

/// Largest (S*A)^H accepted by enumerate_trajectories.
inline constexpr double kMaxEnumeratedPaths = 1e6;

TrajectoryTable enumerate_trajectories(const TabularMDP& mdp, const MarkovPolicy& policy);

/// Exact distribution of the regularized return sum_h r_kappa,h(s_h,a_h) +
/// lambda H(pi_h(s_h)), as (value, probability) pairs. Guarded like
/// enumerate_trajectories.
std::vector<std::pair<double, double>> enumerate_returns(const TabularMDP& mdp,
                                                         const RegularizedSpec& spec,
                                                         const MarkovPolicy& policy);

enum class MveeObjective {
    PerStep,   // sum_h H(d_h)
    Averaged,  // H((1/H) sum_h d_h)
};

struct FrankWolfeConfig {
    std::size_t iterations = 1000;
    /// Smoothing sigma; a value <= 0 selects 1 / (S * A * iterations).
    double smoothing = 0.0;
    MveeObjective objective = MveeObjective::PerStep;
};

struct FrankWolfeResult {
    VisitationProfile profile;
    /// The iterate policies; the uniform mixture realises `profile`.
    MixturePolicy mixture;
    /// Row-normalised profile; a Markov policy with the same visitation.
    MarkovPolicy policy;
    /// Unsmoothed objective after each iteration.
    std::vector<double> trace;
    /// Frank-Wolfe duality gap of the smoothed objective at the last iterate.
    double duality_gap = 0.0;
    double smoothing = 0.0;
};

/// Objective value of `profile` under the chosen MVEE objective.
double mvee_objective(const VisitationProfile& profile, MveeObjective objective);

/// Smoothed entropy sum_i d_i log(1 / (d_i + sigma)).
double smoothed_entropy(std::span<const double> d, double sigma);

/// Frank-Wolfe on the smoothed visitation entropy over the visitation polytope
/// of `mdp`. The linear maximisation step is exact finite-horizon value
/// iteration on the true model.
FrankWolfeResult optimal_mvee(const TabularMDP& mdp, const FrankWolfeConfig& config);

/// Policy pi_h(a|s) = d_h(s,a) / sum_a d_h(s,a); uniform where the state mass is 0.
MarkovPolicy policy_from_profile(const VisitationProfile& profile);

struct MonteCarloEstimate {
    double mean = 0.0;
    double variance = 0.0;
    double variance_stderr = 0.0;
    std::size_t episodes = 0;
};

/// Sample mean and unbiased sample variance of the regularized return with the
/// standard error of the variance estimate. Requires episodes >= 100.
MonteCarloEstimate mc_return_variance(const TabularMDP& mdp, const RegularizedSpec& spec,
                                      const MarkovPolicy& policy, std::size_t episodes,
                                      std::uint64_t seed);

/// V*_1(s_1) - V^pi_1(s_1) computed exactly on `mdp`.
double true_gap(const TabularMDP& mdp, const RegularizedSpec& spec, const MarkovPolicy& policy);

}  // namespace maxent
