#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "maxent/core.hpp"

namespace maxent {

/// Policy regularizer. Only the Shannon entropy has a closed-form conjugate here;
/// other mirror maps would plug in behind this enumeration.
enum class Regularizer { Shannon };

/// Rewards r_h(s,a) in [0, r_max], policy-entropy weight lambda and
/// transition-entropy weight kappa. The per-step reward is
/// r_h(s,a) + kappa * H(p_h(s,a)) and the policy is penalised by -lambda * H(pi).
struct RegularizedSpec {
    std::size_t num_states = 0, num_actions = 0, horizon = 0;
    std::vector<double> rewards;  // flat (H, S, A)
    double r_max = 0.0;
    double lambda = 1.0;
    double kappa = 0.0;
    Regularizer regularizer = Regularizer::Shannon;

    /// Trajectory-entropy objective: r = 0, kappa = lambda = 1.
    static RegularizedSpec mtee(std::size_t S, std::size_t A, std::size_t H);
    /// Arbitrary rewards; r_max is taken as the largest entry.
    static RegularizedSpec with_rewards(std::size_t S, std::size_t A, std::size_t H,
                                        std::vector<double> rewards, double lambda,
                                        double kappa);

    double reward(std::size_t h, std::size_t s, std::size_t a) const {
        return rewards[(h * num_states + s) * num_actions + a];
    }
    /// Per-step reward cap r_max + kappa log S + lambda log A.
    double rmax() const;

    /// Throws std::invalid_argument on negative weights, out-of-range rewards or
    /// a shape mismatch with `model`.
    void check(const TabularMDP& model) const;
};

struct SoftMax {
    double value = 0.0;
    std::vector<double> policy;
};

/// F_lambda(q) = lambda log sum_a exp(q_a / lambda) and its softmax maximiser.
/// lambda = 0 degrades to (max, one-hot argmax) with lowest-index ties.
SoftMax soft_conjugate(std::span<const double> q, double lambda);

/// Entropy of each transition row, flat (H, S, A). The last step is zero: its
/// transition leaves the trajectory.
std::vector<double> transition_entropies(const TabularMDP& model);

struct ValueTables {
    std::size_t num_states = 0, num_actions = 0, horizon = 0;
    std::vector<double> Q;  // (H, S, A)
    std::vector<double> V;  // (H + 1, S), V_{H+1} = 0
    MarkovPolicy policy;

    double q(std::size_t h, std::size_t s, std::size_t a) const {
        return Q[(h * num_states + s) * num_actions + a];
    }
    double v(std::size_t h, std::size_t s) const { return V[h * num_states + s]; }
    /// V_1(s_1) for the given initial state.
    double initial_value(std::size_t s1) const { return V[s1]; }
};

ValueTables solve_regularized(const TabularMDP& model, const RegularizedSpec& spec);
ValueTables evaluate_regularized(const TabularMDP& model, const RegularizedSpec& spec,
                                 const MarkovPolicy& policy);

struct VarianceTables {
    std::size_t num_states = 0, num_actions = 0, horizon = 0;
    std::vector<double> Qvar;  // (H, S, A)
    std::vector<double> Vvar;  // (H + 1, S)

    double v(std::size_t h, std::size_t s) const { return Vvar[h * num_states + s]; }
};

/// Variance of the regularized return under `policy` via the law of total
/// variance recursion.
VarianceTables variance_bellman(const TabularMDP& model, const RegularizedSpec& spec,
                                const MarkovPolicy& policy);

/// Variance of f under the distribution p.
double variance(std::span<const double> p, std::span<const double> f);

}  // namespace maxent
