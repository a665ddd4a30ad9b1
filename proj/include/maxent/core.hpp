#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "maxent/rng.hpp"

namespace maxent {

/// Finite-horizon tabular MDP with step-dependent transitions p_h(s'|s,a).
///
/// Transitions are stored densely as one flat row-major tensor of shape
/// (H, S, A, S). The constructor checks shapes only; probabilistic
/// well-formedness is reported by validate_mdp().
class TabularMDP {
public:
    TabularMDP() = default;
    TabularMDP(std::size_t num_states, std::size_t num_actions, std::size_t horizon,
               std::size_t initial_state, std::vector<double> transitions);

    std::size_t num_states() const { return S_; }
    std::size_t num_actions() const { return A_; }
    std::size_t horizon() const { return H_; }
    std::size_t initial_state() const { return s1_; }

    std::span<const double> row(std::size_t h, std::size_t s, std::size_t a) const {
        return {p_.data() + ((h * S_ + s) * A_ + a) * S_, S_};
    }
    double prob(std::size_t h, std::size_t s, std::size_t a, std::size_t next) const {
        return p_[((h * S_ + s) * A_ + a) * S_ + next];
    }
    const std::vector<double>& transitions() const { return p_; }

    bool same_shape(const TabularMDP& other) const {
        return S_ == other.S_ && A_ == other.A_ && H_ == other.H_;
    }

private:
    std::size_t S_ = 0, A_ = 0, H_ = 0, s1_ = 0;
    std::vector<double> p_;
};

/// Maximum-likelihood transition estimate. Unvisited rows are uniform 1/S.
class EmpiricalModel : public TabularMDP {
public:
    using TabularMDP::TabularMDP;
};

/// Per-step action distributions pi_h(a|s), flat (H, S, A).
class MarkovPolicy {
public:
    MarkovPolicy() = default;
    MarkovPolicy(std::size_t num_states, std::size_t num_actions, std::size_t horizon,
                 std::vector<double> probs);

    static MarkovPolicy uniform(std::size_t num_states, std::size_t num_actions,
                                std::size_t horizon);
    /// One-hot policy from a flat (H, S) table of action indices.
    static MarkovPolicy deterministic(std::size_t num_states, std::size_t num_actions,
                                      std::size_t horizon,
                                      const std::vector<std::size_t>& actions);

    std::size_t num_states() const { return S_; }
    std::size_t num_actions() const { return A_; }
    std::size_t horizon() const { return H_; }

    std::span<const double> row(std::size_t h, std::size_t s) const {
        return {probs_.data() + (h * S_ + s) * A_, A_};
    }
    std::span<double> row(std::size_t h, std::size_t s) {
        return {probs_.data() + (h * S_ + s) * A_, A_};
    }
    double prob(std::size_t h, std::size_t s, std::size_t a) const {
        return probs_[(h * S_ + s) * A_ + a];
    }
    const std::vector<double>& probs() const { return probs_; }

    bool matches(const TabularMDP& mdp) const {
        return S_ == mdp.num_states() && A_ == mdp.num_actions() && H_ == mdp.horizon();
    }

private:
    std::size_t S_ = 0, A_ = 0, H_ = 0;
    std::vector<double> probs_;
};

/// Uniform mixture of Markov policies. One component is drawn per episode.
class MixturePolicy {
public:
    MixturePolicy() = default;
    explicit MixturePolicy(std::vector<MarkovPolicy> components);

    void add(MarkovPolicy component);
    std::size_t size() const { return components_.size(); }
    bool empty() const { return components_.empty(); }
    const MarkovPolicy& component(std::size_t i) const { return components_[i]; }
    const std::vector<MarkovPolicy>& components() const { return components_; }

private:
    std::vector<MarkovPolicy> components_;
};

/// Per-step state-action distributions d_h(s,a), flat (H, S, A).
struct VisitationProfile {
    std::size_t num_states = 0, num_actions = 0, horizon = 0;
    std::vector<double> dist;

    VisitationProfile() = default;
    VisitationProfile(std::size_t S, std::size_t A, std::size_t H)
        : num_states(S), num_actions(A), horizon(H), dist(H * S * A, 0.0) {}

    double& at(std::size_t h, std::size_t s, std::size_t a) {
        return dist[(h * num_states + s) * num_actions + a];
    }
    double at(std::size_t h, std::size_t s, std::size_t a) const {
        return dist[(h * num_states + s) * num_actions + a];
    }
    std::span<const double> step(std::size_t h) const {
        return {dist.data() + h * num_states * num_actions, num_states * num_actions};
    }
    /// State marginal sum_a d_h(s,a).
    double state_mass(std::size_t h, std::size_t s) const;
};

/// One episode: states s_1..s_{H+1} and actions a_1..a_H (0-indexed steps).
struct Trajectory {
    std::vector<std::size_t> states;
    std::vector<std::size_t> actions;

    std::size_t length() const { return actions.size(); }
};

/// Visit and transition counts accumulated over episodes.
class CountTables {
public:
    CountTables() = default;
    CountTables(std::size_t num_states, std::size_t num_actions, std::size_t horizon);

    void record(const Trajectory& traj);
    /// Records every transition of `traj` at all H steps, keeping the table in
    /// the aggregated_over_steps() layout incrementally.
    void record_shared(const Trajectory& traj);

    std::size_t num_states() const { return S_; }
    std::size_t num_actions() const { return A_; }
    std::size_t horizon() const { return H_; }
    std::uint64_t episodes() const { return episodes_; }

    std::uint64_t visits(std::size_t h, std::size_t s, std::size_t a) const {
        return visits_[(h * S_ + s) * A_ + a];
    }
    std::uint64_t transitions(std::size_t h, std::size_t s, std::size_t a,
                              std::size_t next) const {
        return to_[((h * S_ + s) * A_ + a) * S_ + next];
    }
    std::span<const std::uint64_t> transition_row(std::size_t h, std::size_t s,
                                                  std::size_t a) const {
        return {to_.data() + ((h * S_ + s) * A_ + a) * S_, S_};
    }
    const std::vector<std::uint64_t>& visit_table() const { return visits_; }

    /// Counts summed over steps and replicated at every step, i.e. the
    /// stage-homogeneous view in which all steps share one counter.
    CountTables aggregated_over_steps() const;

    /// Empirical average of one-hot sample visitations, n_h(s,a) / t.
    VisitationProfile empirical_profile() const;

private:
    std::size_t S_ = 0, A_ = 0, H_ = 0;
    std::uint64_t episodes_ = 0;
    std::vector<std::uint64_t> visits_;
    std::vector<std::uint64_t> to_;
};

/// Per-episode named scalar metrics.
class DiagnosticsLog {
public:
    struct Record {
        std::size_t episode = 0;
        std::vector<std::pair<std::string, double>> metrics;

        /// NaN when the metric is absent.
        double get(const std::string& name) const;
    };

    /// Appends to the current record if `episode` equals the last one, starts
    /// a new record otherwise. Throws std::invalid_argument on a smaller index.
    void add(std::size_t episode, const std::string& name, double value);

    const std::vector<Record>& records() const { return records_; }
    bool empty() const { return records_.empty(); }
    std::vector<double> series(const std::string& name) const;

private:
    std::vector<Record> records_;
};

struct ValidationReport {
    bool ok = true;
    std::vector<std::string> violations;
};

ValidationReport validate_mdp(const TabularMDP& mdp);

/// Throws std::invalid_argument carrying the first violation.
void require_valid(const TabularMDP& mdp);

/// Shannon entropy in nats with 0 log 0 = 0.
double entropy(std::span<const double> p);

/// KL(p, q) in nats; +inf if p puts mass where q does not.
double kl_divergence(std::span<const double> p, std::span<const double> q);

VisitationProfile exact_visitation(const TabularMDP& mdp, const MarkovPolicy& policy);
VisitationProfile exact_visitation(const TabularMDP& mdp, const MixturePolicy& policy);

/// Sum over steps of the entropy of d_h.
double visitation_entropy(const VisitationProfile& profile);

/// Largest violation of the flow constraints of the visitation polytope.
double flow_residual(const TabularMDP& mdp, const VisitationProfile& profile);

/// Entropy of the distribution over state-action paths (s_1,a_1,...,s_H,a_H).
/// The transition out of the last step leaves the path and contributes no
/// entropy.
double trajectory_entropy(const TabularMDP& mdp, const MarkovPolicy& policy);

Trajectory sample_trajectory(const TabularMDP& mdp, const MarkovPolicy& policy, Rng& rng);
Trajectory sample_trajectory(const TabularMDP& mdp, const MixturePolicy& policy, Rng& rng);

CountTables update_counts(CountTables counts, const Trajectory& traj);

EmpiricalModel empirical_model(const CountTables& counts, std::size_t initial_state);

}  // namespace maxent
