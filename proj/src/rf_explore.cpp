#include "maxent/rf_explore.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace maxent {

Trajectory EnvironmentHandle::rollout(const MarkovPolicy& policy, Rng& rng) {
    auto traj = sample_trajectory(mdp_, policy, rng);
    ++episodes_;
    return traj;
}

Trajectory EnvironmentHandle::rollout(const MixturePolicy& policy, Rng& rng) {
    auto traj = sample_trajectory(mdp_, policy, rng);
    ++episodes_;
    return traj;
}

OptimisticRegretMinimizer::OptimisticRegretMinimizer(std::size_t S, std::size_t A, std::size_t H,
                                                     std::vector<double> rewards, double delta)
    : S_(S), A_(A), H_(H), rewards_(std::move(rewards)), cap_(H + 1, 0.0), delta_(delta),
      counts_(S, A, H) {
    if (rewards_.size() != H * S * A)
        throw std::invalid_argument("OptimisticRegretMinimizer: reward shape mismatch");
    if (!(delta > 0.0 && delta < 1.0))
        throw std::invalid_argument("OptimisticRegretMinimizer: delta must lie in (0, 1)");
    for (std::size_t h = H; h-- > 0;) {
        double best = 0.0;
        for (std::size_t i = h * S * A; i < (h + 1) * S * A; ++i) {
            if (rewards_[i] < 0.0)
                throw std::invalid_argument("OptimisticRegretMinimizer: negative reward");
            best = std::max(best, rewards_[i]);
        }
        cap_[h] = cap_[h + 1] + best;
    }
}

MarkovPolicy OptimisticRegretMinimizer::next_policy() {
    const double log_term = std::log(4.0 * static_cast<double>(S_ * A_ * H_) / delta_);
    std::vector<double> v_next(S_, 0.0), v(S_, 0.0), p(S_), q(A_);
    std::vector<double> probs(H_ * S_ * A_, 0.0);
    for (std::size_t h = H_; h-- > 0;) {
        for (std::size_t s = 0; s < S_; ++s) {
            double best = -std::numeric_limits<double>::infinity();
            for (std::size_t a = 0; a < A_; ++a) {
                const double r = rewards_[(h * S_ + s) * A_ + a];
                const auto n = counts_.visits(h, s, a);
                q[a] = r + cap_[h + 1];
                if (n > 0) {
                    const double dn = static_cast<double>(n);
                    const auto row = counts_.transition_row(h, s, a);
                    double mean = 0.0;
                    for (std::size_t k = 0; k < S_; ++k) {
                        p[k] = static_cast<double>(row[k]) / dn;
                        mean += p[k] * v_next[k];
                    }
                    const double beta =
                        log_term + std::log(4.0 * std::exp(1.0) * dn * (2.0 * dn + 1.0));
                    const double bonus = std::sqrt(2.0 * variance(p, v_next) * beta / dn) +
                                         3.0 * cap_[h + 1] * beta / dn;
                    q[a] = std::min(q[a], r + mean + bonus);
                }
                best = std::max(best, q[a]);
            }
            // Tied actions share the mass, so steps where the reward-to-go is
            // already settled (e.g. after the goal step) are played uniformly.
            const double tol = 1e-12 * (1.0 + std::abs(best));
            std::size_t ties = 0;
            for (std::size_t a = 0; a < A_; ++a) ties += q[a] >= best - tol;
            for (std::size_t a = 0; a < A_; ++a)
                probs[(h * S_ + s) * A_ + a] =
                    q[a] >= best - tol ? 1.0 / static_cast<double>(ties) : 0.0;
            v[s] = best;
        }
        v_next.swap(v);
    }
    return {S_, A_, H_, std::move(probs)};
}

void OptimisticRegretMinimizer::observe(const Trajectory& traj) { counts_.record(traj); }

std::vector<double> goal_reward(std::size_t S, std::size_t A, std::size_t H,
                                std::size_t goal_state, std::size_t goal_step) {
    if (goal_state >= S || goal_step >= H) throw std::invalid_argument("goal_reward: goal out of range");
    std::vector<double> r(H * S * A, 0.0);
    for (std::size_t a = 0; a < A; ++a) r[(goal_step * S + goal_state) * A + a] = 1.0;
    return r;
}

std::vector<MarkovPolicy> goal_policies(EnvironmentHandle& env, std::size_t goal_state,
                                        std::size_t goal_step, std::size_t episodes,
                                        double delta, std::uint64_t seed) {
    if (episodes == 0) throw std::invalid_argument("goal_policies: episodes must be >= 1");
    const std::size_t S = env.num_states(), A = env.num_actions(), H = env.horizon();
    OptimisticRegretMinimizer learner(S, A, H, goal_reward(S, A, H, goal_state, goal_step), delta);
    Rng rng(seed);
    std::vector<MarkovPolicy> out;
    out.reserve(episodes);
    for (std::size_t k = 0; k < episodes; ++k) {
        auto policy = learner.next_policy();
        learner.observe(env.rollout(policy, rng));
        for (double& x : policy.row(goal_step, goal_state)) x = 1.0 / static_cast<double>(A);
        out.push_back(std::move(policy));
    }
    return out;
}

ExplorationPhaseResult build_mixture(EnvironmentHandle& env, std::size_t episodes_per_goal,
                                     double delta, std::uint64_t seed) {
    const std::size_t S = env.num_states(), H = env.horizon();
    ExplorationPhaseResult out;
    std::uint64_t goal = 0;
    for (std::size_t h = 0; h < H; ++h)
        for (std::size_t s = 0; s < S; ++s, ++goal)
            for (auto& policy :
                 goal_policies(env, s, h, episodes_per_goal, delta, derive_seed(seed, goal)))
                out.mixture.add(std::move(policy));
    if (const auto* truth = env.known_model()) out.visitation = exact_visitation(*truth, out.mixture);
    return out;
}

CollectedData collect_and_estimate(EnvironmentHandle& env, const MixturePolicy& mixture,
                                   std::size_t episodes, std::uint64_t seed) {
    if (episodes == 0) throw std::invalid_argument("collect_and_estimate: episodes must be >= 1");
    CountTables counts(env.num_states(), env.num_actions(), env.horizon());
    Rng rng(seed);
    for (std::size_t k = 0; k < episodes; ++k) counts.record(env.rollout(mixture, rng));
    auto model = empirical_model(counts, env.initial_state());
    return {std::move(counts), std::move(model)};
}

std::vector<MarkovPolicy> plan_on_model(const TabularMDP& model,
                                        const std::vector<RegularizedSpec>& specs) {
    std::vector<MarkovPolicy> out;
    out.reserve(specs.size());
    for (const auto& spec : specs) {
        if (!(spec.lambda > 0.0)) throw std::invalid_argument("plan_on_model: lambda must be > 0");
        out.push_back(solve_regularized(model, spec).policy);
    }
    return out;
}

RfExploreResult rf_explore_ent(EnvironmentHandle& env, const std::vector<RegularizedSpec>& specs,
                               std::size_t episodes_per_goal, std::size_t model_episodes,
                               double delta, std::uint64_t seed) {
    for (const auto& spec : specs)
        if (spec.num_states != env.num_states() || spec.num_actions != env.num_actions() ||
            spec.horizon != env.horizon())
            throw std::invalid_argument("rf_explore_ent: spec/environment shape mismatch");
    RfExploreResult out;
    const std::uint64_t e0 = env.episodes();
    out.exploration = build_mixture(env, episodes_per_goal, delta, derive_seed(seed, 1));
    const std::uint64_t e1 = env.episodes();
    auto data = collect_and_estimate(env, out.exploration.mixture, model_episodes,
                                     derive_seed(seed, 2));
    const std::uint64_t e2 = env.episodes();
    out.exploration.counts = std::move(data.counts);
    out.exploration.model = std::move(data.model);
    out.policies = plan_on_model(out.exploration.model, specs);
    out.accounting.phase1_episodes = e1 - e0;
    out.accounting.phase1_steps = (e1 - e0) * env.horizon();
    out.accounting.phase2_episodes = e2 - e1;
    out.accounting.phase2_steps = (e2 - e1) * env.horizon();
    return out;
}

}  // namespace maxent
