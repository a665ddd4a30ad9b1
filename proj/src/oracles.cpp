#include "maxent/oracles.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>

namespace maxent {

double TrajectoryTable::total_mass() const {
    double m = 0.0;
    for (const auto& p : paths) m += p.probability;
    return m;
}

double TrajectoryTable::entropy() const {
    double h = 0.0;
    for (const auto& p : paths)
        if (p.probability > 0.0) h -= p.probability * std::log(p.probability);
    return h;
}

VisitationProfile TrajectoryTable::marginals() const {
    VisitationProfile d(num_states, num_actions, horizon);
    for (const auto& p : paths)
        for (std::size_t h = 0; h < horizon; ++h)
            d.at(h, p.states[h], p.actions[h]) += p.probability;
    return d;
}

double TrajectoryTable::kl_to_product_of_marginals() const {
    const auto d = marginals();
    double kl = 0.0;
    for (const auto& p : paths) {
        if (p.probability <= 0.0) continue;
        double log_product = 0.0;
        for (std::size_t h = 0; h < horizon; ++h)
            log_product += std::log(d.at(h, p.states[h], p.actions[h]));
        kl += p.probability * (std::log(p.probability) - log_product);
    }
    return kl;
}

namespace {

void check_enumerable(const TabularMDP& mdp) {
    const double per_step = static_cast<double>(mdp.num_states() * mdp.num_actions());
    if (std::pow(per_step, static_cast<double>(mdp.horizon())) > kMaxEnumeratedPaths)
        throw std::invalid_argument("enumeration: (S*A)^H exceeds 1e6");
}

}  // namespace

TrajectoryTable enumerate_trajectories(const TabularMDP& mdp, const MarkovPolicy& policy) {
    if (!policy.matches(mdp)) throw std::invalid_argument("enumerate_trajectories: shape mismatch");
    check_enumerable(mdp);
    const std::size_t S = mdp.num_states(), A = mdp.num_actions(), H = mdp.horizon();
    TrajectoryTable table;
    table.num_states = S;
    table.num_actions = A;
    table.horizon = H;

    std::vector<std::size_t> states(H), actions(H);
    // Depth-first over (s_h, a_h); `mass` is the probability of the prefix
    // up to and including s_h.
    auto visit = [&](auto&& self, std::size_t h, std::size_t s, double mass) -> void {
        states[h] = s;
        for (std::size_t a = 0; a < A; ++a) {
            const double m = mass * policy.prob(h, s, a);
            if (m == 0.0) continue;
            actions[h] = a;
            if (h + 1 == H) {
                table.paths.push_back({states, actions, m});
                continue;
            }
            const auto row = mdp.row(h, s, a);
            for (std::size_t n = 0; n < S; ++n)
                if (row[n] > 0.0) self(self, h + 1, n, m * row[n]);
        }
    };
    visit(visit, 0, mdp.initial_state(), 1.0);
    return table;
}

std::vector<std::pair<double, double>> enumerate_returns(const TabularMDP& mdp,
                                                         const RegularizedSpec& spec,
                                                         const MarkovPolicy& policy) {
    spec.check(mdp);
    const auto table = enumerate_trajectories(mdp, policy);
    const auto trans_entropy = transition_entropies(mdp);
    const std::size_t S = mdp.num_states(), A = mdp.num_actions();
    std::vector<std::pair<double, double>> out;
    out.reserve(table.paths.size());
    for (const auto& p : table.paths) {
        double g = 0.0;
        for (std::size_t h = 0; h < table.horizon; ++h) {
            const std::size_t s = p.states[h], a = p.actions[h];
            const std::size_t i = (h * S + s) * A + a;
            g += spec.rewards[i] + spec.kappa * trans_entropy[i] +
                 spec.lambda * entropy(policy.row(h, s));
        }
        out.emplace_back(g, p.probability);
    }
    return out;
}

double smoothed_entropy(std::span<const double> d, double sigma) {
    double h = 0.0;
    for (double x : d) h += x * std::log(1.0 / (x + sigma));
    return h;
}

double mvee_objective(const VisitationProfile& profile, MveeObjective objective) {
    if (objective == MveeObjective::PerStep) return visitation_entropy(profile);
    const std::size_t SA = profile.num_states * profile.num_actions;
    std::vector<double> avg(SA, 0.0);
    for (std::size_t h = 0; h < profile.horizon; ++h) {
        const auto step = profile.step(h);
        for (std::size_t i = 0; i < SA; ++i) avg[i] += step[i];
    }
    for (double& x : avg) x /= static_cast<double>(profile.horizon);
    return entropy(avg);
}

MarkovPolicy policy_from_profile(const VisitationProfile& d) {
    const std::size_t S = d.num_states, A = d.num_actions, H = d.horizon;
    std::vector<double> probs(H * S * A);
    for (std::size_t h = 0; h < H; ++h)
        for (std::size_t s = 0; s < S; ++s) {
            const double mass = d.state_mass(h, s);
            for (std::size_t a = 0; a < A; ++a)
                probs[(h * S + s) * A + a] =
                    mass > 0.0 ? d.at(h, s, a) / mass : 1.0 / static_cast<double>(A);
        }
    return {S, A, H, std::move(probs)};
}

namespace {

// Exact value iteration for per-step rewards; the greedy policy splits mass
// uniformly over (numerically) tied maximisers.
MarkovPolicy greedy_plan(const TabularMDP& mdp, const std::vector<double>& rewards) {
    const std::size_t S = mdp.num_states(), A = mdp.num_actions(), H = mdp.horizon();
    std::vector<double> v(S, 0.0), v_prev(S, 0.0), q(A);
    std::vector<double> probs(H * S * A, 0.0);
    for (std::size_t h = H; h-- > 0;) {
        for (std::size_t s = 0; s < S; ++s) {
            double best = -std::numeric_limits<double>::infinity();
            for (std::size_t a = 0; a < A; ++a) {
                const auto row = mdp.row(h, s, a);
                double x = rewards[(h * S + s) * A + a];
                for (std::size_t n = 0; n < S; ++n) x += row[n] * v[n];
                q[a] = x;
                best = std::max(best, x);
            }
            const double tol = 1e-12 * (1.0 + std::abs(best));
            std::size_t ties = 0;
            for (std::size_t a = 0; a < A; ++a) ties += q[a] >= best - tol;
            for (std::size_t a = 0; a < A; ++a)
                probs[(h * S + s) * A + a] =
                    q[a] >= best - tol ? 1.0 / static_cast<double>(ties) : 0.0;
            v_prev[s] = best;
        }
        v.swap(v_prev);
    }
    return {S, A, H, std::move(probs)};
}

std::vector<double> smoothed_gradient(const VisitationProfile& d, MveeObjective objective,
                                      double sigma) {
    const std::size_t SA = d.num_states * d.num_actions, H = d.horizon;
    std::vector<double> g(H * SA);
    if (objective == MveeObjective::PerStep) {
        for (std::size_t i = 0; i < g.size(); ++i) {
            const double x = d.dist[i];
            g[i] = std::log(1.0 / (x + sigma)) - x / (x + sigma);
        }
        return g;
    }
    std::vector<double> avg(SA, 0.0);
    for (std::size_t h = 0; h < H; ++h)
        for (std::size_t i = 0; i < SA; ++i) avg[i] += d.dist[h * SA + i];
    const double invH = 1.0 / static_cast<double>(H);
    for (double& x : avg) x *= invH;
    for (std::size_t h = 0; h < H; ++h)
        for (std::size_t i = 0; i < SA; ++i) {
            const double x = avg[i];
            g[h * SA + i] = invH * (std::log(1.0 / (x + sigma)) - x / (x + sigma));
        }
    return g;
}

}  // namespace

FrankWolfeResult optimal_mvee(const TabularMDP& mdp, const FrankWolfeConfig& config) {
    require_valid(mdp);
    if (config.iterations == 0) throw std::invalid_argument("optimal_mvee: iterations must be >= 1");
    const std::size_t S = mdp.num_states(), A = mdp.num_actions(), H = mdp.horizon();
    if (static_cast<double>(H * S * A * S) > 1e8)
        throw std::invalid_argument("optimal_mvee: instance too large");
    const double sigma = config.smoothing > 0.0
                             ? config.smoothing
                             : 1.0 / static_cast<double>(S * A * config.iterations);
    if (!(sigma < std::exp(-1.0))) throw std::invalid_argument("optimal_mvee: sigma must be < 1/e");

    FrankWolfeResult out;
    out.smoothing = sigma;
    auto start = MarkovPolicy::uniform(S, A, H);
    out.profile = exact_visitation(mdp, start);
    out.mixture.add(std::move(start));
    out.trace.reserve(config.iterations);
    for (std::size_t k = 1; k <= config.iterations; ++k) {
        const auto grad = smoothed_gradient(out.profile, config.objective, sigma);
        auto target = greedy_plan(mdp, grad);
        const auto vertex = exact_visitation(mdp, target);
        double gap = 0.0;
        for (std::size_t i = 0; i < grad.size(); ++i)
            gap += grad[i] * (vertex.dist[i] - out.profile.dist[i]);
        out.duality_gap = gap;
        const double step = 1.0 / static_cast<double>(k + 1);
        for (std::size_t i = 0; i < grad.size(); ++i)
            out.profile.dist[i] = (1.0 - step) * out.profile.dist[i] + step * vertex.dist[i];
        out.mixture.add(std::move(target));
        out.trace.push_back(mvee_objective(out.profile, config.objective));
    }
    out.policy = policy_from_profile(out.profile);
    return out;
}

MonteCarloEstimate mc_return_variance(const TabularMDP& mdp, const RegularizedSpec& spec,
                                      const MarkovPolicy& policy, std::size_t episodes,
                                      std::uint64_t seed) {
    if (episodes < 100) throw std::invalid_argument("mc_return_variance: need >= 100 episodes");
    spec.check(mdp);
    const std::size_t S = mdp.num_states(), A = mdp.num_actions(), H = mdp.horizon();
    const auto trans_entropy = transition_entropies(mdp);
    std::vector<double> policy_entropy(H * S);
    for (std::size_t h = 0; h < H; ++h)
        for (std::size_t s = 0; s < S; ++s) policy_entropy[h * S + s] = entropy(policy.row(h, s));

    Rng rng(seed);
    std::vector<double> returns(episodes);
    for (auto& g : returns) {
        const auto traj = sample_trajectory(mdp, policy, rng);
        g = 0.0;
        for (std::size_t h = 0; h < H; ++h) {
            const std::size_t s = traj.states[h], a = traj.actions[h];
            const std::size_t i = (h * S + s) * A + a;
            g += spec.rewards[i] + spec.kappa * trans_entropy[i] +
                 spec.lambda * policy_entropy[h * S + s];
        }
    }
    const double n = static_cast<double>(episodes);
    double mean = 0.0;
    for (double g : returns) mean += g;
    mean /= n;
    double m2 = 0.0, m4 = 0.0;
    for (double g : returns) {
        const double d = g - mean;
        m2 += d * d;
        m4 += d * d * d * d;
    }
    MonteCarloEstimate est;
    est.episodes = episodes;
    est.mean = mean;
    est.variance = m2 / (n - 1.0);
    const double central2 = m2 / n, central4 = m4 / n;
    const double var_of_var = (central4 - central2 * central2 * (n - 3.0) / (n - 1.0)) / n;
    est.variance_stderr = std::sqrt(std::max(0.0, var_of_var));
    return est;
}

double true_gap(const TabularMDP& mdp, const RegularizedSpec& spec, const MarkovPolicy& policy) {
    const auto best = solve_regularized(mdp, spec);
    const auto mine = evaluate_regularized(mdp, spec, policy);
    const std::size_t s1 = mdp.initial_state();
    return best.initial_value(s1) - mine.initial_value(s1);
}

}  // namespace maxent
