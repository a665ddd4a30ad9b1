#include "maxent/ucbvi_ent.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace maxent {

Thresholds thresholds(double delta, std::uint64_t n, std::size_t S, std::size_t A, std::size_t H) {
    if (!(delta > 0.0 && delta < 1.0)) throw std::invalid_argument("thresholds: delta must lie in (0, 1)");
    const double dn = static_cast<double>(n);
    const double base = std::log(4.0 * static_cast<double>(S * A * H) / delta);
    Thresholds t;
    t.cnt = base;
    t.kl = base + static_cast<double>(S) * (1.0 + std::log1p(dn));
    const double m = std::max(dn, 1.0);
    t.conc = base + std::log(4.0 * std::exp(1.0) * m * (2.0 * m + 1.0));
    if (n > 1) {
        const double l = std::log(dn);
        t.entropy = l * l * (base + std::log(dn * (dn + 1.0)));
    }
    return t;
}

namespace {

void check_shapes(const CountTables& counts, const TabularMDP& model, const RegularizedSpec& spec) {
    if (counts.num_states() != model.num_states() || counts.num_actions() != model.num_actions() ||
        counts.horizon() != model.horizon())
        throw std::invalid_argument("ucbvi-ent: counts/model shape mismatch");
    spec.check(model);
}

double entropy_bonus_at(const Thresholds& th, std::uint64_t n, std::size_t S, double cnt) {
    const double dn = std::max(static_cast<double>(n), 1.0);
    const double raw = std::sqrt(2.0 * th.entropy / dn) +
                       std::min(th.kl / dn, std::log(static_cast<double>(S)));
    // Two entropies over S outcomes never differ by more than log S.
    return std::min(std::max(raw, std::sqrt(2.0 * cnt / dn)), std::log(static_cast<double>(S)));
}

}  // namespace

ConfidenceState compute_bounds(const CountTables& counts, const TabularMDP& model,
                               const RegularizedSpec& spec, const UcbviOptions& options) {
    check_shapes(counts, model, spec);
    if (!(spec.lambda > 0.0)) throw std::invalid_argument("compute_bounds: lambda must be > 0");
    if (!(options.bonus_scale >= 0.0)) throw std::invalid_argument("compute_bounds: bonus_scale < 0");
    const std::size_t S = model.num_states(), A = model.num_actions(), H = model.horizon();
    const double Hd = static_cast<double>(H);
    const double rmax = spec.rmax();
    const double cap = Hd * rmax;
    const double scale = options.bonus_scale;
    const auto trans_entropy = transition_entropies(model);

    ConfidenceState st;
    st.num_states = S;
    st.num_actions = A;
    st.horizon = H;
    st.value_cap = cap;
    st.Q_upper.assign(H * S * A, 0.0);
    st.Q_lower.assign(H * S * A, 0.0);
    st.V_upper.assign((H + 1) * S, 0.0);
    st.V_lower.assign((H + 1) * S, 0.0);
    st.transition_bonus.assign(H * S * A, 0.0);
    st.correction_bonus.assign(H * S * A, 0.0);
    st.entropy_bonus.assign(H * S * A, 0.0);
    st.variance_term.assign(H * S * A, 0.0);
    std::vector<double> probs(H * S * A), q_up(A), q_lo(A);

    for (std::size_t h = H; h-- > 0;) {
        const std::span<const double> vu(st.V_upper.data() + (h + 1) * S, S);
        const std::span<const double> vl(st.V_lower.data() + (h + 1) * S, S);
        // The last transition carries no entropy reward, so it needs no entropy bonus.
        const bool entropy_step = h + 1 < H;
        for (std::size_t s = 0; s < S; ++s) {
            for (std::size_t a = 0; a < A; ++a) {
                const std::size_t i = (h * S + s) * A + a;
                const auto n = counts.visits(h, s, a);
                const auto row = model.row(h, s, a);
                double pu = 0.0, pl = 0.0;
                for (std::size_t k = 0; k < S; ++k) {
                    pu += row[k] * vu[k];
                    pl += row[k] * vl[k];
                }
                st.variance_term[i] = variance(row, vu);
                const double r = spec.rewards[i] + spec.kappa * trans_entropy[i];
                if (n == 0 && scale > 0.0) {
                    st.transition_bonus[i] = cap;
                    st.correction_bonus[i] = cap;
                    st.entropy_bonus[i] = entropy_step ? cap : 0.0;
                    st.Q_upper[i] = cap;
                    st.Q_lower[i] = 0.0;
                    continue;
                }
                if (n > 0) {
                    const double dn = static_cast<double>(n);
                    const auto th = thresholds(options.delta, n, S, A, H);
                    st.transition_bonus[i] =
                        scale * (3.0 * std::sqrt(st.variance_term[i] * th.conc / dn) +
                                 9.0 * Hd * Hd * rmax * th.kl / dn);
                    st.correction_bonus[i] = scale * (pu - pl) / Hd;
                    st.entropy_bonus[i] =
                        entropy_step ? scale * entropy_bonus_at(th, n, S, th.cnt) : 0.0;
                }
                const double b = st.transition_bonus[i] + st.correction_bonus[i] +
                                 spec.kappa * st.entropy_bonus[i];
                st.Q_upper[i] = std::clamp(r + pu + b, 0.0, cap);
                st.Q_lower[i] = std::clamp(r + pl - b, 0.0, cap);
            }
            for (std::size_t a = 0; a < A; ++a) {
                q_up[a] = st.Q_upper[(h * S + s) * A + a];
                q_lo[a] = st.Q_lower[(h * S + s) * A + a];
            }
            const auto up = soft_conjugate(q_up, spec.lambda);
            const auto lo = soft_conjugate(q_lo, spec.lambda);
            st.V_upper[h * S + s] = std::clamp(up.value, 0.0, cap);
            st.V_lower[h * S + s] = std::clamp(lo.value, 0.0, cap);
            std::copy(up.policy.begin(), up.policy.end(), probs.begin() + (h * S + s) * A);
        }
    }
    st.policy = MarkovPolicy(S, A, H, std::move(probs));
    return st;
}

GapTables gap_recursion(const ConfidenceState& state, const CountTables& counts,
                        const TabularMDP& model, const RegularizedSpec& spec,
                        const MarkovPolicy& policy, const UcbviOptions& options) {
    check_shapes(counts, model, spec);
    const std::size_t S = model.num_states(), A = model.num_actions(), H = model.horizon();
    if (!policy.matches(model) || state.num_states != S || state.num_actions != A ||
        state.horizon != H)
        throw std::invalid_argument("gap_recursion: shape mismatch");
    const double Hd = static_cast<double>(H);
    const double rmax = spec.rmax();
    const double cap = Hd * rmax;
    const double scale = options.bonus_scale;

    GapTables out;
    out.num_states = S;
    out.num_actions = A;
    out.horizon = H;
    out.G.assign((H + 1) * S * A, 0.0);
    std::vector<double> next(S);
    for (std::size_t h = H; h-- > 0;) {
        for (std::size_t k = 0; k < S; ++k) {
            double x = 0.0;
            if (h + 1 < H)
                for (std::size_t a = 0; a < A; ++a)
                    x += policy.prob(h + 1, k, a) * out.G[((h + 1) * S + k) * A + a];
            next[k] = x;
        }
        for (std::size_t s = 0; s < S; ++s)
            for (std::size_t a = 0; a < A; ++a) {
                const std::size_t i = (h * S + s) * A + a;
                const auto n = counts.visits(h, s, a);
                if (n == 0 && scale > 0.0) {
                    out.G[i] = cap;
                    continue;
                }
                double g = 2.0 * state.transition_bonus[i] + 2.0 * spec.kappa * state.entropy_bonus[i];
                if (n > 0) {
                    const auto th = thresholds(options.delta, n, S, A, H);
                    g += scale * 4.0 * Hd * Hd * rmax * th.kl / static_cast<double>(n);
                }
                const auto row = model.row(h, s, a);
                double carry = 0.0;
                for (std::size_t k = 0; k < S; ++k) carry += row[k] * next[k];
                g += (1.0 + 3.0 / Hd) * carry;
                out.G[i] = std::clamp(g, 0.0, cap);
            }
    }
    const std::size_t s1 = model.initial_state();
    for (std::size_t a = 0; a < A; ++a) out.initial += policy.prob(0, s1, a) * out.G[s1 * A + a];
    return out;
}

UcbviResult run_ucbvi_ent(EnvironmentHandle& env, const RegularizedSpec& spec,
                          const UcbviConfig& config, std::uint64_t seed,
                          const UcbviObserver& observer) {
    if (!(config.epsilon > 0.0)) throw std::invalid_argument("run_ucbvi_ent: epsilon must be > 0");
    if (!(config.options.delta > 0.0 && config.options.delta < 1.0))
        throw std::invalid_argument("run_ucbvi_ent: delta must lie in (0, 1)");
    const std::size_t S = env.num_states(), A = env.num_actions(), H = env.horizon();
    if (spec.num_states != S || spec.num_actions != A || spec.horizon != H)
        throw std::invalid_argument("run_ucbvi_ent: spec/environment shape mismatch");
    const std::size_t every = std::max<std::size_t>(config.log_every, 1);
    const std::uint64_t start = env.episodes();
    Rng rng(seed);

    UcbviResult out;
    out.counts = CountTables(S, A, H);
    CountTables shared(S, A, H);
    for (std::size_t t = 0;; ++t) {
        const CountTables& counts = config.shared_counts ? shared : out.counts;
        const auto model = empirical_model(counts, env.initial_state());
        auto bounds = compute_bounds(counts, model, spec, config.options);
        const auto gap = gap_recursion(bounds, counts, model, spec, bounds.policy, config.options);
        if (observer) observer(t, bounds, gap);
        const bool stop = gap.initial <= config.epsilon;
        const bool out_of_budget = t >= config.max_episodes;
        if (stop || out_of_budget || t % every == 0) {
            out.log.add(t, "gap", gap.initial);
            out.log.add(t, "upper_value", bounds.V_upper[env.initial_state()]);
            out.log.add(t, "lower_value", bounds.V_lower[env.initial_state()]);
        }
        if (stop || out_of_budget) {
            out.policy = std::move(bounds.policy);
            out.stopping_episode = t;
            out.converged = stop;
            break;
        }
        const auto traj = env.rollout(bounds.policy, rng);
        out.counts.record(traj);
        if (config.shared_counts) shared.record_shared(traj);
    }
    out.env_episodes = env.episodes() - start;
    out.env_steps = out.env_episodes * H;
    return out;
}

}  // namespace maxent
