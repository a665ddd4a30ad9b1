#include "maxent/entgame.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "maxent/soft_planning.hpp"

namespace maxent {

ForecasterState::ForecasterState(std::size_t S, std::size_t A, std::size_t H, std::size_t prior,
                                 Aggregation aggregation)
    : S_(S), A_(A), H_(H), n0_(prior), aggregation_(aggregation), counts_(S, A, H) {
    if (prior == 0) throw std::invalid_argument("ForecasterState: prior must be >= 1");
}

void ForecasterState::observe(const Trajectory& traj) {
    if (aggregation_ == Aggregation::PerStep)
        counts_.record(traj);
    else
        counts_.record_shared(traj);
}

double ForecasterState::pseudo_count(std::size_t h, std::size_t s, std::size_t a) const {
    const double n = static_cast<double>(counts_.visits(h, s, a));
    if (aggregation_ == Aggregation::PerStep) return n + static_cast<double>(n0_);
    return n + static_cast<double>(H_ * n0_);
}

VisitationProfile forecast(const ForecasterState& state) {
    const auto& c = state.counts();
    const std::size_t S = c.num_states(), A = c.num_actions(), H = c.horizon();
    double norm = static_cast<double>(state.episodes() + state.total_prior());
    if (state.aggregation() == Aggregation::StageHomogeneous) norm *= static_cast<double>(H);
    VisitationProfile d(S, A, H);
    for (std::size_t h = 0; h < H; ++h)
        for (std::size_t s = 0; s < S; ++s)
            for (std::size_t a = 0; a < A; ++a) d.at(h, s, a) = state.pseudo_count(h, s, a) / norm;
    return d;
}

double log_loss(const VisitationProfile& prediction, const Trajectory& traj) {
    double loss = 0.0;
    for (std::size_t h = 0; h < prediction.horizon; ++h)
        loss -= std::log(prediction.at(h, traj.states[h], traj.actions[h]));
    return loss;
}

double sampler_bonus(std::uint64_t n, std::uint64_t t, std::size_t S, std::size_t A,
                     std::size_t H, double delta) {
    const double dn = static_cast<double>(n);
    const double SA = static_cast<double>(S * A);
    const double alpha = std::log(2.0 * SA * static_cast<double>(H) / delta) +
                         static_cast<double>(S) * (1.0 + std::log1p(dn));
    const double lg = std::log(static_cast<double>(t) + SA);
    const double Hd = static_cast<double>(H);
    return std::sqrt(2.0 * Hd * Hd * lg * lg * alpha / dn);
}

SamplerPlan sampler_plan(const CountTables& counts, const TabularMDP& model,
                         const VisitationProfile& prediction, std::uint64_t t,
                         const SamplerOptions& options) {
    const std::size_t S = model.num_states(), A = model.num_actions(), H = model.horizon();
    if (counts.num_states() != S || counts.num_actions() != A || counts.horizon() != H ||
        prediction.num_states != S || prediction.num_actions != A || prediction.horizon != H)
        throw std::invalid_argument("sampler_plan: shape mismatch");
    if (t == 0) throw std::invalid_argument("sampler_plan: t must be >= 1");
    if (!(options.delta > 0.0 && options.delta < 1.0))
        throw std::invalid_argument("sampler_plan: delta must lie in (0, 1)");

    SamplerPlan out;
    out.num_states = S;
    out.num_actions = A;
    out.horizon = H;
    out.Q.assign(H * S * A, 0.0);
    out.V.assign((H + 1) * S, 0.0);
    out.bonus.assign(H * S * A, 0.0);
    out.cap = static_cast<double>(H) *
              std::log(static_cast<double>(t) / static_cast<double>(options.prior) +
                       static_cast<double>(S * A));
    std::vector<std::size_t> greedy(H * S, 0);

    for (std::size_t h = H; h-- > 0;) {
        const double* v_next = out.V.data() + (h + 1) * S;
        for (std::size_t s = 0; s < S; ++s) {
            double best = -std::numeric_limits<double>::infinity();
            std::size_t arg = 0;
            for (std::size_t a = 0; a < A; ++a) {
                const std::size_t i = (h * S + s) * A + a;
                const auto n = counts.visits(h, s, a);
                double b = 0.0;
                // Anything above the cap is cut by the clip on V, so the bonus
                // is capped too; unvisited cells sit exactly at the cap.
                if (options.bonus_scale > 0.0)
                    b = n == 0 ? out.cap
                               : std::min(out.cap, options.bonus_scale *
                                                       sampler_bonus(n, t, S, A, H, options.delta));
                out.bonus[i] = b;
                const auto row = model.row(h, s, a);
                double q = -std::log(prediction.dist[i]) + b;
                for (std::size_t k = 0; k < S; ++k) q += row[k] * v_next[k];
                out.Q[i] = q;
                if (q > best) {
                    best = q;
                    arg = a;
                }
            }
            greedy[h * S + s] = arg;
            out.V[h * S + s] = std::clamp(best, 0.0, out.cap);
        }
    }
    out.policy = MarkovPolicy::deterministic(S, A, H, greedy);
    return out;
}

void EntGameConfig::check() const {
    if (episodes == 0) throw std::invalid_argument("entgame: episodes must be >= 1");
    if (prior == 0) throw std::invalid_argument("entgame: prior must be >= 1");
    if (!(delta > 0.0 && delta < 1.0)) throw std::invalid_argument("entgame: delta must lie in (0, 1)");
    if (!(bonus_scale >= 0.0)) throw std::invalid_argument("entgame: bonus_scale must be >= 0");
    if (variant == EntGameVariant::Regularized && (exploration_episodes == 0 || model_episodes == 0))
        throw std::invalid_argument("entgame: exploration and model budgets must be >= 1");
}

namespace {

void log_episode(EntGameResult& out, std::size_t t, double loss, const char* value_name,
                 double value) {
    out.log.add(t, "log_loss", loss);
    out.log.add(t, "empirical_ve", visitation_entropy(out.counts.empirical_profile()));
    out.log.add(t, value_name, value);
}

}  // namespace

EntGameResult run_entgame(EnvironmentHandle& env, const EntGameConfig& config, std::uint64_t seed) {
    config.check();
    if (config.variant == EntGameVariant::Regularized) return run_reg_entgame(env, config, seed);
    const std::size_t S = env.num_states(), A = env.num_actions(), H = env.horizon();
    const std::uint64_t start_episodes = env.episodes();
    Rng rng(seed);
    ForecasterState forecaster(S, A, H, config.prior, config.aggregation);
    // Sampler counts share the forecaster's aggregation mode.
    CountTables sampler_counts(S, A, H);
    SamplerOptions options{config.delta, config.prior, config.bonus_scale};

    EntGameResult out;
    out.counts = CountTables(S, A, H);
    for (std::size_t t = 1; t <= config.episodes; ++t) {
        const auto prediction = forecast(forecaster);
        const auto model = empirical_model(sampler_counts, env.initial_state());
        auto plan = sampler_plan(sampler_counts, model, prediction, t, options);
        const auto traj = env.rollout(plan.policy, rng);
        const double loss = log_loss(prediction, traj);
        forecaster.observe(traj);
        if (config.aggregation == Aggregation::PerStep)
            sampler_counts.record(traj);
        else
            sampler_counts.record_shared(traj);
        out.counts.record(traj);
        log_episode(out, t, loss, "sampler_value", plan.v(0, env.initial_state()));
        out.mixture.add(std::move(plan.policy));
    }
    out.env_episodes = env.episodes() - start_episodes;
    out.env_steps = out.env_episodes * H;
    return out;
}

EntGameResult run_reg_entgame(EnvironmentHandle& env, const EntGameConfig& config,
                              std::uint64_t seed) {
    config.check();
    const std::uint64_t start_episodes = env.episodes();
    auto exploration = build_mixture(env, config.exploration_episodes, config.delta,
                                     derive_seed(seed, 1));
    auto data = collect_and_estimate(env, exploration.mixture, config.model_episodes,
                                     derive_seed(seed, 2));
    const TabularMDP model =
        config.aggregation == Aggregation::PerStep
            ? TabularMDP(data.model)
            : TabularMDP(empirical_model(data.counts.aggregated_over_steps(), env.initial_state()));
    const std::uint64_t spent = env.episodes() - start_episodes;
    auto out = run_reg_entgame_on_model(env, model, config, derive_seed(seed, 3));
    out.exploration_episodes = spent;
    out.env_episodes += spent;
    out.env_steps = out.env_episodes * env.horizon();
    return out;
}

EntGameResult run_reg_entgame_on_model(EnvironmentHandle& env, const TabularMDP& model,
                                       const EntGameConfig& config, std::uint64_t seed) {
    config.check();
    const std::size_t S = env.num_states(), A = env.num_actions(), H = env.horizon();
    if (model.num_states() != S || model.num_actions() != A || model.horizon() != H)
        throw std::invalid_argument("run_reg_entgame: model shape mismatch");
    const std::uint64_t start_episodes = env.episodes();
    Rng rng(seed);
    ForecasterState forecaster(S, A, H, config.prior, config.aggregation);

    EntGameResult out;
    out.counts = CountTables(S, A, H);
    std::vector<double> rewards(H * S * A);
    for (std::size_t t = 1; t <= config.episodes; ++t) {
        const auto prediction = forecast(forecaster);
        // Reward depends on the state marginal only.
        for (std::size_t h = 0; h < H; ++h)
            for (std::size_t s = 0; s < S; ++s) {
                const double r = -std::log(prediction.state_mass(h, s));
                for (std::size_t a = 0; a < A; ++a) rewards[(h * S + s) * A + a] = r;
            }
        const auto spec = RegularizedSpec::with_rewards(S, A, H, rewards, 1.0, 0.0);
        auto plan = solve_regularized(model, spec);
        const auto traj = env.rollout(plan.policy, rng);
        const double loss = log_loss(prediction, traj);
        forecaster.observe(traj);
        out.counts.record(traj);
        log_episode(out, t, loss, "planner_value", plan.initial_value(model.initial_state()));
        out.mixture.add(std::move(plan.policy));
    }
    out.env_episodes = env.episodes() - start_episodes;
    out.env_steps = out.env_episodes * H;
    return out;
}

namespace {

void check_comparator(const CountTables& counts, const VisitationProfile& comparator) {
    const std::size_t S = counts.num_states(), A = counts.num_actions(), H = counts.horizon();
    if (comparator.num_states != S || comparator.num_actions != A || comparator.horizon != H)
        throw std::invalid_argument("forecaster_regret: comparator shape mismatch");
    for (std::size_t h = 0; h < H; ++h) {
        double total = 0.0;
        for (double x : comparator.step(h)) {
            if (!(x >= 0.0)) throw std::invalid_argument("forecaster_regret: negative comparator");
            total += x;
        }
        if (std::abs(total - 1.0) > 1e-9)
            throw std::invalid_argument("forecaster_regret: comparator step does not sum to 1");
    }
}

}  // namespace

double forecaster_regret(const DiagnosticsLog& log, const CountTables& counts,
                         const VisitationProfile& comparator) {
    check_comparator(counts, comparator);
    const auto losses = log.series("log_loss");
    if (losses.size() != counts.episodes())
        throw std::invalid_argument("forecaster_regret: log and counts disagree on T");
    double learner = 0.0;
    for (double l : losses) learner += l;
    double reference = 0.0;
    for (std::size_t i = 0; i < comparator.dist.size(); ++i) {
        const auto n = counts.visit_table()[i];
        if (n == 0) continue;
        reference -= static_cast<double>(n) * std::log(comparator.dist[i]);
    }
    return learner - reference;
}

double forecaster_regret_bound(const CountTables& counts, const VisitationProfile& comparator) {
    check_comparator(counts, comparator);
    const double T = static_cast<double>(counts.episodes());
    const std::size_t S = counts.num_states(), A = counts.num_actions(), H = counts.horizon();
    double bound = static_cast<double>(H * S * A) * (1.0 + std::log(T + 1.0));
    if (counts.episodes() == 0) return bound;
    const auto avg = counts.empirical_profile();
    for (std::size_t h = 0; h < H; ++h) bound -= T * kl_divergence(avg.step(h), comparator.step(h));
    return bound;
}

}  // namespace maxent
