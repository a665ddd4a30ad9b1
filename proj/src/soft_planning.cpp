#include "maxent/soft_planning.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace maxent {

RegularizedSpec RegularizedSpec::mtee(std::size_t S, std::size_t A, std::size_t H) {
    RegularizedSpec spec;
    spec.num_states = S;
    spec.num_actions = A;
    spec.horizon = H;
    spec.rewards.assign(H * S * A, 0.0);
    spec.r_max = 0.0;
    spec.lambda = 1.0;
    spec.kappa = 1.0;
    return spec;
}

RegularizedSpec RegularizedSpec::with_rewards(std::size_t S, std::size_t A, std::size_t H,
                                              std::vector<double> rewards, double lambda,
                                              double kappa) {
    RegularizedSpec spec;
    spec.num_states = S;
    spec.num_actions = A;
    spec.horizon = H;
    spec.rewards = std::move(rewards);
    spec.r_max = spec.rewards.empty()
                     ? 0.0
                     : std::max(0.0, *std::max_element(spec.rewards.begin(), spec.rewards.end()));
    spec.lambda = lambda;
    spec.kappa = kappa;
    return spec;
}

double RegularizedSpec::rmax() const {
    return r_max + kappa * std::log(static_cast<double>(num_states)) +
           lambda * std::log(static_cast<double>(num_actions));
}

void RegularizedSpec::check(const TabularMDP& model) const {
    if (num_states != model.num_states() || num_actions != model.num_actions() ||
        horizon != model.horizon())
        throw std::invalid_argument("RegularizedSpec: shape mismatch with model");
    if (rewards.size() != horizon * num_states * num_actions)
        throw std::invalid_argument("RegularizedSpec: reward tensor has wrong size");
    if (!(lambda >= 0.0) || !(kappa >= 0.0))
        throw std::invalid_argument("RegularizedSpec: lambda and kappa must be nonnegative");
    for (double r : rewards)
        if (!(r >= 0.0) || r > r_max)
            throw std::invalid_argument("RegularizedSpec: reward outside [0, r_max]");
}

SoftMax soft_conjugate(std::span<const double> q, double lambda) {
    if (!(lambda >= 0.0)) throw std::invalid_argument("soft_conjugate: lambda < 0");
    if (q.empty()) throw std::invalid_argument("soft_conjugate: empty row");
    SoftMax out;
    out.policy.assign(q.size(), 0.0);
    std::size_t best = 0;
    for (std::size_t a = 1; a < q.size(); ++a)
        if (q[a] > q[best]) best = a;
    const double m = q[best];
    if (lambda == 0.0) {
        out.value = m;
        out.policy[best] = 1.0;
        return out;
    }
    double z = 0.0;
    for (std::size_t a = 0; a < q.size(); ++a) {
        out.policy[a] = std::exp((q[a] - m) / lambda);
        z += out.policy[a];
    }
    for (double& p : out.policy) p /= z;
    out.value = m + lambda * std::log(z);
    return out;
}

double variance(std::span<const double> p, std::span<const double> f) {
    double mean = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) mean += p[i] * f[i];
    double var = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        const double d = f[i] - mean;
        var += p[i] * d * d;
    }
    return var;
}

std::vector<double> transition_entropies(const TabularMDP& model) {
    const std::size_t S = model.num_states(), A = model.num_actions(), H = model.horizon();
    std::vector<double> out(H * S * A, 0.0);
    for (std::size_t h = 0; h + 1 < H; ++h)
        for (std::size_t s = 0; s < S; ++s)
            for (std::size_t a = 0; a < A; ++a)
                out[(h * S + s) * A + a] = entropy(model.row(h, s, a));
    return out;
}

namespace {

ValueTables make_tables(const TabularMDP& model) {
    ValueTables t;
    t.num_states = model.num_states();
    t.num_actions = model.num_actions();
    t.horizon = model.horizon();
    t.Q.assign(t.horizon * t.num_states * t.num_actions, 0.0);
    t.V.assign((t.horizon + 1) * t.num_states, 0.0);
    return t;
}

// Q_h(s,a) = r_h(s,a) + kappa H(p_h(s,a)) + p_h V_{h+1}(s,a)
void backup_q(const TabularMDP& model, const RegularizedSpec& spec,
              const std::vector<double>& trans_entropy, ValueTables& t, std::size_t h) {
    const std::size_t S = t.num_states, A = t.num_actions;
    const double* next = t.V.data() + (h + 1) * S;
    for (std::size_t s = 0; s < S; ++s)
        for (std::size_t a = 0; a < A; ++a) {
            const std::size_t i = (h * S + s) * A + a;
            const auto row = model.row(h, s, a);
            double q = spec.rewards[i] + spec.kappa * trans_entropy[i];
            for (std::size_t n = 0; n < S; ++n) q += row[n] * next[n];
            t.Q[i] = q;
        }
}

}  // namespace

ValueTables solve_regularized(const TabularMDP& model, const RegularizedSpec& spec) {
    spec.check(model);
    const std::size_t S = model.num_states(), A = model.num_actions(), H = model.horizon();
    const auto trans_entropy = transition_entropies(model);
    ValueTables t = make_tables(model);
    std::vector<double> probs(H * S * A);
    for (std::size_t h = H; h-- > 0;) {
        backup_q(model, spec, trans_entropy, t, h);
        for (std::size_t s = 0; s < S; ++s) {
            const std::span<const double> q(t.Q.data() + (h * S + s) * A, A);
            auto sm = soft_conjugate(q, spec.lambda);
            t.V[h * S + s] = sm.value;
            std::copy(sm.policy.begin(), sm.policy.end(), probs.begin() + (h * S + s) * A);
        }
    }
    t.policy = MarkovPolicy(S, A, H, std::move(probs));
    return t;
}

ValueTables evaluate_regularized(const TabularMDP& model, const RegularizedSpec& spec,
                                 const MarkovPolicy& policy) {
    spec.check(model);
    if (!policy.matches(model))
        throw std::invalid_argument("evaluate_regularized: policy shape mismatch");
    const std::size_t S = model.num_states(), A = model.num_actions(), H = model.horizon();
    const auto trans_entropy = transition_entropies(model);
    ValueTables t = make_tables(model);
    for (std::size_t h = H; h-- > 0;) {
        backup_q(model, spec, trans_entropy, t, h);
        for (std::size_t s = 0; s < S; ++s) {
            const auto pi = policy.row(h, s);
            double v = spec.lambda * entropy(pi);
            for (std::size_t a = 0; a < A; ++a) v += pi[a] * t.Q[(h * S + s) * A + a];
            t.V[h * S + s] = v;
        }
    }
    t.policy = policy;
    return t;
}

VarianceTables variance_bellman(const TabularMDP& model, const RegularizedSpec& spec,
                                const MarkovPolicy& policy) {
    const auto values = evaluate_regularized(model, spec, policy);
    const std::size_t S = model.num_states(), A = model.num_actions(), H = model.horizon();
    VarianceTables out;
    out.num_states = S;
    out.num_actions = A;
    out.horizon = H;
    out.Qvar.assign(H * S * A, 0.0);
    out.Vvar.assign((H + 1) * S, 0.0);
    for (std::size_t h = H; h-- > 0;) {
        const std::span<const double> v_next(values.V.data() + (h + 1) * S, S);
        const double* var_next = out.Vvar.data() + (h + 1) * S;
        for (std::size_t s = 0; s < S; ++s) {
            for (std::size_t a = 0; a < A; ++a) {
                const auto row = model.row(h, s, a);
                double qv = variance(row, v_next);
                for (std::size_t n = 0; n < S; ++n) qv += row[n] * var_next[n];
                out.Qvar[(h * S + s) * A + a] = qv;
            }
            const auto pi = policy.row(h, s);
            const std::span<const double> q(values.Q.data() + (h * S + s) * A, A);
            double vv = variance(pi, q);
            for (std::size_t a = 0; a < A; ++a) vv += pi[a] * out.Qvar[(h * S + s) * A + a];
            out.Vvar[h * S + s] = vv;
        }
    }
    return out;
}

}  // namespace maxent
