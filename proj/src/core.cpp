#include "maxent/core.hpp"

#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace maxent {

TabularMDP::TabularMDP(std::size_t num_states, std::size_t num_actions, std::size_t horizon,
                       std::size_t initial_state, std::vector<double> transitions)
    : S_(num_states), A_(num_actions), H_(horizon), s1_(initial_state),
      p_(std::move(transitions)) {
    if (S_ == 0 || A_ == 0 || H_ == 0)
        throw std::invalid_argument("TabularMDP: sizes must be positive");
    if (p_.size() != H_ * S_ * A_ * S_)
        throw std::invalid_argument("TabularMDP: transition tensor has wrong size");
}

MarkovPolicy::MarkovPolicy(std::size_t num_states, std::size_t num_actions,
                           std::size_t horizon, std::vector<double> probs)
    : S_(num_states), A_(num_actions), H_(horizon), probs_(std::move(probs)) {
    if (probs_.size() != H_ * S_ * A_)
        throw std::invalid_argument("MarkovPolicy: probability tensor has wrong size");
    for (std::size_t row = 0; row < H_ * S_; ++row) {
        double total = 0.0;
        for (std::size_t a = 0; a < A_; ++a) {
            const double x = probs_[row * A_ + a];
            if (!(x >= 0.0)) throw std::invalid_argument("MarkovPolicy: negative or NaN probability");
            total += x;
        }
        if (std::abs(total - 1.0) > 1e-12)
            throw std::invalid_argument("MarkovPolicy: row does not sum to 1");
    }
}

MarkovPolicy MarkovPolicy::uniform(std::size_t S, std::size_t A, std::size_t H) {
    return {S, A, H, std::vector<double>(H * S * A, 1.0 / static_cast<double>(A))};
}

MarkovPolicy MarkovPolicy::deterministic(std::size_t S, std::size_t A, std::size_t H,
                                         const std::vector<std::size_t>& actions) {
    if (actions.size() != H * S)
        throw std::invalid_argument("MarkovPolicy::deterministic: need H*S actions");
    std::vector<double> probs(H * S * A, 0.0);
    for (std::size_t i = 0; i < H * S; ++i) {
        if (actions[i] >= A) throw std::invalid_argument("action index out of range");
        probs[i * A + actions[i]] = 1.0;
    }
    return {S, A, H, std::move(probs)};
}

MixturePolicy::MixturePolicy(std::vector<MarkovPolicy> components)
    : components_(std::move(components)) {
    if (components_.empty()) throw std::invalid_argument("MixturePolicy: no components");
    for (const auto& c : components_) {
        if (c.num_states() != components_[0].num_states() ||
            c.num_actions() != components_[0].num_actions() ||
            c.horizon() != components_[0].horizon())
            throw std::invalid_argument("MixturePolicy: component shapes differ");
    }
}

void MixturePolicy::add(MarkovPolicy component) {
    if (!components_.empty()) {
        const auto& c0 = components_.front();
        if (component.num_states() != c0.num_states() ||
            component.num_actions() != c0.num_actions() || component.horizon() != c0.horizon())
            throw std::invalid_argument("MixturePolicy: component shapes differ");
    }
    components_.push_back(std::move(component));
}

double VisitationProfile::state_mass(std::size_t h, std::size_t s) const {
    double m = 0.0;
    for (std::size_t a = 0; a < num_actions; ++a) m += at(h, s, a);
    return m;
}

CountTables::CountTables(std::size_t S, std::size_t A, std::size_t H)
    : S_(S), A_(A), H_(H), visits_(H * S * A, 0), to_(H * S * A * S, 0) {}

void CountTables::record(const Trajectory& traj) {
    if (traj.actions.size() != H_ || traj.states.size() != H_ + 1)
        throw std::invalid_argument("CountTables::record: trajectory length mismatch");
    for (std::size_t h = 0; h < H_; ++h) {
        const std::size_t s = traj.states[h], a = traj.actions[h], next = traj.states[h + 1];
        if (s >= S_ || a >= A_ || next >= S_)
            throw std::invalid_argument("CountTables::record: index out of range");
        ++visits_[(h * S_ + s) * A_ + a];
        ++to_[((h * S_ + s) * A_ + a) * S_ + next];
    }
    ++episodes_;
}

void CountTables::record_shared(const Trajectory& traj) {
    if (traj.actions.size() != H_ || traj.states.size() != H_ + 1)
        throw std::invalid_argument("CountTables::record_shared: trajectory length mismatch");
    for (std::size_t h = 0; h < H_; ++h) {
        const std::size_t s = traj.states[h], a = traj.actions[h], next = traj.states[h + 1];
        if (s >= S_ || a >= A_ || next >= S_)
            throw std::invalid_argument("CountTables::record_shared: index out of range");
        for (std::size_t k = 0; k < H_; ++k) {
            ++visits_[(k * S_ + s) * A_ + a];
            ++to_[((k * S_ + s) * A_ + a) * S_ + next];
        }
    }
    ++episodes_;
}

CountTables CountTables::aggregated_over_steps() const {
    CountTables out(S_, A_, H_);
    out.episodes_ = episodes_;
    const std::size_t sa = S_ * A_;
    for (std::size_t h = 0; h < H_; ++h) {
        for (std::size_t i = 0; i < sa; ++i) {
            const auto v = visits_[h * sa + i];
            for (std::size_t k = 0; k < H_; ++k) out.visits_[k * sa + i] += v;
            for (std::size_t n = 0; n < S_; ++n) {
                const auto c = to_[(h * sa + i) * S_ + n];
                for (std::size_t k = 0; k < H_; ++k) out.to_[(k * sa + i) * S_ + n] += c;
            }
        }
    }
    return out;
}

VisitationProfile CountTables::empirical_profile() const {
    VisitationProfile d(S_, A_, H_);
    if (episodes_ == 0) return d;
    const double inv = 1.0 / static_cast<double>(episodes_);
    for (std::size_t i = 0; i < visits_.size(); ++i)
        d.dist[i] = static_cast<double>(visits_[i]) * inv;
    return d;
}

double DiagnosticsLog::Record::get(const std::string& name) const {
    for (const auto& [k, v] : metrics)
        if (k == name) return v;
    return std::numeric_limits<double>::quiet_NaN();
}

void DiagnosticsLog::add(std::size_t episode, const std::string& name, double value) {
    if (!records_.empty() && episode < records_.back().episode)
        throw std::invalid_argument("DiagnosticsLog: episode indices must increase");
    if (records_.empty() || records_.back().episode != episode)
        records_.push_back(Record{episode, {}});
    records_.back().metrics.emplace_back(name, value);
}

std::vector<double> DiagnosticsLog::series(const std::string& name) const {
    std::vector<double> out;
    out.reserve(records_.size());
    for (const auto& r : records_) {
        const double v = r.get(name);
        if (!std::isnan(v)) out.push_back(v);
    }
    return out;
}

ValidationReport validate_mdp(const TabularMDP& mdp) {
    ValidationReport report;
    const std::size_t S = mdp.num_states(), A = mdp.num_actions(), H = mdp.horizon();
    auto fail = [&](std::string msg) {
        report.ok = false;
        report.violations.push_back(std::move(msg));
    };
    if (mdp.initial_state() >= S) {
        std::ostringstream os;
        os << "initial state " << mdp.initial_state() << " out of range (S=" << S << ")";
        fail(os.str());
    }
    for (std::size_t h = 0; h < H; ++h)
        for (std::size_t s = 0; s < S; ++s)
            for (std::size_t a = 0; a < A; ++a) {
                double total = 0.0;
                for (std::size_t n = 0; n < S; ++n) {
                    const double p = mdp.prob(h, s, a, n);
                    if (!(p >= 0.0) || !std::isfinite(p)) {
                        std::ostringstream os;
                        os << "invalid probability " << p << " at (h=" << h << ",s=" << s
                           << ",a=" << a << ",s'=" << n << ")";
                        fail(os.str());
                    }
                    total += p;
                }
                if (std::abs(total - 1.0) > 1e-12) {
                    std::ostringstream os;
                    os.precision(17);
                    os << "row (h=" << h << ",s=" << s << ",a=" << a << ") sums to " << total;
                    fail(os.str());
                }
            }
    return report;
}

void require_valid(const TabularMDP& mdp) {
    auto report = validate_mdp(mdp);
    if (!report.ok) throw std::invalid_argument("invalid MDP: " + report.violations.front());
}

double entropy(std::span<const double> p) {
    double h = 0.0;
    for (double x : p)
        if (x > 0.0) h -= x * std::log(x);
    return h;
}

double kl_divergence(std::span<const double> p, std::span<const double> q) {
    if (p.size() != q.size()) throw std::invalid_argument("kl_divergence: size mismatch");
    double kl = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (p[i] <= 0.0) continue;
        if (q[i] <= 0.0) return std::numeric_limits<double>::infinity();
        kl += p[i] * std::log(p[i] / q[i]);
    }
    return kl;
}

VisitationProfile exact_visitation(const TabularMDP& mdp, const MarkovPolicy& policy) {
    if (!policy.matches(mdp)) throw std::invalid_argument("exact_visitation: shape mismatch");
    const std::size_t S = mdp.num_states(), A = mdp.num_actions(), H = mdp.horizon();
    VisitationProfile d(S, A, H);
    std::vector<double> state(S, 0.0), next(S, 0.0);
    state[mdp.initial_state()] = 1.0;
    for (std::size_t h = 0; h < H; ++h) {
        std::fill(next.begin(), next.end(), 0.0);
        for (std::size_t s = 0; s < S; ++s) {
            if (state[s] == 0.0) continue;
            for (std::size_t a = 0; a < A; ++a) {
                const double m = state[s] * policy.prob(h, s, a);
                d.at(h, s, a) = m;
                if (m == 0.0) continue;
                const auto row = mdp.row(h, s, a);
                for (std::size_t n = 0; n < S; ++n) next[n] += m * row[n];
            }
        }
        state.swap(next);
    }
    return d;
}

VisitationProfile exact_visitation(const TabularMDP& mdp, const MixturePolicy& policy) {
    if (policy.empty()) throw std::invalid_argument("exact_visitation: empty mixture");
    VisitationProfile avg(mdp.num_states(), mdp.num_actions(), mdp.horizon());
    for (const auto& c : policy.components()) {
        const auto d = exact_visitation(mdp, c);
        for (std::size_t i = 0; i < avg.dist.size(); ++i) avg.dist[i] += d.dist[i];
    }
    const double inv = 1.0 / static_cast<double>(policy.size());
    for (double& x : avg.dist) x *= inv;
    return avg;
}

double visitation_entropy(const VisitationProfile& profile) {
    double ve = 0.0;
    for (std::size_t h = 0; h < profile.horizon; ++h) ve += entropy(profile.step(h));
    return ve;
}

double flow_residual(const TabularMDP& mdp, const VisitationProfile& d) {
    const std::size_t S = mdp.num_states(), A = mdp.num_actions(), H = mdp.horizon();
    double worst = 0.0;
    for (std::size_t s = 0; s < S; ++s) {
        const double target = s == mdp.initial_state() ? 1.0 : 0.0;
        worst = std::max(worst, std::abs(d.state_mass(0, s) - target));
    }
    std::vector<double> inflow(S);
    for (std::size_t h = 0; h + 1 < H; ++h) {
        std::fill(inflow.begin(), inflow.end(), 0.0);
        for (std::size_t s = 0; s < S; ++s)
            for (std::size_t a = 0; a < A; ++a) {
                const double m = d.at(h, s, a);
                if (m == 0.0) continue;
                const auto row = mdp.row(h, s, a);
                for (std::size_t n = 0; n < S; ++n) inflow[n] += m * row[n];
            }
        for (std::size_t s = 0; s < S; ++s)
            worst = std::max(worst, std::abs(d.state_mass(h + 1, s) - inflow[s]));
    }
    return worst;
}

double trajectory_entropy(const TabularMDP& mdp, const MarkovPolicy& policy) {
    if (!policy.matches(mdp))
        throw std::invalid_argument("trajectory_entropy: shape mismatch");
    const std::size_t S = mdp.num_states(), A = mdp.num_actions(), H = mdp.horizon();
    std::vector<double> value(S, 0.0), prev(S, 0.0);
    for (std::size_t h = H; h-- > 0;) {
        for (std::size_t s = 0; s < S; ++s) {
            const auto pi = policy.row(h, s);
            double v = entropy(pi);
            for (std::size_t a = 0; a < A; ++a) {
                if (pi[a] == 0.0) continue;
                double q = 0.0;
                if (h + 1 < H) {
                    const auto row = mdp.row(h, s, a);
                    q = entropy(row);
                    for (std::size_t n = 0; n < S; ++n) q += row[n] * value[n];
                }
                v += pi[a] * q;
            }
            prev[s] = v;
        }
        value.swap(prev);
    }
    return value[mdp.initial_state()];
}

namespace {

Trajectory rollout(const TabularMDP& mdp, const MarkovPolicy& policy, Rng& rng) {
    const std::size_t H = mdp.horizon();
    Trajectory traj;
    traj.states.reserve(H + 1);
    traj.actions.reserve(H);
    std::size_t s = mdp.initial_state();
    traj.states.push_back(s);
    for (std::size_t h = 0; h < H; ++h) {
        const std::size_t a = rng.categorical(policy.row(h, s));
        s = rng.categorical(mdp.row(h, s, a));
        traj.actions.push_back(a);
        traj.states.push_back(s);
    }
    return traj;
}

}  // namespace

Trajectory sample_trajectory(const TabularMDP& mdp, const MarkovPolicy& policy, Rng& rng) {
    if (!policy.matches(mdp)) throw std::invalid_argument("sample_trajectory: shape mismatch");
    return rollout(mdp, policy, rng);
}

Trajectory sample_trajectory(const TabularMDP& mdp, const MixturePolicy& policy, Rng& rng) {
    if (policy.empty()) throw std::invalid_argument("sample_trajectory: empty mixture");
    const auto& component = policy.component(rng.below(policy.size()));
    return sample_trajectory(mdp, component, rng);
}

CountTables update_counts(CountTables counts, const Trajectory& traj) {
    counts.record(traj);
    return counts;
}

EmpiricalModel empirical_model(const CountTables& counts, std::size_t initial_state) {
    const std::size_t S = counts.num_states(), A = counts.num_actions(),
                      H = counts.horizon();
    std::vector<double> p(H * S * A * S);
    const double uniform = 1.0 / static_cast<double>(S);
    for (std::size_t h = 0; h < H; ++h)
        for (std::size_t s = 0; s < S; ++s)
            for (std::size_t a = 0; a < A; ++a) {
                double* out = p.data() + ((h * S + s) * A + a) * S;
                const auto n = counts.visits(h, s, a);
                if (n == 0) {
                    std::fill(out, out + S, uniform);
                    continue;
                }
                const auto row = counts.transition_row(h, s, a);
                const double inv = 1.0 / static_cast<double>(n);
                for (std::size_t k = 0; k < S; ++k) out[k] = static_cast<double>(row[k]) * inv;
            }
    return EmpiricalModel(S, A, H, initial_state, std::move(p));
}

}  // namespace maxent
