#include "maxent/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "maxent/environments.hpp"
#include "maxent/rf_explore.hpp"
#include "maxent/soft_planning.hpp"

namespace maxent {

namespace fs = std::filesystem;

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream in(s);
    while (std::getline(in, cur, sep)) out.push_back(trim(cur));
    if (!s.empty() && s.back() == sep) out.emplace_back();
    return out;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// Typed access to one section; remembers which keys were read so that
// leftovers can be reported as unknown.
class SectionReader {
public:
    SectionReader(std::string name, const std::map<std::string, std::string>& entries)
        : name_(std::move(name)), entries_(entries) {}

    bool has(const std::string& key) const { return entries_.count(key) > 0; }

    std::string text(const std::string& key, const std::string& fallback) {
        used_.insert(key);
        auto it = entries_.find(key);
        return it == entries_.end() ? fallback : it->second;
    }

    std::uint64_t count(const std::string& key, std::uint64_t fallback) {
        if (!has(key)) {
            used_.insert(key);
            return fallback;
        }
        const auto v = text(key, "");
        std::size_t pos = 0;
        unsigned long long x = 0;
        try {
            if (!v.empty() && v[0] == '-') throw std::invalid_argument("negative");
            x = std::stoull(v, &pos);
        } catch (const std::exception&) {
            pos = 0;
        }
        if (pos == 0 || pos != v.size())
            throw ConfigError(where(key) + ": expected a non-negative integer, got '" + v + "'");
        return x;
    }

    double real(const std::string& key, double fallback) {
        if (!has(key)) {
            used_.insert(key);
            return fallback;
        }
        const auto v = text(key, "");
        std::size_t pos = 0;
        double x = 0.0;
        try {
            x = std::stod(v, &pos);
        } catch (const std::exception&) {
            pos = 0;
        }
        if (pos == 0 || pos != v.size() || !std::isfinite(x))
            throw ConfigError(where(key) + ": expected a number, got '" + v + "'");
        return x;
    }

    bool flag(const std::string& key, bool fallback) {
        if (!has(key)) {
            used_.insert(key);
            return fallback;
        }
        const auto v = text(key, "");
        if (v == "true" || v == "1" || v == "yes") return true;
        if (v == "false" || v == "0" || v == "no") return false;
        throw ConfigError(where(key) + ": expected true or false, got '" + v + "'");
    }

    void finish() const {
        for (const auto& [k, v] : entries_)
            if (!used_.count(k)) throw ConfigError("unknown key '" + k + "' in [" + name_ + "]");
    }

    std::string where(const std::string& key) const { return "[" + name_ + "] " + key; }

private:
    std::string name_;
    const std::map<std::string, std::string>& entries_;
    std::set<std::string> used_;
};

std::vector<std::uint64_t> parse_seeds(const std::string& text) {
    std::vector<std::uint64_t> out;
    for (const auto& item : split(text, ',')) {
        if (item.empty()) continue;
        const auto dash = item.find('-');
        try {
            std::size_t pos = 0;
            if (dash == std::string::npos) {
                out.push_back(std::stoull(item, &pos));
                if (pos != item.size()) throw std::invalid_argument(item);
                continue;
            }
            const auto lo_text = trim(item.substr(0, dash)), hi_text = trim(item.substr(dash + 1));
            const auto lo = std::stoull(lo_text, &pos);
            if (pos != lo_text.size()) throw std::invalid_argument(item);
            const auto hi = std::stoull(hi_text, &pos);
            if (pos != hi_text.size() || hi < lo) throw std::invalid_argument(item);
            for (auto s = lo; s <= hi; ++s) out.push_back(s);
        } catch (const std::exception&) {
            throw ConfigError("[experiment] seeds: cannot parse '" + item + "'");
        }
    }
    return out;
}

std::uint64_t name_hash(const std::string& s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::vector<double> state_histogram(const CountTables& counts) {
    std::vector<double> x(counts.num_states(), 0.0);
    for (std::size_t h = 0; h < counts.horizon(); ++h)
        for (std::size_t s = 0; s < counts.num_states(); ++s)
            for (std::size_t a = 0; a < counts.num_actions(); ++a)
                x[s] += static_cast<double>(counts.visits(h, s, a));
    return x;
}

CountTables sample_counts(const TabularMDP& mdp, const MarkovPolicy& policy, std::size_t episodes,
                          std::uint64_t seed) {
    CountTables counts(mdp.num_states(), mdp.num_actions(), mdp.horizon());
    Rng rng(seed);
    for (std::size_t k = 0; k < episodes; ++k) counts.record(sample_trajectory(mdp, policy, rng));
    return counts;
}

void add_log_curves(ReplicateResult& rep, const DiagnosticsLog& log, std::size_t every) {
    const auto& records = log.records();
    for (std::size_t i = 0; i < records.size(); ++i) {
        const auto& r = records[i];
        if (r.episode % every != 0 && i + 1 != records.size()) continue;
        for (const auto& [name, value] : r.metrics) rep.curves.push_back({r.episode, name, value});
    }
}

}  // namespace

const std::map<std::string, std::string>& IniDocument::section(const std::string& name) const {
    static const std::map<std::string, std::string> empty;
    auto it = sections_.find(name);
    return it == sections_.end() ? empty : it->second;
}

IniDocument IniDocument::parse(const std::string& text) {
    IniDocument doc;
    std::istringstream in(text);
    std::string line, current;
    std::size_t number = 0;
    while (std::getline(in, line)) {
        ++number;
        const auto t = trim(line);
        if (t.empty() || t[0] == '#' || t[0] == ';') continue;
        if (t.front() == '[') {
            if (t.back() != ']' || t.size() < 3)
                throw ConfigError("line " + std::to_string(number) + ": malformed section header");
            current = trim(t.substr(1, t.size() - 2));
            if (doc.sections_.count(current))
                throw ConfigError("line " + std::to_string(number) + ": duplicate section [" +
                                  current + "]");
            doc.sections_[current];
            doc.order_.push_back(current);
            continue;
        }
        const auto eq = t.find('=');
        if (eq == std::string::npos)
            throw ConfigError("line " + std::to_string(number) + ": expected key = value");
        if (current.empty())
            throw ConfigError("line " + std::to_string(number) + ": key outside of a section");
        const auto key = trim(t.substr(0, eq));
        auto value = trim(t.substr(eq + 1));
        if (const auto hash = value.find(" #"); hash != std::string::npos) value = trim(value.substr(0, hash));
        if (key.empty()) throw ConfigError("line " + std::to_string(number) + ": empty key");
        auto& sec = doc.sections_[current];
        if (sec.count(key))
            throw ConfigError("line " + std::to_string(number) + ": duplicate key '" + key + "'");
        sec[key] = value;
    }
    return doc;
}

EnvironmentSpec parse_environment_spec(const std::string& text) {
    EnvironmentSpec spec;
    const auto colon = text.find(':');
    spec.name = trim(text.substr(0, colon));
    if (colon != std::string::npos) {
        for (const auto& item : split(text.substr(colon + 1), ',')) {
            if (item.empty()) continue;
            const auto eq = item.find('=');
            if (eq == std::string::npos) throw ConfigError("environment: expected key=value in '" + item + "'");
            spec.params[trim(item.substr(0, eq))] = trim(item.substr(eq + 1));
        }
    }
    return spec;
}

TabularMDP make_environment(const EnvironmentSpec& spec) {
    SectionReader r("environment", spec.params);
    try {
        if (spec.name == "double-chain") {
            const auto length = r.count("length", 31);
            const auto slip = r.real("slip", 0.1);
            const auto horizon = r.count("horizon", 20);
            const auto resampling = r.flag("resampling", false);
            r.finish();
            return double_chain(length, slip, horizon, resampling);
        }
        if (spec.name == "grid-world") {
            const auto width = r.count("width", 21);
            const auto height = r.count("height", 21);
            const auto slip = r.real("slip", 0.05);
            const auto horizon = r.count("horizon", 20);
            r.finish();
            return grid_world(width, height, slip, horizon);
        }
        if (spec.name == "random") {
            const auto S = r.count("states", 3), A = r.count("actions", 2), H = r.count("horizon", 3);
            const auto seed = r.count("seed", 0);
            const auto conc = r.real("concentration", 1.0);
            r.finish();
            return random_mdp(S, A, H, seed, conc);
        }
        if (spec.name == "ring") {
            const auto S = r.count("states", 3), A = r.count("actions", 2), H = r.count("horizon", 3);
            r.finish();
            if (S == 0 || A == 0 || H == 0) throw ConfigError("[environment] ring: sizes must be >= 1");
            return deterministic_ring(S, A, H);
        }
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("[environment] ") + e.what());
    }
    throw ConfigError("unknown environment '" + spec.name + "'");
}

const AlgorithmSettings& ExperimentConfig::settings_for(const std::string& algo) const {
    static const AlgorithmSettings defaults;
    auto it = settings.find(algo);
    return it == settings.end() ? defaults : it->second;
}

ExperimentConfig parse_experiment(const std::string& text) {
    const auto doc = IniDocument::parse(text);
    const auto& known = registered_algorithms();
    for (const auto& name : doc.section_names())
        if (name != "experiment" && name != "environment" &&
            std::find(known.begin(), known.end(), name) == known.end())
            throw ConfigError("unknown section [" + name + "]");
    if (!doc.has_section("experiment")) throw ConfigError("missing [experiment] section");
    if (!doc.has_section("environment")) throw ConfigError("missing [environment] section");

    ExperimentConfig cfg;
    SectionReader ex("experiment", doc.section("experiment"));
    cfg.name = ex.text("name", "experiment");
    for (const auto& a : split(ex.text("algorithms", ""), ','))
        if (!a.empty()) cfg.algorithms.push_back(a);
    cfg.budget = ex.count("budget", 0);
    cfg.seeds = parse_seeds(ex.text("seeds", ""));
    cfg.output = ex.text("output", "results");
    cfg.workers = ex.count("workers", 1);
    const auto agg = ex.text("aggregation", "per-step");
    if (agg == "per-step")
        cfg.aggregation = Aggregation::PerStep;
    else if (agg == "stage-homogeneous")
        cfg.aggregation = Aggregation::StageHomogeneous;
    else
        throw ConfigError("[experiment] aggregation: expected per-step or stage-homogeneous");
    cfg.curve_every = ex.count("curve_every", 1);
    cfg.save_policies = ex.flag("save_policies", false);
    ex.finish();

    const auto& env_section = doc.section("environment");
    cfg.environment.name = env_section.count("name") ? env_section.at("name") : "";
    for (const auto& [k, v] : env_section)
        if (k != "name") cfg.environment.params[k] = v;

    for (const auto& algo : known) {
        AlgorithmSettings s;
        s.entgame.aggregation = cfg.aggregation;
        s.ucbvi.shared_counts = cfg.aggregation == Aggregation::StageHomogeneous;
        s.ucbvi.max_episodes = 0;  // 0: the whole budget
        SectionReader r(algo, doc.section(algo));
        if (algo == "entgame" || algo == "reg-entgame") {
            s.entgame.prior = r.count("prior", 1);
            s.entgame.delta = r.real("delta", 0.1);
            s.entgame.bonus_scale = r.real("bonus_scale", 1.0);
            if (algo == "reg-entgame") {
                s.entgame.variant = EntGameVariant::Regularized;
                s.entgame.exploration_episodes = r.count("exploration_episodes", 20);
                s.entgame.model_episodes = r.count("model_episodes", 1000);
            }
        } else if (algo == "ucbvi-ent") {
            s.ucbvi.epsilon = r.real("epsilon", 0.5);
            s.ucbvi.options.delta = r.real("delta", 0.1);
            s.ucbvi.options.bonus_scale = r.real("bonus_scale", 1.0);
            s.ucbvi.max_episodes = r.count("max_episodes", 0);
            s.ucbvi.log_every = r.count("log_every", 1);
            s.ucbvi_lambda = r.real("lambda", 1.0);
            s.ucbvi_kappa = r.real("kappa", 1.0);
        } else if (algo == "rf-explore") {
            s.rf_exploration_episodes = r.count("exploration_episodes", 100);
            s.rf_model_episodes = r.count("model_episodes", 1000);
            s.rf_delta = r.real("delta", 0.1);
        } else if (algo == "optimal-mvee") {
            s.frank_wolfe.iterations = r.count("iterations", 1000);
            s.frank_wolfe.smoothing = r.real("smoothing", 0.0);
            const auto obj = r.text("objective", "averaged");
            if (obj == "averaged")
                s.frank_wolfe.objective = MveeObjective::Averaged;
            else if (obj == "per-step")
                s.frank_wolfe.objective = MveeObjective::PerStep;
            else
                throw ConfigError("[optimal-mvee] objective: expected averaged or per-step");
        }
        r.finish();
        cfg.settings[algo] = s;
    }
    validate(cfg);
    return cfg;
}

ExperimentConfig load_experiment(const std::string& path) {
    std::string text;
    try {
        text = read_file(path);
    } catch (const std::runtime_error& e) {
        throw ConfigError(e.what());
    }
    return parse_experiment(text);
}

void validate(const ExperimentConfig& cfg) {
    if (cfg.algorithms.empty()) throw ConfigError("[experiment] algorithms: at least one required");
    const auto& known = registered_algorithms();
    std::set<std::string> seen;
    for (const auto& a : cfg.algorithms) {
        if (std::find(known.begin(), known.end(), a) == known.end())
            throw ConfigError("unknown algorithm '" + a + "'");
        if (!seen.insert(a).second) throw ConfigError("algorithm '" + a + "' listed twice");
    }
    if (cfg.seeds.empty()) throw ConfigError("[experiment] seeds: at least one seed required");
    if (std::set<std::uint64_t>(cfg.seeds.begin(), cfg.seeds.end()).size() != cfg.seeds.size())
        throw ConfigError("[experiment] seeds: duplicate seed");
    if (cfg.budget == 0) throw ConfigError("[experiment] budget must be > 0");
    if (cfg.workers == 0) throw ConfigError("[experiment] workers must be >= 1");
    if (cfg.curve_every == 0) throw ConfigError("[experiment] curve_every must be >= 1");
    if (cfg.output.empty()) throw ConfigError("[experiment] output must not be empty");
    const auto mdp = make_environment(cfg.environment);
    const std::size_t H = mdp.horizon();
    const std::uint64_t episodes = cfg.budget / H;
    if (episodes == 0) throw ConfigError("[experiment] budget is smaller than one episode");
    for (const auto& a : cfg.algorithms) {
        const auto& s = cfg.settings_for(a);
        try {
            if (a == "entgame" || a == "reg-entgame") {
                auto c = s.entgame;
                c.episodes = 1;
                c.check();
            }
        } catch (const std::invalid_argument& e) {
            throw ConfigError("[" + a + "] " + e.what());
        }
        if (a == "reg-entgame") {
            const auto phase = mdp.num_states() * H * s.entgame.exploration_episodes +
                               s.entgame.model_episodes;
            if (phase >= episodes)
                throw ConfigError("[reg-entgame] exploration and model episodes exhaust the budget");
        }
        if (a == "ucbvi-ent") {
            if (!(s.ucbvi.epsilon > 0.0)) throw ConfigError("[ucbvi-ent] epsilon must be > 0");
            if (!(s.ucbvi.options.delta > 0.0 && s.ucbvi.options.delta < 1.0))
                throw ConfigError("[ucbvi-ent] delta must lie in (0, 1)");
            if (!(s.ucbvi.options.bonus_scale >= 0.0)) throw ConfigError("[ucbvi-ent] bonus_scale must be >= 0");
            if (!(s.ucbvi_lambda > 0.0) || !(s.ucbvi_kappa >= 0.0))
                throw ConfigError("[ucbvi-ent] lambda must be > 0 and kappa >= 0");
        }
        if (a == "rf-explore") {
            if (s.rf_exploration_episodes == 0 || s.rf_model_episodes == 0)
                throw ConfigError("[rf-explore] budgets must be >= 1");
            if (!(s.rf_delta > 0.0 && s.rf_delta < 1.0)) throw ConfigError("[rf-explore] delta must lie in (0, 1)");
        }
        if (a == "optimal-mvee") {
            if (s.frank_wolfe.iterations == 0) throw ConfigError("[optimal-mvee] iterations must be >= 1");
            if (s.frank_wolfe.smoothing >= std::exp(-1.0))
                throw ConfigError("[optimal-mvee] smoothing must be < 1/e");
        }
    }
}

ReplicateResult run_replicate(const ExperimentConfig& cfg, const std::string& algo,
                              std::uint64_t seed) {
    const auto mdp = make_environment(cfg.environment);
    const std::size_t S = mdp.num_states(), A = mdp.num_actions(), H = mdp.horizon();
    const std::size_t episodes = cfg.budget / H;
    const auto& st = cfg.settings_for(algo);
    const std::uint64_t run_seed = derive_seed(seed, name_hash(algo));
    const std::uint64_t count_seed = derive_seed(run_seed, 99);
    const auto mtee = RegularizedSpec::mtee(S, A, H);

    ReplicateResult rep;
    rep.algo = algo;
    rep.seed = seed;
    std::uint64_t env_steps = 0;

    if (algo == "random" || algo == "optimal-mtee" || algo == "optimal-mvee") {
        MarkovPolicy policy;
        if (algo == "random") {
            policy = MarkovPolicy::uniform(S, A, H);
        } else if (algo == "optimal-mtee") {
            policy = solve_regularized(mdp, mtee).policy;
        } else {
            const auto fw = optimal_mvee(mdp, st.frank_wolfe);
            for (std::size_t k = 0; k < fw.trace.size(); ++k)
                if ((k + 1) % cfg.curve_every == 0 || k + 1 == fw.trace.size())
                    rep.curves.push_back({k + 1, "fw_objective", fw.trace[k]});
            rep.metrics.emplace_back("fw_duality_gap", fw.duality_gap);
            policy = fw.policy;
        }
        rep.counts = sample_counts(mdp, policy, episodes, count_seed);
        env_steps = episodes * H;
        rep.policy.add(std::move(policy));
    } else if (algo == "entgame" || algo == "reg-entgame") {
        EnvironmentHandle env(mdp);
        auto c = st.entgame;
        c.aggregation = cfg.aggregation;
        c.episodes = episodes;
        if (algo == "reg-entgame")
            c.episodes = episodes - (S * H * c.exploration_episodes + c.model_episodes);
        auto res = run_entgame(env, c, run_seed);
        add_log_curves(rep, res.log, cfg.curve_every);
        rep.counts = std::move(res.counts);
        env_steps = res.env_steps;
        if (algo == "reg-entgame")
            rep.metrics.emplace_back("exploration_steps",
                                     static_cast<double>(res.exploration_episodes * H));
        rep.policy = std::move(res.mixture);
    } else if (algo == "ucbvi-ent") {
        EnvironmentHandle env(mdp);
        auto c = st.ucbvi;
        if (c.max_episodes == 0) c.max_episodes = episodes;
        c.shared_counts = cfg.aggregation == Aggregation::StageHomogeneous;
        auto spec = mtee;
        spec.lambda = st.ucbvi_lambda;
        spec.kappa = st.ucbvi_kappa;
        auto res = run_ucbvi_ent(env, spec, c, run_seed);
        add_log_curves(rep, res.log, cfg.curve_every);
        rep.metrics.emplace_back("stopping_episode", static_cast<double>(res.stopping_episode));
        rep.metrics.emplace_back("converged", res.converged ? 1.0 : 0.0);
        rep.metrics.emplace_back("final_gap", res.log.records().back().get("gap"));
        rep.metrics.emplace_back("true_gap", true_gap(mdp, spec, res.policy));
        rep.metrics.emplace_back("learning_steps", static_cast<double>(res.env_steps));
        rep.counts = sample_counts(mdp, res.policy, episodes, count_seed);
        env_steps = res.env_steps + episodes * H;
        rep.policy.add(std::move(res.policy));
    } else if (algo == "rf-explore") {
        EnvironmentHandle env(mdp);
        auto res = rf_explore_ent(env, {mtee}, st.rf_exploration_episodes, st.rf_model_episodes,
                                  st.rf_delta, run_seed);
        rep.metrics.emplace_back("phase1_steps", static_cast<double>(res.accounting.phase1_steps));
        rep.metrics.emplace_back("phase2_steps", static_cast<double>(res.accounting.phase2_steps));
        rep.metrics.emplace_back("true_gap", true_gap(mdp, mtee, res.policies[0]));
        rep.counts = sample_counts(mdp, res.policies[0], episodes, count_seed);
        env_steps = res.accounting.phase1_steps + res.accounting.phase2_steps + episodes * H;
        rep.policy.add(std::move(res.policies[0]));
    } else {
        throw ConfigError("unknown algorithm '" + algo + "'");
    }

    const auto hist = state_histogram(rep.counts);
    double total = 0.0;
    for (double x : hist) total += x;
    std::vector<double> freq(hist);
    for (double& x : freq) x /= total;
    rep.metrics.emplace_back("env_steps", static_cast<double>(env_steps));
    rep.metrics.emplace_back("counted_episodes", static_cast<double>(rep.counts.episodes()));
    rep.metrics.emplace_back("state_entropy", entropy(freq));
    rep.metrics.emplace_back("min_state_visits", *std::min_element(hist.begin(), hist.end()));
    const auto d = exact_visitation(mdp, rep.policy);
    rep.metrics.emplace_back("exact_ve", visitation_entropy(d));
    rep.metrics.emplace_back("exact_averaged_entropy", mvee_objective(d, MveeObjective::Averaged));
    return rep;
}

std::string format_double(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

void write_file_atomic(const std::string& path, const std::string& contents) {
    const fs::path target(path);
    if (target.has_parent_path()) {
        std::error_code ec;
        fs::create_directories(target.parent_path(), ec);
        if (ec) throw std::runtime_error("cannot create directory " + target.parent_path().string());
    }
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write " + tmp);
        out << contents;
        if (!out) throw std::runtime_error("write failed for " + tmp);
    }
    std::error_code ec;
    fs::rename(tmp, target, ec);
    if (ec) throw std::runtime_error("cannot rename " + tmp + " to " + path + ": " + ec.message());
}

namespace {

const char* kCountsHeader = "seed,algo,env,h,state,visits\n";
const char* kCurvesHeader = "seed,algo,episode,metric,value\n";
const char* kSummaryHeader = "algo,metric,mean,ci_lo,ci_hi,n_seeds\n";
const char* kMetricsHeader = "seed,algo,metric,value\n";

std::string counts_rows(const ExperimentConfig& cfg, const ReplicateResult& rep) {
    std::ostringstream out;
    const auto& c = rep.counts;
    const std::string prefix = std::to_string(rep.seed) + "," + rep.algo + "," + cfg.environment.name + ",";
    if (cfg.aggregation == Aggregation::StageHomogeneous) {
        const auto hist = state_histogram(c);
        for (std::size_t s = 0; s < hist.size(); ++s)
            out << prefix << "all," << s << "," << static_cast<std::uint64_t>(hist[s]) << "\n";
        return out.str();
    }
    for (std::size_t h = 0; h < c.horizon(); ++h)
        for (std::size_t s = 0; s < c.num_states(); ++s) {
            std::uint64_t v = 0;
            for (std::size_t a = 0; a < c.num_actions(); ++a) v += c.visits(h, s, a);
            out << prefix << h << "," << s << "," << v << "\n";
        }
    return out.str();
}

std::string curve_rows(const ReplicateResult& rep) {
    std::ostringstream out;
    for (const auto& p : rep.curves)
        out << rep.seed << "," << rep.algo << "," << p.episode << "," << p.metric << ","
            << format_double(p.value) << "\n";
    return out.str();
}

std::string metric_rows(const ReplicateResult& rep) {
    std::ostringstream out;
    for (const auto& [name, value] : rep.metrics)
        out << rep.seed << "," << rep.algo << "," << name << "," << format_double(value) << "\n";
    return out.str();
}

struct Interval {
    double mean = 0.0;
    std::optional<double> lo, hi;
};

Interval normal_interval(const std::vector<double>& xs) {
    Interval iv;
    const double n = static_cast<double>(xs.size());
    for (double x : xs) iv.mean += x;
    iv.mean /= n;
    if (xs.size() < 2) return iv;
    double ss = 0.0;
    for (double x : xs) ss += (x - iv.mean) * (x - iv.mean);
    const double half = 1.959963984540054 * std::sqrt(ss / (n - 1.0)) / std::sqrt(n);
    iv.lo = iv.mean - half;
    iv.hi = iv.mean + half;
    return iv;
}

std::string interval_fields(const Interval& iv) {
    std::string out = format_double(iv.mean) + ",";
    if (iv.lo) out += format_double(*iv.lo);
    out += ",";
    if (iv.hi) out += format_double(*iv.hi);
    return out;
}

}  // namespace

ExperimentFiles run_experiment(const ExperimentConfig& cfg) {
    validate(cfg);
    struct Job {
        std::string algo;
        std::uint64_t seed;
        std::string counts, curves, metrics;
        std::vector<std::pair<std::string, double>> metric_values;
    };
    std::vector<Job> jobs;
    for (const auto& a : cfg.algorithms)
        for (auto s : cfg.seeds) jobs.push_back({a, s, {}, {}, {}, {}});

    const fs::path out_dir(cfg.output);
    const fs::path rep_dir = out_dir / "replicates";
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto worker = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= jobs.size()) return;
            {
                std::lock_guard<std::mutex> lock(failure_mutex);
                if (failure) return;
            }
            try {
                auto& job = jobs[i];
                auto rep = run_replicate(cfg, job.algo, job.seed);
                job.counts = counts_rows(cfg, rep);
                job.curves = curve_rows(rep);
                job.metrics = metric_rows(rep);
                job.metric_values = rep.metrics;
                const std::string stem =
                    (rep_dir / (job.algo + "_seed" + std::to_string(job.seed))).string();
                write_file_atomic(stem + ".counts.csv", kCountsHeader + job.counts);
                write_file_atomic(stem + ".curves.csv", kCurvesHeader + job.curves);
                write_file_atomic(stem + ".metrics.csv", kMetricsHeader + job.metrics);
                if (cfg.save_policies)
                    write_file_atomic(
                        (out_dir / "policies" / (job.algo + "_seed" + std::to_string(job.seed) + ".csv"))
                            .string(),
                        policy_to_csv(rep.policy));
            } catch (...) {
                std::lock_guard<std::mutex> lock(failure_mutex);
                if (!failure) failure = std::current_exception();
            }
        }
    };
    const std::size_t n_workers = std::min(cfg.workers, jobs.size());
    std::vector<std::thread> threads;
    for (std::size_t w = 1; w < n_workers; ++w) threads.emplace_back(worker);
    worker();
    for (auto& t : threads) t.join();
    if (failure) std::rethrow_exception(failure);

    std::string counts = kCountsHeader, curves = kCurvesHeader, summary = kSummaryHeader;
    for (const auto& j : jobs) {
        counts += j.counts;
        curves += j.curves;
    }
    for (const auto& algo : cfg.algorithms) {
        std::vector<std::string> order;
        std::map<std::string, std::vector<double>> values;
        for (const auto& j : jobs) {
            if (j.algo != algo) continue;
            for (const auto& [name, v] : j.metric_values) {
                if (!values.count(name)) order.push_back(name);
                values[name].push_back(v);
            }
        }
        for (const auto& name : order)
            summary += algo + "," + name + "," + interval_fields(normal_interval(values[name])) +
                       "," + std::to_string(values[name].size()) + "\n";
    }
    ExperimentFiles files{(out_dir / "counts.csv").string(), (out_dir / "curves.csv").string(),
                          (out_dir / "summary.csv").string()};
    write_file_atomic(files.counts, counts);
    write_file_atomic(files.curves, curves);
    write_file_atomic(files.summary, summary);
    return files;
}

std::string policy_to_csv(const MixturePolicy& policy) {
    std::string out = "component,h,state,action,probability\n";
    for (std::size_t c = 0; c < policy.size(); ++c) {
        const auto& p = policy.component(c);
        for (std::size_t h = 0; h < p.horizon(); ++h)
            for (std::size_t s = 0; s < p.num_states(); ++s)
                for (std::size_t a = 0; a < p.num_actions(); ++a)
                    out += std::to_string(c) + "," + std::to_string(h) + "," + std::to_string(s) +
                           "," + std::to_string(a) + "," + format_double(p.prob(h, s, a)) + "\n";
    }
    return out;
}

MixturePolicy policy_from_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line) || trim(line) != "component,h,state,action,probability")
        throw std::runtime_error("policy file: unexpected header");
    struct Entry {
        std::size_t c, h, s, a;
        double p;
    };
    std::vector<Entry> entries;
    std::size_t C = 0, H = 0, S = 0, A = 0, number = 1;
    while (std::getline(in, line)) {
        ++number;
        if (trim(line).empty()) continue;
        const auto f = split(line, ',');
        if (f.size() != 5) throw std::runtime_error("policy file line " + std::to_string(number) + ": expected 5 fields");
        try {
            Entry e{std::stoul(f[0]), std::stoul(f[1]), std::stoul(f[2]), std::stoul(f[3]), std::stod(f[4])};
            C = std::max(C, e.c + 1);
            H = std::max(H, e.h + 1);
            S = std::max(S, e.s + 1);
            A = std::max(A, e.a + 1);
            entries.push_back(e);
        } catch (const std::exception&) {
            throw std::runtime_error("policy file line " + std::to_string(number) + ": bad number");
        }
    }
    if (entries.size() != C * H * S * A) throw std::runtime_error("policy file: incomplete table");
    std::vector<std::vector<double>> probs(C, std::vector<double>(H * S * A, -1.0));
    for (const auto& e : entries) {
        double& slot = probs[e.c][(e.h * S + e.s) * A + e.a];
        if (slot >= 0.0) throw std::runtime_error("policy file: duplicate entry");
        slot = e.p;
    }
    MixturePolicy out;
    for (auto& p : probs) out.add(MarkovPolicy(S, A, H, std::move(p)));
    return out;
}

std::vector<std::pair<std::string, double>> eval_policy(const TabularMDP& mdp,
                                                        const MixturePolicy& policy,
                                                        const std::vector<std::string>& metrics) {
    if (policy.empty()) throw std::invalid_argument("eval_policy: empty policy");
    for (const auto& c : policy.components())
        if (!c.matches(mdp)) throw std::invalid_argument("eval_policy: policy/environment shape mismatch");
    const auto spec = RegularizedSpec::mtee(mdp.num_states(), mdp.num_actions(), mdp.horizon());
    auto single = [&](const std::string& m) -> const MarkovPolicy& {
        if (policy.size() != 1)
            throw std::invalid_argument("eval_policy: metric '" + m + "' needs a single Markov policy");
        return policy.component(0);
    };
    std::vector<std::pair<std::string, double>> out;
    std::optional<VisitationProfile> d;
    for (const auto& m : metrics) {
        if (m == "ve" || m == "averaged_entropy") {
            if (!d) d = exact_visitation(mdp, policy);
            out.emplace_back(m, m == "ve" ? visitation_entropy(*d)
                                          : mvee_objective(*d, MveeObjective::Averaged));
        } else if (m == "te") {
            out.emplace_back(m, trajectory_entropy(mdp, single(m)));
        } else if (m == "mtee_value") {
            out.emplace_back(m, evaluate_regularized(mdp, spec, single(m)).initial_value(mdp.initial_state()));
        } else if (m == "mtee_gap") {
            out.emplace_back(m, true_gap(mdp, spec, single(m)));
        } else {
            throw std::invalid_argument("eval_policy: unknown metric '" + m + "'");
        }
    }
    return out;
}

std::string export_figure_data(const std::string& results_dir, const std::string& figure,
                               const std::string& output_path) {
    if (figure != "figure1" && figure != "state-visits")
        throw ConfigError("unknown figure id '" + figure + "'");
    const fs::path in_path = fs::path(results_dir) / "counts.csv";
    if (!fs::exists(in_path)) throw std::runtime_error("missing input " + in_path.string());
    std::istringstream in(read_file(in_path.string()));
    std::string line;
    if (!std::getline(in, line) || line + "\n" != kCountsHeader)
        throw std::runtime_error(in_path.string() + ": unexpected header");

    std::vector<std::string> algos;
    // algo -> seed -> per-state totals
    std::map<std::string, std::map<std::uint64_t, std::map<std::size_t, double>>> totals;
    std::size_t number = 1;
    while (std::getline(in, line)) {
        ++number;
        if (line.empty()) continue;
        const auto f = split(line, ',');
        if (f.size() != 6)
            throw std::runtime_error(in_path.string() + " line " + std::to_string(number) + ": expected 6 fields");
        try {
            const auto seed = std::stoull(f[0]);
            const auto state = std::stoul(f[4]);
            const double visits = static_cast<double>(std::stoull(f[5]));
            if (!totals.count(f[1])) algos.push_back(f[1]);
            totals[f[1]][seed][state] += visits;
        } catch (const std::exception&) {
            throw std::runtime_error(in_path.string() + " line " + std::to_string(number) + ": bad number");
        }
    }
    std::string out = "algo,state,mean,ci_lo,ci_hi,n_seeds\n";
    for (const auto& algo : algos) {
        const auto& by_seed = totals[algo];
        std::set<std::size_t> states;
        for (const auto& [seed, m] : by_seed)
            for (const auto& [s, v] : m) states.insert(s);
        for (auto s : states) {
            std::vector<double> xs;
            for (const auto& [seed, m] : by_seed) {
                auto it = m.find(s);
                xs.push_back(it == m.end() ? 0.0 : it->second);
            }
            out += algo + "," + std::to_string(s) + "," + interval_fields(normal_interval(xs)) + "," +
                   std::to_string(xs.size()) + "\n";
        }
    }
    const std::string path =
        output_path.empty() ? (fs::path(results_dir) / (figure + ".csv")).string() : output_path;
    write_file_atomic(path, out);
    return path;
}

}  // namespace maxent
