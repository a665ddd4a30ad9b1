// Acceptance suite: one PASS/FAIL line per criterion.
//
//   acceptance [--strict] [--configs DIR] [criterion numbers...]
//
// Criteria listed in kKnownFailures are run and reported like the others but
// do not change the exit status unless --strict is given. README.md explains
// why they fail at the default constants.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "maxent/entgame.hpp"
#include "maxent/environments.hpp"
#include "maxent/harness.hpp"
#include "maxent/oracles.hpp"
#include "maxent/rf_explore.hpp"
#include "maxent/soft_planning.hpp"
#include "maxent/ucbvi_ent.hpp"
#include "support.hpp"

using namespace maxent;
namespace fs = std::filesystem;

namespace {

const std::set<int> kKnownFailures{6, 7};

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, x);
    return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string config_dir = MAXENT_CONFIG_DIR;

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

std::vector<std::string> lines(const std::string& text) {
    std::vector<std::string> out;
    std::istringstream in(text);
    for (std::string l; std::getline(in, l);)
        if (!l.empty()) out.push_back(l);
    return out;
}

fs::path scratch(const std::string& name) {
    const auto dir = fs::temp_directory_path() / ("maxent_acceptance_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

ExperimentConfig load_into(const std::string& file, const fs::path& out) {
    auto cfg = load_experiment((fs::path(config_dir) / file).string());
    cfg.output = out.string();
    return cfg;
}

// Shared between criteria 6 and 10.
std::map<std::string, fs::path> finished_runs;

fs::path run_once(const std::string& file, const std::string& tag) {
    const std::string key = file + "/" + tag;
    if (!finished_runs.count(key)) {
        const auto dir = scratch(fs::path(file).stem().string() + "_" + tag);
        run_experiment(load_into(file, dir));
        finished_runs[key] = dir;
    }
    return finished_runs[key];
}

// ---------------------------------------------------------------- 1 - 4

std::vector<support::Instance> small_instances() {
    std::vector<support::Instance> out;
    for (std::uint64_t i = 0; i < 25; ++i) out.push_back(support::random_instance(7000 + i));
    return out;
}

Outcome oracle_equivalence() {
    const auto t0 = std::chrono::steady_clock::now();
    double marg = 0.0, ent = 0.0;
    for (const auto& inst : small_instances()) {
        const auto table = enumerate_trajectories(inst.mdp, inst.policy);
        marg = std::max(marg, support::max_abs_diff(table.marginals().dist,
                                                    exact_visitation(inst.mdp, inst.policy).dist));
        ent = std::max(ent, std::abs(table.entropy() - trajectory_entropy(inst.mdp, inst.policy)));
    }
    const double secs = seconds_since(t0);
    return {marg <= 1e-12 && ent <= 1e-10 && secs < 10.0,
            "marginals " + fmt("%.2e", marg) + ", entropy " + fmt("%.2e", ent) + ", " +
                fmt("%.2f", secs) + " s"};
}

Outcome entropy_sandwich() {
    double worst_kl = 0.0, worst_order = 0.0;
    for (const auto& inst : small_instances()) {
        const double te = trajectory_entropy(inst.mdp, inst.policy);
        const double ve = visitation_entropy(exact_visitation(inst.mdp, inst.policy));
        const double H = static_cast<double>(inst.mdp.horizon());
        worst_order = std::max({worst_order, te - ve, ve - H * te});
        const double kl = enumerate_trajectories(inst.mdp, inst.policy).kl_to_product_of_marginals();
        worst_kl = std::max(worst_kl, std::abs(ve - te - kl));
    }
    return {worst_order <= 1e-12 && worst_kl <= 1e-9,
            "largest order violation " + fmt("%.2e", worst_order) + ", KL identity " + fmt("%.2e", worst_kl)};
}

Outcome deterministic_mtee() {
    std::vector<TabularMDP> envs{deterministic_ring(3, 2, 4), deterministic_ring(5, 3, 6),
                                 deterministic_ring(4, 4, 2), double_chain(31, 0.0, 20),
                                 double_chain(7, 0.0, 5),     grid_world(5, 5, 0.0, 8)};
    double dev = 0.0, val = 0.0;
    for (const auto& m : envs) {
        const std::size_t S = m.num_states(), A = m.num_actions(), H = m.horizon();
        const auto sol = solve_regularized(m, RegularizedSpec::mtee(S, A, H));
        for (double p : sol.policy.probs()) dev = std::max(dev, std::abs(p - 1.0 / static_cast<double>(A)));
        val = std::max(val, std::abs(sol.initial_value(m.initial_state()) -
                                     static_cast<double>(H) * std::log(static_cast<double>(A))));
    }
    return {dev < 1e-12 && val <= 1e-12,
            std::to_string(envs.size()) + " environments, row deviation " + fmt("%.2e", dev) +
                ", value error " + fmt("%.2e", val)};
}

Outcome total_variance() {
    double exact_err = 0.0;
    std::uint64_t k = 0;
    for (const auto& inst : small_instances()) {
        const std::size_t S = inst.mdp.num_states(), A = inst.mdp.num_actions(), H = inst.mdp.horizon();
        std::vector<double> r(H * S * A);
        for (double& x : r) x = static_cast<double>((k * 13 + 5) % 11) / 10.0, ++k;
        const auto spec = RegularizedSpec::with_rewards(S, A, H, r, 0.7, 0.4);
        double mean = 0.0, second = 0.0;
        for (const auto& [x, p] : enumerate_returns(inst.mdp, spec, inst.policy)) mean += p * x, second += p * x * x;
        exact_err = std::max(exact_err, std::abs(variance_bellman(inst.mdp, spec, inst.policy).v(0, inst.mdp.initial_state()) -
                                                 (second - mean * mean)));
    }
    const auto chain = double_chain(5, 0.1, 4);
    const auto spec = RegularizedSpec::mtee(5, 2, 4);
    const auto pi = support::random_policy(5, 2, 4, 17);
    const double exact = variance_bellman(chain, spec, pi).v(0, chain.initial_state());
    const auto mc = mc_return_variance(chain, spec, pi, 100000, 2024);
    const double z = std::abs(mc.variance - exact) / mc.variance_stderr;
    return {exact_err <= 1e-10 && z <= 4.0,
            "enumeration error " + fmt("%.2e", exact_err) + ", Monte Carlo " + fmt("%.3f", z) + " SE"};
}

// ---------------------------------------------------------------- 5

Outcome forecaster_bound() {
    const auto t0 = std::chrono::steady_clock::now();
    const auto mdp = double_chain(31, 0.1, 20);
    const std::size_t T = 5000;
    const double bound = 20.0 * 31.0 * 2.0 * std::log(std::exp(1.0) * (T + 1.0));
    int violations = 0;
    double worst = -1e300;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        EnvironmentHandle env(mdp);
        EntGameConfig c;
        c.episodes = T;
        c.prior = 1;
        const auto res = run_entgame(env, c, seed);
        const double regret = forecaster_regret(res.log, res.counts, res.counts.empirical_profile());
        worst = std::max(worst, regret);
        violations += regret > bound;
    }
    const double secs = seconds_since(t0);
    return {violations == 0 && secs < 120.0,
            "largest regret " + fmt("%.1f", worst) + " vs bound " + fmt("%.1f", bound) + ", " +
                std::to_string(violations) + " violations, " + fmt("%.1f", secs) + " s"};
}

// ---------------------------------------------------------------- 6

struct Histograms {
    // algo -> mean visits per state over seeds
    std::map<std::string, std::vector<double>> mean;
};

Histograms read_histograms(const fs::path& counts_csv, std::size_t S) {
    std::map<std::string, std::set<std::string>> seeds;
    Histograms out;
    const auto rows = lines(slurp(counts_csv));
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const auto f = split(rows[i]);
        auto& h = out.mean[f[1]];
        h.resize(S, 0.0);
        h[std::stoul(f[4])] += static_cast<double>(std::stoull(f[5]));
        seeds[f[1]].insert(f[0]);
    }
    for (auto& [algo, h] : out.mean)
        for (double& x : h) x /= static_cast<double>(seeds[algo].size());
    return out;
}

double histogram_entropy(std::vector<double> h) {
    double t = 0.0;
    for (double x : h) t += x;
    for (double& x : h) x /= t;
    return entropy(h);
}

double end_minimum(const std::vector<double>& h) { return std::min(h.front(), h.back()); }

Outcome figure_one() {
    const auto t0 = std::chrono::steady_clock::now();
    const auto dir = run_once("figure1.ini", "a");
    const std::size_t S = 31;
    const auto hist = read_histograms(dir / "counts.csv", S);
    const double mvee = histogram_entropy(hist.mean.at("optimal-mvee"));
    const double eg = histogram_entropy(hist.mean.at("entgame"));
    const double rnd = histogram_entropy(hist.mean.at("random"));
    const double eg_end = end_minimum(hist.mean.at("entgame")), rnd_end = end_minimum(hist.mean.at("random"));
    const double secs = seconds_since(t0);
    const bool ok = mvee >= eg && eg > rnd && eg_end > 0.0 && eg_end >= 2.0 * rnd_end && secs < 600.0;
    return {ok, "entropy mvee " + fmt("%.4f", mvee) + ", entgame " + fmt("%.4f", eg) + ", random " +
                    fmt("%.4f", rnd) + "; end visits entgame " + fmt("%.1f", eg_end) + ", random " +
                    fmt("%.1f", rnd_end) + ", " + fmt("%.1f", secs) + " s"};
}

std::string figure_one_ablation() {
    auto cfg = load_into("figure1.ini", scratch("unused"));
    cfg.settings["entgame"].entgame.bonus_scale = 0.01;
    std::vector<double> mean(31, 0.0);
    for (auto seed : cfg.seeds) {
        const auto rep = run_replicate(cfg, "entgame", seed);
        const auto& c = rep.counts;
        for (std::size_t h = 0; h < c.horizon(); ++h)
            for (std::size_t s = 0; s < 31; ++s)
                for (std::size_t a = 0; a < c.num_actions(); ++a)
                    mean[s] += static_cast<double>(c.visits(h, s, a)) / static_cast<double>(cfg.seeds.size());
    }
    return "entgame with bonus scale 0.01: entropy " + fmt("%.4f", histogram_entropy(mean)) +
           ", end visits " + fmt("%.1f", end_minimum(mean));
}

// ---------------------------------------------------------------- 7

struct UcbviRun {
    bool stopped = false;
    double true_gap_at_stop = 0.0;
    std::size_t tau = 0;
    std::size_t bracket_failures = 0;
};

UcbviRun ucbvi_run(double bonus_scale, std::uint64_t seed) {
    const auto mdp = double_chain(5, 0.1, 5);
    const auto spec = RegularizedSpec::mtee(5, 2, 5);
    UcbviConfig c;
    c.epsilon = 0.5;
    c.options.delta = 0.1;
    c.options.bonus_scale = bonus_scale;
    c.max_episodes = 200000;
    c.log_every = 1000;
    UcbviRun out;
    EnvironmentHandle env(mdp);
    auto observer = [&](std::size_t t, const ConfidenceState& bounds, const GapTables& gap) {
        if (t % c.log_every != 0 && gap.initial > c.epsilon) return;
        if (gap.initial < true_gap(mdp, spec, bounds.policy) - 1e-9) ++out.bracket_failures;
    };
    const auto res = run_ucbvi_ent(env, spec, c, seed, observer);
    out.stopped = res.converged;
    out.tau = res.stopping_episode;
    out.true_gap_at_stop = true_gap(mdp, spec, res.policy);
    return out;
}

Outcome ucbvi_pac() {
    int passing = 0;
    std::size_t failures = 0, longest = 0;
    double worst_gap = 0.0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto r = ucbvi_run(1.0, seed);
        worst_gap = std::max(worst_gap, r.true_gap_at_stop);
        longest = std::max(longest, r.tau);
        if (r.stopped && r.true_gap_at_stop <= 0.5) {
            ++passing;
            failures += r.bracket_failures;
        }
    }
    return {passing >= 18 && failures == 0,
            std::to_string(passing) + "/20 seeds stopped with true gap <= 0.5 (longest run " +
                std::to_string(longest) + " episodes, worst true gap " + fmt("%.3f", worst_gap) +
                "), " + std::to_string(failures) + " bracketing failures"};
}

std::string ucbvi_ablation() {
    int passing = 0;
    std::size_t failures = 0, longest = 0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto r = ucbvi_run(1e-3, seed);
        longest = std::max(longest, r.tau);
        if (r.stopped && r.true_gap_at_stop <= 0.5) ++passing;
        failures += r.bracket_failures;
    }
    return "ucbvi-ent with bonus scale 0.001: " + std::to_string(passing) + "/20 seeds pass, longest run " +
           std::to_string(longest) + " episodes, " + std::to_string(failures) + " bracketing failures";
}

// ---------------------------------------------------------------- 8

Outcome fast_rate() {
    const auto t0 = std::chrono::steady_clock::now();
    const auto mdp = double_chain(7, 0.1, 5);
    const auto spec = RegularizedSpec::mtee(7, 2, 5);
    const std::vector<std::size_t> budgets{250, 500, 1000, 2000};
    std::vector<double> lx, ly;
    std::string medians;
    for (auto N : budgets) {
        std::vector<double> gaps;
        for (std::uint64_t seed = 0; seed < 20; ++seed) {
            EnvironmentHandle env(mdp);
            const auto res = rf_explore_ent(env, {spec}, 50, N, 0.1, seed);
            gaps.push_back(true_gap(mdp, spec, res.policies[0]));
        }
        std::sort(gaps.begin(), gaps.end());
        const double med = 0.5 * (gaps[9] + gaps[10]);
        medians += (medians.empty() ? "" : " ") + fmt("%.2e", med);
        lx.push_back(std::log(static_cast<double>(N)));
        ly.push_back(std::log(med));
    }
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < lx.size(); ++i) mx += lx[i] / 4.0, my += ly[i] / 4.0;
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < lx.size(); ++i) sxy += (lx[i] - mx) * (ly[i] - my), sxx += (lx[i] - mx) * (lx[i] - mx);
    const double slope = sxy / sxx;
    const double secs = seconds_since(t0);
    return {slope >= -1.4 && slope <= -0.6 && secs < 900.0,
            "median gaps " + medians + ", slope " + fmt("%.3f", slope) + ", " + fmt("%.1f", secs) + " s"};
}

// ---------------------------------------------------------------- 9

Outcome regularized_improvement() {
    const auto mdp = double_chain(7, 0.1, 5);
    const std::size_t S = 7, H = 5, total = 5000, N0 = 20, N = 1000;
    const auto fw = optimal_mvee(mdp, {5000, 0.0, MveeObjective::PerStep});
    const double best = mvee_objective(fw.profile, MveeObjective::PerStep);
    std::vector<double> plain, reg;
    for (std::uint64_t seed = 0; seed < 12; ++seed) {
        EntGameConfig c;
        c.episodes = total;
        EnvironmentHandle e1(mdp);
        plain.push_back(visitation_entropy(exact_visitation(mdp, run_entgame(e1, c, seed).mixture)));
        c.variant = EntGameVariant::Regularized;
        c.exploration_episodes = N0;
        c.model_episodes = N;
        c.episodes = total - (S * H * N0 + N);
        EnvironmentHandle e2(mdp);
        const auto r = run_entgame(e2, c, seed);
        if (r.env_episodes != total) return {false, "step budgets do not match"};
        reg.push_back(visitation_entropy(exact_visitation(mdp, r.mixture)));
    }
    auto median = [](std::vector<double> x) {
        std::sort(x.begin(), x.end());
        return 0.5 * (x[5] + x[6]);
    };
    const double mp = median(plain), mr = median(reg);
    return {mr >= mp - 0.05 && best - mp <= 0.2 && best - mr <= 0.2,
            "median VE regularized " + fmt("%.4f", mr) + ", plain " + fmt("%.4f", mp) + ", optimum " +
                fmt("%.4f", best)};
}

// ---------------------------------------------------------------- 10

bool is_uint(const std::string& s) {
    return !s.empty() && std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; });
}

bool is_real(const std::string& s) {
    if (s.empty()) return false;
    char* end = nullptr;
    std::strtod(s.c_str(), &end);
    return end == s.c_str() + s.size();
}

// Returns an empty string when the file conforms, else the first problem.
std::string check_schema(const fs::path& file, const std::string& header,
                         const std::function<bool(const std::vector<std::string>&)>& row_ok) {
    const auto rows = lines(slurp(file));
    if (rows.empty() || rows[0] != header) return file.filename().string() + ": bad header";
    const auto width = split(header).size();
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const auto f = split(rows[i]);
        if (f.size() != width || !row_ok(f))
            return file.filename().string() + " row " + std::to_string(i) + ": '" + rows[i] + "'";
    }
    return "";
}

std::string check_run_schemas(const fs::path& dir, const ExperimentConfig& cfg) {
    const auto S = make_environment(cfg.environment).num_states();
    const std::set<std::string> algos(cfg.algorithms.begin(), cfg.algorithms.end());
    const std::string n_seeds = std::to_string(cfg.seeds.size());
    auto algo_ok = [&](const std::string& a) { return algos.count(a) > 0; };
    std::vector<std::string> problems;
    problems.push_back(check_schema(dir / "counts.csv", "seed,algo,env,h,state,visits", [&](const auto& f) {
        return is_uint(f[0]) && algo_ok(f[1]) && f[2] == cfg.environment.name &&
               (is_uint(f[3]) || (f[3] == "all" && cfg.aggregation == Aggregation::StageHomogeneous)) &&
               is_uint(f[4]) && std::stoul(f[4]) < S && is_uint(f[5]);
    }));
    problems.push_back(check_schema(dir / "curves.csv", "seed,algo,episode,metric,value", [&](const auto& f) {
        return is_uint(f[0]) && algo_ok(f[1]) && is_uint(f[2]) && !f[3].empty() && is_real(f[4]);
    }));
    problems.push_back(check_schema(dir / "summary.csv", "algo,metric,mean,ci_lo,ci_hi,n_seeds", [&](const auto& f) {
        if (!algo_ok(f[0]) || f[1].empty() || !is_real(f[2]) || f[5] != n_seeds) return false;
        if (cfg.seeds.size() == 1) return f[3].empty() && f[4].empty();
        return is_real(f[3]) && is_real(f[4]) && std::stod(f[3]) <= std::stod(f[2]) + 1e-12 &&
               std::stod(f[2]) <= std::stod(f[4]) + 1e-12;
    }));
    const auto fig = export_figure_data(dir.string(), "figure1");
    problems.push_back(check_schema(fig, "algo,state,mean,ci_lo,ci_hi,n_seeds", [&](const auto& f) {
        return algo_ok(f[0]) && is_uint(f[1]) && std::stoul(f[1]) < S && is_real(f[2]) && f[5] == n_seeds;
    }));
    for (const auto& p : problems)
        if (!p.empty()) return p;
    return "";
}

std::string compare_trees(const fs::path& a, const fs::path& b) {
    std::size_t files = 0;
    for (const auto& entry : fs::recursive_directory_iterator(a)) {
        if (!entry.is_regular_file()) continue;
        const auto rel = fs::relative(entry.path(), a);
        if (!fs::exists(b / rel)) return rel.string() + " missing from the rerun";
        if (slurp(entry.path()) != slurp(b / rel)) return rel.string() + " differs";
        ++files;
    }
    for (const auto& entry : fs::recursive_directory_iterator(b))
        if (entry.is_regular_file() && !fs::exists(a / fs::relative(entry.path(), b)))
            return fs::relative(entry.path(), b).string() + " only in the rerun";
    return std::to_string(files) + " files";
}

Outcome determinism_and_schema() {
    std::string detail;
    bool ok = true;
    for (const std::string file : {"figure1.ini", "smoke.ini"}) {
        const auto a = run_once(file, "a"), b = run_once(file, "b");
        const auto cmp = compare_trees(a, b);
        const bool same = cmp.find(" files") != std::string::npos;
        const auto schema = check_run_schemas(a, load_into(file, a));
        ok = ok && same && schema.empty();
        detail += (detail.empty() ? "" : "; ") + file + ": " + (same ? "identical " : "") + cmp +
                  (schema.empty() ? ", schemas ok" : ", " + schema);
    }
    return {ok, detail};
}

struct Criterion {
    int id;
    const char* name;
    std::function<Outcome()> run;
    std::function<std::string()> info;
};

}  // namespace

int main(int argc, char** argv) {
    bool strict = false;
    std::set<int> only;
    for (int i = 1; i < argc; ++i) {
        const std::string arg = argv[i];
        if (arg == "--strict") {
            strict = true;
        } else if (arg == "--configs" && i + 1 < argc) {
            config_dir = argv[++i];
        } else if (is_uint(arg)) {
            only.insert(std::stoi(arg));
        } else {
            std::fprintf(stderr, "usage: acceptance [--strict] [--configs DIR] [criterion...]\n");
            return 2;
        }
    }

    const std::vector<Criterion> criteria{
        {1, "oracle equivalence", oracle_equivalence, {}},
        {2, "entropy sandwich", entropy_sandwich, {}},
        {3, "deterministic MTEE", deterministic_mtee, {}},
        {4, "law of total variance", total_variance, {}},
        {5, "forecaster regret bound", forecaster_bound, {}},
        {6, "state-visit histograms", figure_one, figure_one_ablation},
        {7, "UCBVI-Ent PAC", ucbvi_pac, ucbvi_ablation},
        {8, "fast-rate slope", fast_rate, {}},
        {9, "RegEntGame improvement", regularized_improvement, {}},
        {10, "determinism and schema", determinism_and_schema, {}},
    };

    int unexpected = 0, known = 0;
    for (const auto& c : criteria) {
        if (!only.empty() && !only.count(c.id)) continue;
        Outcome r;
        try {
            r = c.run();
        } catch (const std::exception& e) {
            r = {false, std::string("exception: ") + e.what()};
        }
        const bool expected = kKnownFailures.count(c.id) > 0;
        std::printf("%s  %2d %s: %s%s\n", r.pass ? "PASS" : "FAIL", c.id, c.name, r.detail.c_str(),
                    !r.pass && expected ? " [known]" : "");
        std::fflush(stdout);
        if (!r.pass) (expected ? known : unexpected)++;
        if (c.info) {
            try {
                std::printf("INFO  %2d %s\n", c.id, c.info().c_str());
            } catch (const std::exception& e) {
                std::printf("INFO  %2d exception: %s\n", c.id, e.what());
            }
            std::fflush(stdout);
        }
    }
    for (const auto& [key, dir] : finished_runs) fs::remove_all(dir);
    if (known > 0)
        std::printf("%d known failure(s), see README.md%s\n", known, strict ? "" : "; pass --strict to count them");
    return unexpected > 0 || (strict && known > 0) ? 1 : 0;
}
