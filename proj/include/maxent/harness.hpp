#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "maxent/core.hpp"
#include "maxent/entgame.hpp"
#include "maxent/oracles.hpp"
#include "maxent/ucbvi_ent.hpp"

namespace maxent {

/// Invalid or inconsistent configuration (CLI exit code 2).
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Line-oriented `key = value` text with `[section]` headers. Lines starting
/// with '#' or ';' are comments.
class IniDocument {
public:
    static IniDocument parse(const std::string& text);

    bool has_section(const std::string& name) const { return sections_.count(name) > 0; }
    /// Empty map when the section is absent.
    const std::map<std::string, std::string>& section(const std::string& name) const;
    const std::vector<std::string>& section_names() const { return order_; }

private:
    std::map<std::string, std::map<std::string, std::string>> sections_;
    std::vector<std::string> order_;
};

struct EnvironmentSpec {
    std::string name;
    std::map<std::string, std::string> params;
};

/// double-chain, grid-world, random or ring. Throws ConfigError.
TabularMDP make_environment(const EnvironmentSpec& spec);

/// Parses "name:key=value,key=value".
EnvironmentSpec parse_environment_spec(const std::string& text);

struct AlgorithmSettings {
    EntGameConfig entgame;
    UcbviConfig ucbvi;
    double ucbvi_lambda = 1.0;
    double ucbvi_kappa = 1.0;
    std::size_t rf_exploration_episodes = 100;  // per goal
    std::size_t rf_model_episodes = 1000;
    double rf_delta = 0.1;
    FrankWolfeConfig frank_wolfe{1000, 0.0, MveeObjective::Averaged};
};

inline const std::vector<std::string>& registered_algorithms() {
    static const std::vector<std::string> names{"random",    "optimal-mvee", "optimal-mtee",
                                                "entgame",   "reg-entgame",  "ucbvi-ent",
                                                "rf-explore"};
    return names;
}

struct ExperimentConfig {
    std::string name = "experiment";
    EnvironmentSpec environment;
    std::vector<std::string> algorithms;
    std::map<std::string, AlgorithmSettings> settings;
    std::uint64_t budget = 0;  // environment steps per algorithm and seed
    std::vector<std::uint64_t> seeds;
    std::string output = "results";
    std::size_t workers = 1;
    Aggregation aggregation = Aggregation::PerStep;
    std::size_t curve_every = 1;
    bool save_policies = false;

    const AlgorithmSettings& settings_for(const std::string& algo) const;
};

/// Parses and validates. Throws ConfigError with the offending key or line.
ExperimentConfig parse_experiment(const std::string& text);
ExperimentConfig load_experiment(const std::string& path);

/// Throws ConfigError.
void validate(const ExperimentConfig& config);

struct CurvePoint {
    std::size_t episode = 0;
    std::string metric;
    double value = 0.0;
};

struct ReplicateResult {
    std::string algo;
    std::uint64_t seed = 0;
    /// Visits of the counted episodes (learning episodes for entgame variants,
    /// evaluation episodes of the final policy otherwise).
    CountTables counts;
    std::vector<std::pair<std::string, double>> metrics;
    std::vector<CurvePoint> curves;
    MixturePolicy policy;
};

ReplicateResult run_replicate(const ExperimentConfig& config, const std::string& algo,
                              std::uint64_t seed);

struct ExperimentFiles {
    std::string counts, curves, summary;
};

/// Runs every (algorithm, seed) replicate, writes per-replicate files under
/// <output>/replicates, then the merged counts.csv, curves.csv and summary.csv.
ExperimentFiles run_experiment(const ExperimentConfig& config);

/// Shortest round-trip decimal form ("%.17g").
std::string format_double(double x);

/// Writes `contents` to `path` through a temporary file and a rename.
void write_file_atomic(const std::string& path, const std::string& contents);

std::string policy_to_csv(const MixturePolicy& policy);
MixturePolicy policy_from_csv(const std::string& text);

/// Named metrics of a stored policy on a known model. Supported: ve,
/// averaged_entropy, te, mtee_value, mtee_gap. te and the mtee metrics need a
/// single-component policy.
std::vector<std::pair<std::string, double>> eval_policy(const TabularMDP& mdp,
                                                        const MixturePolicy& policy,
                                                        const std::vector<std::string>& metrics);

/// Plot-ready CSV for a figure id ("figure1": state visits, one row per state
/// per algorithm with the mean and a 95% normal interval over seeds). Returns
/// the written path.
std::string export_figure_data(const std::string& results_dir, const std::string& figure,
                               const std::string& output_path = "");

}  // namespace maxent
