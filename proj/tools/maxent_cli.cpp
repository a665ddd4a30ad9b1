// Command-line front end: run, validate, eval and export.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "maxent/harness.hpp"

namespace {

constexpr int kConfigError = 2;
constexpr int kRuntimeError = 1;

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// --env accepts either an inline spec ("double-chain:length=31,horizon=20")
// or a config file whose [environment] section is used.
maxent::EnvironmentSpec environment_argument(const std::string& arg) {
    if (std::filesystem::is_regular_file(arg)) {
        const auto doc = maxent::IniDocument::parse(slurp(arg));
        if (!doc.has_section("environment"))
            throw maxent::ConfigError(arg + ": missing [environment] section");
        maxent::EnvironmentSpec spec;
        for (const auto& [k, v] : doc.section("environment")) {
            if (k == "name")
                spec.name = v;
            else
                spec.params[k] = v;
        }
        return spec;
    }
    return maxent::parse_environment_spec(arg);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Maximum-entropy exploration experiments"};
    app.require_subcommand(1);

    std::string run_config;
    auto* run = app.add_subcommand("run", "Run every replicate of an experiment config");
    run->add_option("config", run_config, "Experiment config file")->required();

    std::string validate_config;
    auto* check = app.add_subcommand("validate", "Parse and validate a config without running it");
    check->add_option("config", validate_config, "Experiment config file")->required();

    std::string env_arg, policy_path, metrics_arg = "ve";
    auto* eval = app.add_subcommand("eval", "Exact metrics of a stored policy");
    eval->add_option("--env", env_arg, "Environment spec or config file")->required();
    eval->add_option("--policy", policy_path, "Policy CSV file")->required();
    eval->add_option("--metrics", metrics_arg,
                     "Comma-separated subset of ve,averaged_entropy,te,mtee_value,mtee_gap");

    std::string results_dir, figure = "figure1", output_path;
    auto* exp = app.add_subcommand("export", "Plot-ready CSV for a figure");
    exp->add_option("--results", results_dir, "Results directory of a run")->required();
    exp->add_option("--figure", figure, "Figure id (figure1)");
    exp->add_option("--output", output_path, "Output file (default <results>/<figure>.csv)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kConfigError;
    }

    try {
        if (*run) {
            const auto cfg = maxent::load_experiment(run_config);
            const auto files = maxent::run_experiment(cfg);
            std::cout << files.counts << "\n" << files.curves << "\n" << files.summary << "\n";
        } else if (*check) {
            const auto cfg = maxent::load_experiment(validate_config);
            std::cout << "ok: " << cfg.algorithms.size() << " algorithm(s), " << cfg.seeds.size()
                      << " seed(s)\n";
        } else if (*eval) {
            const auto mdp = maxent::make_environment(environment_argument(env_arg));
            const auto policy = maxent::policy_from_csv(slurp(policy_path));
            std::vector<std::string> metrics;
            std::stringstream ss(metrics_arg);
            for (std::string m; std::getline(ss, m, ',');)
                if (!m.empty()) metrics.push_back(m);
            std::cout << "metric,value\n";
            for (const auto& [name, value] : maxent::eval_policy(mdp, policy, metrics))
                std::cout << name << "," << maxent::format_double(value) << "\n";
        } else if (*exp) {
            std::cout << maxent::export_figure_data(results_dir, figure, output_path) << "\n";
        }
    } catch (const maxent::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kConfigError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kRuntimeError;
    }
    return 0;
}
