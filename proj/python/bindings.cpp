// Python module: environments, exact computations, planners and the learners.
// Tables cross the boundary as numpy arrays shaped (H, S, A) or (H, S, A, S).

#include <pybind11/functional.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <map>

#include "maxent/entgame.hpp"
#include "maxent/environments.hpp"
#include "maxent/harness.hpp"
#include "maxent/oracles.hpp"
#include "maxent/rf_explore.hpp"
#include "maxent/soft_planning.hpp"
#include "maxent/ucbvi_ent.hpp"

namespace py = pybind11;
using namespace maxent;

namespace {

py::array_t<double> shaped(const std::vector<double>& flat, std::vector<py::ssize_t> shape) {
    py::array_t<double> out(shape);
    std::copy(flat.begin(), flat.end(), out.mutable_data());
    return out;
}

std::vector<double> flat(const py::array_t<double, py::array::c_style | py::array::forcecast>& a,
                         std::size_t ndim, const char* what) {
    if (static_cast<std::size_t>(a.ndim()) != ndim)
        throw std::invalid_argument(std::string(what) + ": expected " + std::to_string(ndim) + " dimensions");
    return {a.data(), a.data() + a.size()};
}

py::array_t<double> profile_array(const VisitationProfile& d) {
    return shaped(d.dist, {static_cast<py::ssize_t>(d.horizon), static_cast<py::ssize_t>(d.num_states),
                           static_cast<py::ssize_t>(d.num_actions)});
}

py::array_t<double> policy_array(const MarkovPolicy& p) {
    return shaped(p.probs(), {static_cast<py::ssize_t>(p.horizon()), static_cast<py::ssize_t>(p.num_states()),
                              static_cast<py::ssize_t>(p.num_actions())});
}

VisitationProfile profile_from(const py::array_t<double, py::array::c_style | py::array::forcecast>& a) {
    auto v = flat(a, 3, "profile");
    VisitationProfile d(a.shape(1), a.shape(2), a.shape(0));
    d.dist = std::move(v);
    return d;
}

py::array_t<std::uint64_t> counts_array(const CountTables& c) {
    py::array_t<std::uint64_t> out({static_cast<py::ssize_t>(c.horizon()), static_cast<py::ssize_t>(c.num_states()),
                                    static_cast<py::ssize_t>(c.num_actions())});
    std::copy(c.visit_table().begin(), c.visit_table().end(), out.mutable_data());
    return out;
}

py::dict log_dict(const DiagnosticsLog& log) {
    py::dict out;
    std::vector<std::size_t> episodes;
    std::map<std::string, std::vector<double>> series;
    for (const auto& r : log.records()) {
        episodes.push_back(r.episode);
        for (const auto& [k, v] : r.metrics) series[k].push_back(v);
    }
    out["episode"] = episodes;
    for (const auto& [k, v] : series) out[py::str(k)] = v;
    return out;
}

}  // namespace

PYBIND11_MODULE(_maxent, m) {
    m.doc() = "Maximum-entropy exploration in finite-horizon tabular MDPs";

    py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);

    py::class_<TabularMDP>(m, "TabularMDP")
        .def(py::init([](const py::array_t<double, py::array::c_style | py::array::forcecast>& p,
                         std::size_t initial_state) {
                 auto v = flat(p, 4, "transitions");
                 return TabularMDP(p.shape(1), p.shape(2), p.shape(0), initial_state, std::move(v));
             }),
             py::arg("transitions"), py::arg("initial_state") = 0,
             "transitions has shape (H, S, A, S)")
        .def_property_readonly("num_states", &TabularMDP::num_states)
        .def_property_readonly("num_actions", &TabularMDP::num_actions)
        .def_property_readonly("horizon", &TabularMDP::horizon)
        .def_property_readonly("initial_state", &TabularMDP::initial_state)
        .def_property_readonly("transitions", [](const TabularMDP& x) {
            const auto S = static_cast<py::ssize_t>(x.num_states());
            return shaped(x.transitions(), {static_cast<py::ssize_t>(x.horizon()), S,
                                            static_cast<py::ssize_t>(x.num_actions()), S});
        });

    py::class_<MarkovPolicy>(m, "MarkovPolicy")
        .def(py::init([](const py::array_t<double, py::array::c_style | py::array::forcecast>& p) {
                 auto v = flat(p, 3, "policy");
                 return MarkovPolicy(p.shape(1), p.shape(2), p.shape(0), std::move(v));
             }),
             py::arg("probs"), "probs has shape (H, S, A)")
        .def_static("uniform", &MarkovPolicy::uniform, py::arg("num_states"), py::arg("num_actions"),
                    py::arg("horizon"))
        .def_property_readonly("probs", &policy_array);

    py::class_<MixturePolicy>(m, "MixturePolicy")
        .def(py::init<std::vector<MarkovPolicy>>(), py::arg("components"))
        .def("__len__", &MixturePolicy::size)
        .def_property_readonly("components", &MixturePolicy::components);

    py::enum_<Aggregation>(m, "Aggregation")
        .value("PER_STEP", Aggregation::PerStep)
        .value("STAGE_HOMOGENEOUS", Aggregation::StageHomogeneous);

    m.def("double_chain", &double_chain, py::arg("length") = 31, py::arg("slip") = 0.1, py::arg("horizon") = 20,
          py::arg("resampling") = false);
    m.def("grid_world", &grid_world, py::arg("width") = 21, py::arg("height") = 21, py::arg("slip") = 0.05,
          py::arg("horizon") = 20);
    m.def("random_mdp", &random_mdp, py::arg("num_states"), py::arg("num_actions"), py::arg("horizon"),
          py::arg("seed"), py::arg("concentration") = 1.0);
    m.def("deterministic_ring", &deterministic_ring, py::arg("num_states"), py::arg("num_actions"),
          py::arg("horizon"));

    m.def("visitation", [](const TabularMDP& x, const MarkovPolicy& p) { return profile_array(exact_visitation(x, p)); },
          py::arg("mdp"), py::arg("policy"), "Exact (H, S, A) visitation of a Markov policy");
    m.def("visitation", [](const TabularMDP& x, const MixturePolicy& p) { return profile_array(exact_visitation(x, p)); },
          py::arg("mdp"), py::arg("policy"), "Exact (H, S, A) visitation of a mixture");
    m.def("visitation_entropy",
          [](const py::array_t<double, py::array::c_style | py::array::forcecast>& d) {
              return visitation_entropy(profile_from(d));
          },
          py::arg("profile"), "Sum over steps of the entropy of each step's (S, A) distribution");
    m.def("trajectory_entropy", &trajectory_entropy, py::arg("mdp"), py::arg("policy"));
    m.def("enumerated_trajectory_entropy",
          [](const TabularMDP& x, const MarkovPolicy& p) { return enumerate_trajectories(x, p).entropy(); },
          py::arg("mdp"), py::arg("policy"), "Brute-force path entropy; small instances only");

    m.def("solve_mtee",
          [](const TabularMDP& x) {
              const auto t = solve_regularized(x, RegularizedSpec::mtee(x.num_states(), x.num_actions(), x.horizon()));
              return py::make_tuple(t.policy, t.initial_value(x.initial_state()));
          },
          py::arg("mdp"), "Trajectory-entropy maximising policy and its value");
    m.def("solve_regularized",
          [](const TabularMDP& x, const py::array_t<double, py::array::c_style | py::array::forcecast>& r,
             double lambda, double kappa) {
              const auto spec = RegularizedSpec::with_rewards(x.num_states(), x.num_actions(), x.horizon(),
                                                              flat(r, 3, "rewards"), lambda, kappa);
              const auto t = solve_regularized(x, spec);
              return py::make_tuple(t.policy, t.initial_value(x.initial_state()));
          },
          py::arg("mdp"), py::arg("rewards"), py::arg("lam") = 1.0, py::arg("kappa") = 0.0);
    m.def("mtee_gap",
          [](const TabularMDP& x, const MarkovPolicy& p) {
              return true_gap(x, RegularizedSpec::mtee(x.num_states(), x.num_actions(), x.horizon()), p);
          },
          py::arg("mdp"), py::arg("policy"));
    m.def("optimal_mvee",
          [](const TabularMDP& x, std::size_t iterations, const std::string& objective) {
              FrankWolfeConfig c{iterations, 0.0, MveeObjective::Averaged};
              if (objective == "per-step")
                  c.objective = MveeObjective::PerStep;
              else if (objective != "averaged")
                  throw std::invalid_argument("objective must be 'averaged' or 'per-step'");
              const auto fw = optimal_mvee(x, c);
              py::dict out;
              out["policy"] = fw.policy;
              out["profile"] = profile_array(fw.profile);
              out["trace"] = fw.trace;
              out["duality_gap"] = fw.duality_gap;
              return out;
          },
          py::arg("mdp"), py::arg("iterations") = 1000, py::arg("objective") = "averaged");

    m.def("entgame",
          [](const TabularMDP& x, std::size_t episodes, std::uint64_t seed, double bonus_scale,
             Aggregation aggregation, std::size_t prior, double delta) {
              EnvironmentHandle env(x);
              EntGameConfig c;
              c.episodes = episodes;
              c.bonus_scale = bonus_scale;
              c.aggregation = aggregation;
              c.prior = prior;
              c.delta = delta;
              auto res = run_entgame(env, c, seed);
              py::dict out;
              out["mixture"] = res.mixture;
              out["counts"] = counts_array(res.counts);
              out["log"] = log_dict(res.log);
              out["regret"] = forecaster_regret(res.log, res.counts, res.counts.empirical_profile());
              return out;
          },
          py::arg("mdp"), py::arg("episodes"), py::arg("seed") = 0, py::arg("bonus_scale") = 1.0,
          py::arg("aggregation") = Aggregation::PerStep, py::arg("prior") = 1, py::arg("delta") = 0.1);
    m.def("reg_entgame",
          [](const TabularMDP& x, std::size_t episodes, std::size_t exploration_episodes,
             std::size_t model_episodes, std::uint64_t seed) {
              EnvironmentHandle env(x);
              EntGameConfig c;
              c.variant = EntGameVariant::Regularized;
              c.episodes = episodes;
              c.exploration_episodes = exploration_episodes;
              c.model_episodes = model_episodes;
              auto res = run_entgame(env, c, seed);
              py::dict out;
              out["mixture"] = res.mixture;
              out["counts"] = counts_array(res.counts);
              out["env_episodes"] = res.env_episodes;
              return out;
          },
          py::arg("mdp"), py::arg("episodes"), py::arg("exploration_episodes") = 20,
          py::arg("model_episodes") = 1000, py::arg("seed") = 0);
    m.def("ucbvi_ent",
          [](const TabularMDP& x, double epsilon, std::size_t max_episodes, std::uint64_t seed,
             double bonus_scale, double delta, std::size_t log_every) {
              EnvironmentHandle env(x);
              UcbviConfig c;
              c.epsilon = epsilon;
              c.max_episodes = max_episodes;
              c.options.bonus_scale = bonus_scale;
              c.options.delta = delta;
              c.log_every = log_every;
              auto res = run_ucbvi_ent(env, RegularizedSpec::mtee(x.num_states(), x.num_actions(), x.horizon()),
                                       c, seed);
              py::dict out;
              out["policy"] = res.policy;
              out["stopping_episode"] = res.stopping_episode;
              out["converged"] = res.converged;
              out["log"] = log_dict(res.log);
              return out;
          },
          py::arg("mdp"), py::arg("epsilon") = 0.5, py::arg("max_episodes") = 200000, py::arg("seed") = 0,
          py::arg("bonus_scale") = 1.0, py::arg("delta") = 0.1, py::arg("log_every") = 1);
    m.def("rf_explore",
          [](const TabularMDP& x, std::size_t exploration_episodes, std::size_t model_episodes,
             std::uint64_t seed, double delta) {
              EnvironmentHandle env(x);
              auto res = rf_explore_ent(env, {RegularizedSpec::mtee(x.num_states(), x.num_actions(), x.horizon())},
                                        exploration_episodes, model_episodes, delta, seed);
              py::dict out;
              out["policy"] = res.policies[0];
              out["model"] = static_cast<const TabularMDP&>(res.exploration.model);
              out["env_steps"] = res.accounting.phase1_steps + res.accounting.phase2_steps;
              return out;
          },
          py::arg("mdp"), py::arg("exploration_episodes") = 100, py::arg("model_episodes") = 1000,
          py::arg("seed") = 0, py::arg("delta") = 0.1);

    m.def("run_experiment",
          [](const std::string& path, const std::string& output) {
              auto cfg = load_experiment(path);
              if (!output.empty()) cfg.output = output;
              const auto files = run_experiment(cfg);
              return py::make_tuple(files.counts, files.curves, files.summary);
          },
          py::arg("config"), py::arg("output") = "", "Runs a config file; returns the merged CSV paths");
}
