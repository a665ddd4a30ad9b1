#include <cmath>
#include <random>
#include <stdexcept>

#include "doctest.h"
#include "maxent/environments.hpp"
#include "maxent/oracles.hpp"
#include "maxent/soft_planning.hpp"
#include "support.hpp"

using namespace maxent;

TEST_CASE("a deterministic MDP and policy have one path") {
    const auto mdp = deterministic_ring(3, 2, 4);
    const auto table = enumerate_trajectories(mdp, MarkovPolicy::deterministic(3, 2, 4, std::vector<std::size_t>(12, 1)));
    REQUIRE(table.paths.size() == 1);
    CHECK(table.paths[0].probability == 1.0);
    CHECK(table.paths[0].states == std::vector<std::size_t>{0, 1, 2, 0});
    CHECK(table.entropy() == 0.0);
}

TEST_CASE("fair coins everywhere give sixteen equally likely paths") {
    const TabularMDP mdp(2, 2, 2, 0, std::vector<double>(16, 0.5));
    const auto table = enumerate_trajectories(mdp, MarkovPolicy::uniform(2, 2, 2));
    REQUIRE(table.paths.size() == 8);  // s_1 is fixed; the remaining choices give 2 * 2 * 2
    for (const auto& p : table.paths) CHECK(p.probability == doctest::Approx(1.0 / 8.0));
    // Counting the start state as a coin as well gives sixteen outcomes of 1/16.
    const TabularMDP with_start(2, 2, 3, 0, std::vector<double>(24, 0.5));
    const auto wider = enumerate_trajectories(with_start, MarkovPolicy::uniform(2, 2, 3));
    std::size_t count = 0;
    for (const auto& p : wider.paths)
        if (p.actions[0] == 0) {
            ++count;
            CHECK(p.probability == doctest::Approx(1.0 / 32.0));
        }
    CHECK(count == 16);
}

TEST_CASE("enumeration agrees with the Bellman computations") {
    for (std::uint64_t run = 0; run < 40; ++run) {
        const auto inst = support::random_instance(run + 900);
        const auto table = enumerate_trajectories(inst.mdp, inst.policy);
        CHECK(std::abs(table.total_mass() - 1.0) < 1e-10);
        CHECK(table.paths.size() <= static_cast<std::size_t>(std::pow(
                                        static_cast<double>(inst.mdp.num_states() * inst.mdp.num_actions()),
                                        static_cast<double>(inst.mdp.horizon()))));
        CHECK(std::abs(table.entropy() - trajectory_entropy(inst.mdp, inst.policy)) < 1e-10);
        CHECK(support::max_abs_diff(table.marginals().dist, exact_visitation(inst.mdp, inst.policy).dist) < 1e-12);
    }
}

TEST_CASE("enumeration refuses large instances") {
    const auto mdp = double_chain(31, 0.1, 20);
    CHECK_THROWS_AS(enumerate_trajectories(mdp, MarkovPolicy::uniform(31, 2, 20)), std::invalid_argument);
}

TEST_CASE("smoothed entropy bias is at most sigma times SA") {
    std::mt19937_64 eng(1);
    std::gamma_distribution<double> g(0.3, 1.0);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t n = 2 + trial % 40;
        std::vector<double> d(n);
        double t = 0.0;
        for (double& x : d) t += (x = g(eng));
        for (double& x : d) x /= t;
        const double sigma = std::pow(10.0, -1.0 - trial % 6);
        const double bias = std::abs(entropy(d) - smoothed_entropy(d, sigma));
        CHECK(bias <= sigma * static_cast<double>(n) + 1e-15);
    }
}

TEST_CASE("Frank-Wolfe with a single state is uniform from the first iteration") {
    const TabularMDP mdp(1, 3, 4, 0, std::vector<double>(12, 1.0));
    const auto fw = optimal_mvee(mdp, {10, 0.0, MveeObjective::PerStep});
    CHECK(fw.trace[0] == doctest::Approx(4.0 * std::log(3.0)).epsilon(1e-12));
    for (double p : fw.policy.probs()) CHECK(p == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("Frank-Wolfe on the full-reach ring at two steps") {
    // Action a from any state reaches (s + a) mod S, so every state is one step away.
    const std::size_t S = 4;
    const auto mdp = deterministic_ring(S, S, 2);
    const auto fw = optimal_mvee(mdp, {2000, 0.0, MveeObjective::PerStep});
    const double best = std::log(static_cast<double>(S)) + std::log(static_cast<double>(S * S));
    CHECK(fw.trace.back() == doctest::Approx(best).epsilon(1e-3));
    std::vector<double> states(S, 0.0);
    for (std::size_t s = 0; s < S; ++s) states[s] = fw.profile.state_mass(1, s);
    CHECK(entropy(states) == doctest::Approx(std::log(static_cast<double>(S))).epsilon(1e-3));
    // The uniform policy attains the same value exactly.
    CHECK(visitation_entropy(exact_visitation(mdp, MarkovPolicy::uniform(S, S, 2))) ==
          doctest::Approx(best).epsilon(1e-12));
}

TEST_CASE("on the chain the entropy-maximising visitation beats uniform and trajectory-entropy policies") {
    const auto mdp = double_chain(7, 0.1, 5);
    const auto fw = optimal_mvee(mdp, {1000, 0.0, MveeObjective::Averaged});
    const double mvee = mvee_objective(fw.profile, MveeObjective::Averaged);
    const double uniform = mvee_objective(exact_visitation(mdp, MarkovPolicy::uniform(7, 2, 5)), MveeObjective::Averaged);
    const auto mtee = solve_regularized(mdp, RegularizedSpec::mtee(7, 2, 5)).policy;
    const double traj = mvee_objective(exact_visitation(mdp, mtee), MveeObjective::Averaged);
    CHECK(mvee > uniform);
    CHECK(mvee > traj);
    // The Markov policy from row normalisation realises the same profile.
    CHECK(support::max_abs_diff(exact_visitation(mdp, fw.policy).dist, fw.profile.dist) < 1e-10);
    CHECK(support::max_abs_diff(exact_visitation(mdp, fw.mixture).dist, fw.profile.dist) < 1e-10);
    CHECK(flow_residual(mdp, fw.profile) < 1e-8);
}

TEST_CASE("Frank-Wolfe converges at rate 1/k towards its limit") {
    const auto mdp = double_chain(7, 0.1, 5);
    const auto fw = optimal_mvee(mdp, {4000, 1e-6, MveeObjective::PerStep});
    const double limit = fw.trace.back();
    // Fit C on an early iterate, then check the tail.
    const double C = 100.0 * std::max(1e-12, limit - fw.trace[99]);
    for (std::size_t k = 200; k < 2000; ++k) CHECK(limit - fw.trace[k - 1] <= 2.0 * C / static_cast<double>(k) + 1e-9);
    CHECK(fw.duality_gap >= -1e-12);
    CHECK(fw.duality_gap < 0.05);
}

TEST_CASE("Frank-Wolfe argument errors") {
    const auto mdp = double_chain(5, 0.1, 3);
    CHECK_THROWS_AS(optimal_mvee(mdp, {0, 0.0, MveeObjective::PerStep}), std::invalid_argument);
    CHECK_THROWS_AS(optimal_mvee(mdp, {10, 0.5, MveeObjective::PerStep}), std::invalid_argument);
}

TEST_CASE("policy from profile uses uniform rows where the state is unreached") {
    VisitationProfile d(2, 2, 1);
    d.at(0, 0, 0) = 0.25;
    d.at(0, 0, 1) = 0.75;
    const auto pi = policy_from_profile(d);
    CHECK(pi.prob(0, 0, 1) == 0.75);
    CHECK(pi.prob(0, 1, 0) == 0.5);
}

TEST_CASE("Monte Carlo variance of a deterministic return is zero") {
    const auto mdp = deterministic_ring(3, 2, 4);
    const auto spec = RegularizedSpec::with_rewards(3, 2, 4, std::vector<double>(24, 0.3), 0.0, 0.0);
    const auto est = mc_return_variance(mdp, spec, MarkovPolicy::deterministic(3, 2, 4, std::vector<std::size_t>(12, 1)), 200, 1);
    // Zero up to the rounding of the sample mean.
    CHECK(est.variance < 1e-20);
    CHECK(est.variance_stderr < 1e-20);
    CHECK(est.mean == doctest::Approx(1.2));
}

TEST_CASE("Monte Carlo variance agrees with the variance recursion") {
    for (std::uint64_t run = 0; run < 5; ++run) {
        const auto mdp = random_mdp(3, 2, 4, run, 0.6);
        std::vector<double> r(24);
        for (std::size_t i = 0; i < r.size(); ++i) r[i] = static_cast<double>((i * 7 + run) % 5) / 4.0;
        const auto spec = RegularizedSpec::with_rewards(3, 2, 4, r, 0.5, 0.5);
        const auto pi = support::random_policy(3, 2, 4, run + 10);
        const auto est = mc_return_variance(mdp, spec, pi, 100000, run + 20);
        const double exact = variance_bellman(mdp, spec, pi).v(0, 0);
        CHECK(std::abs(est.variance - exact) <= 4.0 * est.variance_stderr);
    }
}

TEST_CASE("Monte Carlo estimates are reproducible") {
    const auto mdp = random_mdp(3, 2, 3, 4, 1.0);
    const auto spec = RegularizedSpec::mtee(3, 2, 3);
    const auto pi = MarkovPolicy::uniform(3, 2, 3);
    const auto a = mc_return_variance(mdp, spec, pi, 1000, 5), b = mc_return_variance(mdp, spec, pi, 1000, 5);
    CHECK(a.variance == b.variance);
    CHECK(a.mean == b.mean);
    CHECK_THROWS_AS(mc_return_variance(mdp, spec, pi, 99, 5), std::invalid_argument);
}

TEST_CASE("true gap is zero for the optimal policy and positive otherwise") {
    const auto mdp = random_mdp(3, 2, 3, 6, 0.5);
    const auto spec = RegularizedSpec::mtee(3, 2, 3);
    const auto best = solve_regularized(mdp, spec).policy;
    CHECK(std::abs(true_gap(mdp, spec, best)) < 1e-12);
    CHECK(true_gap(mdp, spec, MarkovPolicy::deterministic(3, 2, 3, std::vector<std::size_t>(9, 0))) > 0.1);
}
