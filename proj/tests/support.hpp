#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "maxent/core.hpp"
#include "maxent/environments.hpp"

namespace support {

/// Policy with Dirichlet(1) rows; with `sparse`, some rows are one-hot.
inline maxent::MarkovPolicy random_policy(std::size_t S, std::size_t A, std::size_t H,
                                          std::uint64_t seed, bool sparse = false) {
    std::mt19937_64 eng(seed);
    std::gamma_distribution<double> g(1.0, 1.0);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<double> p(H * S * A);
    for (std::size_t row = 0; row < H * S; ++row) {
        double* r = p.data() + row * A;
        if (sparse && u(eng) < 0.3) {
            std::fill(r, r + A, 0.0);
            r[eng() % A] = 1.0;
            continue;
        }
        double t = 0.0;
        for (std::size_t a = 0; a < A; ++a) t += (r[a] = g(eng) + 1e-12);
        for (std::size_t a = 0; a < A; ++a) r[a] /= t;
    }
    return {S, A, H, std::move(p)};
}

struct Instance {
    maxent::TabularMDP mdp;
    maxent::MarkovPolicy policy;
};

/// Random enumerable instance with S <= 3, A <= 2, H <= 3.
inline Instance random_instance(std::uint64_t seed) {
    std::mt19937_64 eng(seed * 7919 + 13);
    const std::size_t S = 1 + eng() % 3, A = 1 + eng() % 2, H = 1 + eng() % 3;
    const double conc = (eng() % 2) ? 0.3 : 1.5;
    auto mdp = maxent::random_mdp(S, A, H, seed + 1000, conc);
    auto policy = random_policy(S, A, H, seed + 2000, eng() % 2);
    return {std::move(mdp), std::move(policy)};
}

inline double max_abs_diff(const std::vector<double>& x, const std::vector<double>& y) {
    double m = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) m = std::max(m, std::abs(x[i] - y[i]));
    return m;
}

inline maxent::Trajectory make_trajectory(std::vector<std::size_t> states,
                                          std::vector<std::size_t> actions) {
    return {std::move(states), std::move(actions)};
}

}  // namespace support
