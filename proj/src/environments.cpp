#include "maxent/environments.hpp"

#include <random>
#include <stdexcept>
#include <vector>

namespace maxent {

namespace {

std::vector<double> replicate_over_steps(const std::vector<double>& one_step,
                                         std::size_t horizon) {
    std::vector<double> p;
    p.reserve(one_step.size() * horizon);
    for (std::size_t h = 0; h < horizon; ++h) p.insert(p.end(), one_step.begin(), one_step.end());
    return p;
}

}  // namespace

TabularMDP double_chain(std::size_t length, double slip, std::size_t horizon, bool resampling) {
    if (length < 3 || length % 2 == 0)
        throw std::invalid_argument("double_chain: length must be odd and >= 3");
    if (!(slip >= 0.0 && slip < 0.5))
        throw std::invalid_argument("double_chain: slip must lie in [0, 0.5)");
    if (horizon == 0) throw std::invalid_argument("double_chain: horizon must be positive");
    const std::size_t S = length, A = 2;
    std::vector<double> p(S * A * S, 0.0);
    auto at = [&](std::size_t s, std::size_t a, std::size_t n) -> double& {
        return p[(s * A + a) * S + n];
    };
    for (std::size_t s = 0; s < S; ++s) {
        const std::size_t left = s == 0 ? 0 : s - 1;
        const std::size_t right = s + 1 == S ? s : s + 1;
        for (std::size_t a = 0; a < A; ++a) {
            if (resampling && s == 0) {
                for (std::size_t n = 0; n < S; ++n) at(s, a, n) = 1.0 / static_cast<double>(S);
                continue;
            }
            const std::size_t intended = a == 0 ? left : right;
            const std::size_t opposite = a == 0 ? right : left;
            at(s, a, intended) += 1.0 - slip;
            at(s, a, opposite) += slip;
        }
    }
    return {S, A, horizon, (length - 1) / 2, replicate_over_steps(p, horizon)};
}

TabularMDP grid_world(std::size_t width, std::size_t height, double slip, std::size_t horizon) {
    if (width < 2 || height < 2)
        throw std::invalid_argument("grid_world: width and height must be >= 2");
    if (!(slip >= 0.0 && slip < 1.0))
        throw std::invalid_argument("grid_world: slip must lie in [0, 1)");
    if (horizon == 0) throw std::invalid_argument("grid_world: horizon must be positive");
    const std::size_t S = width * height, A = 4;
    std::vector<double> p(S * A * S, 0.0);
    auto move = [&](std::size_t x, std::size_t y, std::size_t dir) {
        switch (dir) {
            case 0: x = x == 0 ? x : x - 1; break;
            case 1: x = x + 1 == width ? x : x + 1; break;
            case 2: y = y + 1 == height ? y : y + 1; break;
            default: y = y == 0 ? y : y - 1; break;
        }
        return y * width + x;
    };
    for (std::size_t y = 0; y < height; ++y)
        for (std::size_t x = 0; x < width; ++x) {
            const std::size_t s = y * width + x;
            for (std::size_t a = 0; a < A; ++a)
                for (std::size_t dir = 0; dir < A; ++dir) {
                    const double mass = dir == a ? 1.0 - slip : slip / 3.0;
                    p[(s * A + a) * S + move(x, y, dir)] += mass;
                }
        }
    const std::size_t start = ((height - 1) / 2) * width + (width - 1) / 2;
    return {S, A, horizon, start, replicate_over_steps(p, horizon)};
}

TabularMDP random_mdp(std::size_t S, std::size_t A, std::size_t H, std::uint64_t seed,
                      double concentration) {
    if (S == 0 || A == 0 || H == 0) throw std::invalid_argument("random_mdp: sizes must be >= 1");
    if (!(concentration > 0.0))
        throw std::invalid_argument("random_mdp: concentration must be positive");
    std::mt19937_64 engine(seed);
    std::gamma_distribution<double> gamma(concentration, 1.0);
    std::vector<double> p(H * S * A * S);
    for (std::size_t row = 0; row < H * S * A; ++row) {
        double* out = p.data() + row * S;
        double total = 0.0;
        for (std::size_t n = 0; n < S; ++n) {
            out[n] = gamma(engine);
            total += out[n];
        }
        if (total <= 0.0) {
            // All draws underflowed: put the mass on one uniformly chosen state.
            std::fill(out, out + S, 0.0);
            out[engine() % S] = 1.0;
            continue;
        }
        for (std::size_t n = 0; n < S; ++n) out[n] /= total;
    }
    return {S, A, H, 0, std::move(p)};
}

TabularMDP deterministic_ring(std::size_t S, std::size_t A, std::size_t H) {
    std::vector<double> p(H * S * A * S, 0.0);
    for (std::size_t h = 0; h < H; ++h)
        for (std::size_t s = 0; s < S; ++s)
            for (std::size_t a = 0; a < A; ++a) p[((h * S + s) * A + a) * S + (s + a) % S] = 1.0;
    return {S, A, H, 0, std::move(p)};
}

}  // namespace maxent
