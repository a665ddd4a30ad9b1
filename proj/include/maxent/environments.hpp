#pragma once

#include <cstddef>
#include <cstdint>

#include "maxent/core.hpp"

namespace maxent {

/// Chain of `length` states with actions {0 = left, 1 = right}. With
/// probability `slip` the agent moves opposite to the chosen direction.
/// Moving off an end leaves the agent in place. Starts at (length - 1) / 2.
///
/// With `resampling`, any action taken at the left end sends the agent to a
/// uniformly random state.
TabularMDP double_chain(std::size_t length, double slip, std::size_t horizon,
                        bool resampling = false);

/// width x height grid, state index y * width + x, actions
/// {0 = left, 1 = right, 2 = up, 3 = down}. The intended move happens with
/// probability 1 - slip; each of the three other directions gets slip / 3.
/// Off-grid moves stay in place. Starts at the middle cell.
TabularMDP grid_world(std::size_t width, std::size_t height, double slip, std::size_t horizon);

/// Transition rows drawn from a symmetric Dirichlet(concentration); s_1 = 0.
TabularMDP random_mdp(std::size_t num_states, std::size_t num_actions, std::size_t horizon,
                      std::uint64_t seed, double concentration);

/// Every transition is a point mass: action a from state s moves to
/// (s + a) mod S at every step. Used for deterministic-MDP checks.
TabularMDP deterministic_ring(std::size_t num_states, std::size_t num_actions,
                              std::size_t horizon);

}  // namespace maxent
