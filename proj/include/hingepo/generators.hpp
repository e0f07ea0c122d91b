#pragma once

#include <cstdint>

#include "hingepo/mdp.hpp"

namespace hingepo {

// n-state chain, 2 actions (0 = left, 1 = right), deterministic moves
// clamped at the ends, reward 1 in the rightmost state for both actions,
// start at state 0. n = 1 degenerates to a self-loop bandit.
Mdp make_chain(int n, double gamma);

// w x h grid, 4 actions (up, down, left, right), deterministic moves with
// wall clamping, reward 1 in the bottom-right cell (not absorbing), start
// at the top-left cell. State index = y * w + x.
Mdp make_gridworld(int w, int h, double gamma);

// Dirichlet(1,...,1) transition rows, Uniform[0,1] rewards, Dirichlet mu.
Mdp make_random(int n_states, int n_actions, double gamma, std::uint64_t seed);

}  // namespace hingepo
