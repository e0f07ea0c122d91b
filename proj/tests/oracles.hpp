#pragma once

#include <cstdint>
#include <vector>

#include "hingepo/mdp.hpp"

// Independent reference implementations the unit tests compare the library
// against. Deliberately built on std::mt19937_64 and hand-rolled Gaussian
// elimination so they share no code with the production paths.
namespace hingepo::testing {

struct McEstimate {
  double mean = 0.0;
  double se = 0.0;    // standard error of the mean
  double bias = 0.0;  // truncation bias bound
};

McEstimate mc_state_value(const Mdp& mdp, const TabularPolicy& pi, int s0,
                          int n_episodes, std::uint64_t seed);

// Empirical discounted state visitation via geometric-horizon restarts.
std::vector<double> mc_visitation(const Mdp& mdp, const TabularPolicy& pi,
                                  int n_samples, std::uint64_t seed);

// Per-state max of V^pi over all |A|^|S| deterministic policies, each
// evaluated with plain Gaussian elimination.
std::vector<double> brute_force_vstar(const Mdp& mdp);

// V^pi by Gaussian elimination (no Eigen).
std::vector<double> solve_v(const Mdp& mdp, const TabularPolicy& pi);

}  // namespace hingepo::testing
