#pragma once

#include <string>
#include <vector>

namespace hingepo {

// Finite MDP with dense transition tensor. Rewards are nonnegative;
// r_max is derived from the reward table, not stored in files.
struct Mdp {
  int n_states = 0;
  int n_actions = 0;
  double gamma = 0.0;
  std::vector<double> mu;          // [s]
  std::vector<double> reward;      // [s * n_actions + a]
  std::vector<double> transition;  // [(s * n_actions + a) * n_states + s2]
  double r_max = 0.0;

  double r(int s, int a) const { return reward[idx(s, a)]; }
  double p(int s, int a, int s2) const {
    return transition[static_cast<std::size_t>(idx(s, a)) *
                          static_cast<std::size_t>(n_states) +
                      static_cast<std::size_t>(s2)];
  }
  int idx(int s, int a) const { return s * n_actions + a; }

  // Renormalizes mu and transition rows (tolerating 1e-9 drift) and
  // derives r_max. Call after constructing by hand or parsing.
  void finalize();
  // Throws std::invalid_argument naming the offending field and index.
  void validate() const;
};

struct TabularPolicy {
  int n_states = 0;
  int n_actions = 0;
  std::vector<double> probs;  // [s * n_actions + a]

  double prob(int s, int a) const { return probs[s * n_actions + a]; }
  double& at(int s, int a) { return probs[s * n_actions + a]; }

  static TabularPolicy uniform(int n_states, int n_actions);
  // require_positive demands every entry > 0 (needed before ratio-style
  // classifiers or KL terms are evaluated).
  void validate(bool require_positive) const;
};

struct ValueTables {
  std::vector<double> v;    // [s]
  std::vector<double> q;    // [s * n_actions + a]
  std::vector<double> adv;  // [s * n_actions + a]
};

struct VisitationDist {
  std::vector<double> nu;           // [s]
  std::vector<double> sigma;        // [s * n_actions + a], nu(s) * pi(a|s)
  std::vector<double> sigma_tilde;  // [s * n_actions + a], nu(s) / n_actions
};

// Solves the Bellman expectation system exactly (dense LU); the returned
// tables satisfy the residual and zero-mean-advantage invariants to 1e-10.
ValueTables evaluate_policy_exact(const Mdp& mdp, const TabularPolicy& pi);

// Discounted visitation nu^T = (1-gamma) mu^T (I - gamma P_pi)^{-1} plus
// the induced state-action distributions.
VisitationDist visitation(const Mdp& mdp, const TabularPolicy& pi);

// nu*-weighted value of pi: sum_s nu*(s) V^pi(s).
double performance(const Mdp& mdp, const TabularPolicy& pi,
                   const VisitationDist& nu_star);

struct ValueIterationResult {
  TabularPolicy pi_star;  // greedy, lowest-index tie-break, 1e-12 smoothed
  ValueTables tables;     // exact evaluation of pi_star
  int iterations = 0;
};

// Value iteration to sup-norm residual <= tol, then exact evaluation of the
// smoothed greedy policy. Throws std::runtime_error if max_iter is hit.
ValueIterationResult value_iteration(const Mdp& mdp, double tol,
                                     int max_iter = 1000000);

// |mu.(V^{pi_prime} - V^pi) - (1-gamma)^{-1} E_{nu_{pi_prime}}[<A^pi, pi' - pi>]|.
// Exact identity; residual is pure floating-point noise.
double performance_difference_residual(const Mdp& mdp,
                                       const TabularPolicy& pi_prime,
                                       const TabularPolicy& pi);

}  // namespace hingepo
