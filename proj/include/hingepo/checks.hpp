#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hingepo/emda.hpp"
#include "hingepo/hinge.hpp"
#include "hingepo/mdp.hpp"

namespace hingepo {

struct CheckReport {
  std::string name;
  double residual = 0.0;
  double tolerance = 0.0;
  bool passed = false;  // residual <= tolerance
  std::string context;  // seed, trial counts, exclusions
};

// Exact RN-derivative diagnostics between pi_star's and pi_t's visitation
// measures; c_infinity = max_s nu*(s)/nu_t(s) and is reported as +inf with
// the flag cleared when some nu_t(s) = 0 < nu*(s).
struct ConcentrabilityReport {
  double phi_star_t = 0.0;
  double psi_star_t = 0.0;
  double c_infinity = 0.0;
  bool c_infinity_finite = true;
};

// Clipped-surrogate vs weighted-hinge gradients are exact negatives of each
// other away from the indicator boundaries. Random interior configurations;
// boundary-adjacent pairs are dropped and counted, never failed. Two
// reports: the analytic route (tolerance 1e-9) and the central-difference
// route, whose looser 1e-5 tolerance absorbs cancellation noise.
std::vector<CheckReport> check_gradient_equivalence(int n_trials,
                                                    std::uint64_t seed);

// Iterative EMDA output matches the softmax closed form exp(C o A) o pi_t.
CheckReport check_closed_form(int n_trials, std::uint64_t seed);

// mu-weighted value difference equals the discounted-visitation advantage
// inner product (exact identity; residual is fp noise).
CheckReport check_performance_difference(int n_trials, std::uint64_t seed);

// Stepwise KL-potential inequality along an idealized run where each new
// energy table is set exactly to the EMDA closed form (zero approximation
// error). Checks every (state, iteration); residual is the max violation.
CheckReport check_kl_potential(const Mdp& mdp, int n_iters,
                               const HingeLossSpec& spec,
                               const EmdaConfig& cfg,
                               const std::string& context);

ConcentrabilityReport concentrability(const Mdp& mdp,
                                      const TabularPolicy& pi_star,
                                      const TabularPolicy& pi_t);

// Invariant battery for the concentrability diagnostics (nonnegativity,
// c_infinity >= 1, identity cases).
CheckReport check_concentrability(int n_trials, std::uint64_t seed);

// suite: grad-equiv | closed-form | perf-diff | kl | concentrability | all.
// Throws std::invalid_argument for an unknown suite name.
std::vector<CheckReport> run_check_suite(const std::string& suite,
                                         std::uint64_t seed);

bool all_passed(const std::vector<CheckReport>& reports);
std::string reports_to_json(const std::vector<CheckReport>& reports);

}  // namespace hingepo
