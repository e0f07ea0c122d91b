#pragma once

#include <vector>

#include "hingepo/hinge.hpp"
#include "hingepo/mdp.hpp"

namespace hingepo {

struct EmdaConfig {
  double eta = 0.01;
  int k_max = 5;

  void validate() const;  // eta > 0, k_max >= 1
};

struct EmdaGradLogEntry {
  int k = 0;
  int s = 0;
  int a = 0;
  double g = 0.0;
  bool active = false;  // indicator value when g was computed
};

struct EmdaResult {
  TabularPolicy target;         // pi_hat; untouched states copy pi_t
  std::vector<double> c_table;  // [s*A + a]; 0 for untouched or A = 0 pairs
  std::vector<EmdaGradLogEntry> grad_log;
  int clamp_warnings = 0;

  // Share of batch pairs whose indicator was off at the last inner
  // iteration (they finished clipped). 0 for an empty batch.
  double clip_fraction = 0.0;
};

// One multiplicative-weights step on a single state's action distribution:
// theta' = (exp(-eta*g) o theta) / <exp(-eta*g), theta>. An all-zero g
// returns theta bitwise unchanged. Gradients are clamped to |g| <= 1e6 and
// exponents to +-700, and updated rows are floored at 1e-300 before
// renormalizing, so the output stays strictly positive in IEEE double;
// every intervention bumps *clamp_warnings.
std::vector<double> emda_step(const std::vector<double>& theta,
                              const std::vector<double>& g, double eta,
                              int* clamp_warnings = nullptr);

// K inner iterations of (subgradient -> emda_step) per batch state, with
// the advantage frozen. adv is the full |S|x|A| table. Batch pairs sharing
// a state are updated jointly (one gradient row); actions absent from the
// batch get g = 0. C accumulates -eta * g / A per pair.
EmdaResult run_emda(const TabularPolicy& pi_t, const Batch& batch,
                    const std::vector<double>& adv, const HingeLossSpec& spec,
                    const EmdaConfig& cfg);

// Max over batch pairs of |log pi_hat(a|s) - log softmax(C o A + base)(a|s)|
// where base is the log-energy the run started from (log pi_t in the
// tabular case). Verifies the closed-form target policy.
double closed_form_residual(const EmdaResult& result,
                            const TabularPolicy& pi_t, const Batch& batch,
                            const std::vector<double>& adv,
                            const std::vector<double>& base_log_energy);

// min over batch states (with a nonzero-advantage action) of
// sum_a pi_hat(a|s) A(s,a); strictly positive when pi_hat came from
// run_emda with the true advantage.
double improvement_condition(const TabularPolicy& pi_hat,
                             const Batch& batch,
                             const std::vector<double>& adv, int n_actions);

}  // namespace hingepo
