#include "hingepo/emda.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>

namespace hingepo {

void EmdaConfig::validate() const {
  if (!(eta > 0.0)) throw std::invalid_argument("emda step size must be > 0");
  if (k_max < 1) throw std::invalid_argument("emda iteration count must be >= 1");
}

std::vector<double> emda_step(const std::vector<double>& theta,
                              const std::vector<double>& g, double eta,
                              int* clamp_warnings) {
  if (theta.size() != g.size())
    throw std::invalid_argument("gradient/row size mismatch");
  if (!(eta > 0.0)) throw std::invalid_argument("emda step size must be > 0");

  bool all_zero = true;
  for (double gi : g) all_zero = all_zero && gi == 0.0;
  if (all_zero) return theta;

  int warnings = 0;
  std::vector<double> out(theta.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < theta.size(); ++i) {
    if (!(theta[i] > 0.0))
      throw std::invalid_argument("emda row must be strictly positive");
    double gi = g[i];
    if (std::abs(gi) > 1e6) {
      gi = gi > 0.0 ? 1e6 : -1e6;
      ++warnings;
    }
    double e = -eta * gi;
    if (e > 700.0 || e < -700.0) {
      e = std::clamp(e, -700.0, 700.0);
      ++warnings;
    }
    out[i] = theta[i] * std::exp(e);
    if (out[i] < 1e-300) {
      out[i] = 1e-300;
      ++warnings;
    }
    sum += out[i];
  }
  for (auto& v : out) v /= sum;
  if (clamp_warnings) *clamp_warnings += warnings;
  return out;
}

EmdaResult run_emda(const TabularPolicy& pi_t, const Batch& batch,
                    const std::vector<double>& adv, const HingeLossSpec& spec,
                    const EmdaConfig& cfg) {
  cfg.validate();
  spec.validate();
  pi_t.validate(/*require_positive=*/true);
  const int A = pi_t.n_actions;
  if (adv.size() != pi_t.probs.size())
    throw std::invalid_argument("advantage table has wrong shape");

  // Group pairs by state; tabular schedules emit one pair per state, the
  // neural loop may update several actions of a sampled state at once.
  std::map<int, std::vector<int>> by_state;  // state -> indices into pairs
  for (std::size_t i = 0; i < batch.pairs.size(); ++i) {
    const auto& p = batch.pairs[i];
    if (p.s < 0 || p.s >= pi_t.n_states || p.a < 0 || p.a >= A)
      throw std::invalid_argument("batch pair out of range");
    if (p.adv == 0.0)
      throw std::invalid_argument(
          "zero-advantage pair in batch (must be filtered)");
    by_state[p.s].push_back(static_cast<int>(i));
  }

  EmdaResult res;
  res.target = pi_t;
  res.c_table.assign(pi_t.probs.size(), 0.0);
  int clipped_at_end = 0;

  for (const auto& [s, idxs] : by_state) {
    std::vector<double> row(A);
    for (int a = 0; a < A; ++a) row[a] = pi_t.prob(s, a);
    std::vector<double> theta = row;

    for (int k = 0; k < cfg.k_max; ++k) {
      std::vector<double> g(A, 0.0);
      for (int i : idxs) {
        const auto& p = batch.pairs[i];
        double gi = subgradient(spec, theta[p.a], row[p.a], p.adv);
        if (std::abs(gi) > 1e6) {
          // Clamp here so the C table matches the update actually applied.
          gi = gi > 0.0 ? 1e6 : -1e6;
          ++res.clamp_warnings;
        }
        g[p.a] = gi;
        res.grad_log.push_back({k, s, p.a, gi, gi != 0.0});
        res.c_table[s * A + p.a] -= cfg.eta * gi / p.adv;
        if (k == cfg.k_max - 1 && gi == 0.0) ++clipped_at_end;
      }
      theta = emda_step(theta, g, cfg.eta, &res.clamp_warnings);
    }
    for (int a = 0; a < A; ++a) res.target.at(s, a) = theta[a];
  }

  if (!batch.pairs.empty())
    res.clip_fraction = static_cast<double>(clipped_at_end) /
                        static_cast<double>(batch.pairs.size());
  return res;
}

double closed_form_residual(const EmdaResult& result,
                            const TabularPolicy& pi_t, const Batch& batch,
                            const std::vector<double>& adv,
                            const std::vector<double>& base_log_energy) {
  const int A = pi_t.n_actions;
  if (base_log_energy.size() != pi_t.probs.size() ||
      adv.size() != pi_t.probs.size())
    throw std::invalid_argument("table shape mismatch");

  std::vector<char> seen(static_cast<std::size_t>(pi_t.n_states), 0);
  double worst = 0.0;
  for (const auto& p : batch.pairs) {
    if (!seen[p.s]) {
      seen[p.s] = 1;
      // log-softmax of C o A + base over this state's actions
      double mx = -std::numeric_limits<double>::infinity();
      std::vector<double> e(A);
      for (int a = 0; a < A; ++a) {
        e[a] = result.c_table[p.s * A + a] * adv[p.s * A + a] +
               base_log_energy[p.s * A + a];
        mx = std::max(mx, e[a]);
      }
      double z = 0.0;
      for (int a = 0; a < A; ++a) z += std::exp(e[a] - mx);
      double log_z = mx + std::log(z);
      for (int a = 0; a < A; ++a) {
        double lhs = std::log(result.target.prob(p.s, a));
        worst = std::max(worst, std::abs(lhs - (e[a] - log_z)));
      }
    }
  }
  return worst;
}

double improvement_condition(const TabularPolicy& pi_hat, const Batch& batch,
                             const std::vector<double>& adv, int n_actions) {
  std::vector<char> seen(static_cast<std::size_t>(pi_hat.n_states), 0);
  double worst = std::numeric_limits<double>::infinity();
  for (const auto& p : batch.pairs) {
    if (seen[p.s]) continue;
    seen[p.s] = 1;
    double acc = 0.0;
    for (int a = 0; a < n_actions; ++a)
      acc += pi_hat.prob(p.s, a) * adv[p.s * n_actions + a];
    worst = std::min(worst, acc);
  }
  return worst;
}

}  // namespace hingepo
