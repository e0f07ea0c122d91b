#include "hingepo/checks.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "hingepo/generators.hpp"
#include "hingepo/neural.hpp"
#include "hingepo/rng.hpp"

namespace hingepo {

namespace {

CheckReport make_report(std::string name, double residual, double tolerance,
                        std::string context) {
  CheckReport r;
  r.name = std::move(name);
  r.residual = residual;
  r.tolerance = tolerance;
  r.passed = residual <= tolerance;
  r.context = std::move(context);
  return r;
}

TabularPolicy random_policy(int S, int A, Rng& rng) {
  TabularPolicy pi;
  pi.n_states = S;
  pi.n_actions = A;
  pi.probs.resize(static_cast<std::size_t>(S) * A);
  for (int s = 0; s < S; ++s) {
    std::vector<double> row = rng.dirichlet_flat(A);
    for (int a = 0; a < A; ++a) pi.probs[s * A + a] = row[a];
  }
  return pi;
}

double kl_div(const double* p, const double* q, int n) {
  double acc = 0.0;
  for (int i = 0; i < n; ++i)
    if (p[i] > 0.0) acc += p[i] * (std::log(p[i]) - std::log(q[i]));
  return acc;
}

}  // namespace

std::vector<CheckReport> check_gradient_equivalence(int n_trials,
                                                    std::uint64_t seed) {
  Rng rng = Rng(seed).split(0x6e1);
  HingeLossSpec spec;
  spec.classifier = ClassifierKind::Ratio;
  spec.weights = WeightScheme::AbsAdvantage;
  double worst_analytic = 0.0, worst_fd = 0.0;
  int skipped_pairs = 0, skipped_trials = 0, pairs_checked = 0;
  const double kink_tol = 1e-6;
  for (int trial = 0; trial < n_trials; ++trial) {
    const int S = 1 + static_cast<int>(rng.next_below(4));
    const int A = 2 + static_cast<int>(rng.next_below(3));
    spec.margin = 0.1 + 0.4 * rng.next_double();
    TabularPolicy pi_t = random_policy(S, A, rng);
    TabularPolicy theta = random_policy(S, A, rng);
    Batch batch;
    for (int s = 0; s < S; ++s)
      for (int a = 0; a < A; ++a) {
        if (rng.next_double() < 0.5) continue;
        double adv = (rng.next_double() < 0.5 ? -1.0 : 1.0) *
                     (0.05 + 1.95 * rng.next_double());
        // keep clear of the clip boundary so the piecewise gradients are
        // well defined on both routes
        const double h =
            classifier_value(spec.classifier, theta.prob(s, a), pi_t.prob(s, a));
        const double sgn = adv > 0.0 ? 1.0 : -1.0;
        if (std::abs(h * sgn - spec.margin) < 4.0 * kink_tol) {
          ++skipped_pairs;
          continue;
        }
        batch.pairs.push_back({s, a, adv});
      }
    if (batch.pairs.empty()) {
      ++skipped_trials;
      continue;
    }
    GradientEquivalenceReport rep =
        gradient_equivalence(spec, batch, theta, pi_t, kink_tol);
    worst_analytic = std::max(worst_analytic, rep.max_analytic);
    worst_fd = std::max(worst_fd, rep.max_fd);
    pairs_checked += rep.n_pairs;
  }
  const std::string context =
      "seed=" + std::to_string(seed) + " trials=" + std::to_string(n_trials) +
      " pairs=" + std::to_string(pairs_checked) +
      " skipped_pairs=" + std::to_string(skipped_pairs) +
      " skipped_trials=" + std::to_string(skipped_trials);
  return {make_report("grad-equiv", worst_analytic, 1e-9, context),
          make_report("grad-equiv-fd", worst_fd, 1e-5, context)};
}

CheckReport check_closed_form(int n_trials, std::uint64_t seed) {
  Rng rng = Rng(seed).split(0xc10);
  const ClassifierKind kinds[4] = {ClassifierKind::Ratio, ClassifierKind::Sub,
                                   ClassifierKind::Root, ClassifierKind::Log};
  const WeightScheme schemes[3] = {WeightScheme::Unit,
                                   WeightScheme::AbsAdvantage,
                                   WeightScheme::PolicyWeighted};
  double worst = 0.0;
  for (int trial = 0; trial < n_trials; ++trial) {
    const int S = 1 + static_cast<int>(rng.next_below(5));
    const int A = 2 + static_cast<int>(rng.next_below(3));
    HingeLossSpec spec;
    spec.classifier = kinds[rng.next_below(4)];
    spec.weights = schemes[rng.next_below(3)];
    spec.margin = 0.05 + 0.45 * rng.next_double();
    EmdaConfig cfg;
    cfg.eta = 0.005 + 0.095 * rng.next_double();
    cfg.k_max = 1 + static_cast<int>(rng.next_below(6));
    TabularPolicy pi_t = random_policy(S, A, rng);
    std::vector<double> adv(static_cast<std::size_t>(S) * A);
    for (double& v : adv)
      v = (rng.next_double() < 0.5 ? -1.0 : 1.0) *
          (0.01 + 0.99 * rng.next_double());
    Batch batch;
    for (int s = 0; s < S; ++s)
      for (int a = 0; a < A; ++a)
        if (rng.next_double() < 0.6) batch.pairs.push_back({s, a, adv[s * A + a]});
    if (batch.pairs.empty()) {
      int s = static_cast<int>(rng.next_below(S));
      int a = static_cast<int>(rng.next_below(A));
      batch.pairs.push_back({s, a, adv[s * A + a]});
    }
    EmdaResult em = run_emda(pi_t, batch, adv, spec, cfg);
    std::vector<double> base(adv.size());
    for (std::size_t i = 0; i < base.size(); ++i)
      base[i] = std::log(pi_t.probs[i]);
    worst = std::max(worst,
                     closed_form_residual(em, pi_t, batch, adv, base));
  }
  return make_report("closed-form", worst, 1e-10,
                     "seed=" + std::to_string(seed) +
                         " trials=" + std::to_string(n_trials));
}

CheckReport check_performance_difference(int n_trials, std::uint64_t seed) {
  Rng rng = Rng(seed).split(0x9d1);
  const double gammas[4] = {0.8, 0.9, 0.95, 0.99};
  double worst = 0.0;
  for (int trial = 0; trial < n_trials; ++trial) {
    const int S = 2 + static_cast<int>(rng.next_below(5));
    const int A = 2 + static_cast<int>(rng.next_below(3));
    const double gamma = gammas[rng.next_below(4)];
    Mdp mdp = make_random(S, A, gamma, rng.next_u64());
    TabularPolicy pi = random_policy(S, A, rng);
    TabularPolicy pi_prime = random_policy(S, A, rng);
    worst = std::max(worst, performance_difference_residual(mdp, pi_prime, pi));
  }
  return make_report("perf-diff", worst, 1e-9,
                     "seed=" + std::to_string(seed) +
                         " trials=" + std::to_string(n_trials));
}

CheckReport check_kl_potential(const Mdp& mdp, int n_iters,
                               const HingeLossSpec& spec,
                               const EmdaConfig& cfg,
                               const std::string& context) {
  const int S = mdp.n_states, A = mdp.n_actions;
  const TabularPolicy pi_star = value_iteration(mdp, 1e-13).pi_star;
  std::vector<double> energy(static_cast<std::size_t>(S) * A, 0.0);
  double worst = -std::numeric_limits<double>::infinity();
  for (int t = 0; t < n_iters; ++t) {
    const TabularPolicy pi_t = softmax_policy(energy, 1.0, S, A);
    const ValueTables tables = evaluate_policy_exact(mdp, pi_t);
    Batch batch;
    for (int s = 0; s < S; ++s)
      for (int a = 0; a < A; ++a)
        if (tables.adv[s * A + a] != 0.0)
          batch.pairs.push_back({s, a, tables.adv[s * A + a]});
    const EmdaResult em = run_emda(pi_t, batch, tables.adv, spec, cfg);
    std::vector<double> energy_next(energy.size());
    for (std::size_t i = 0; i < energy.size(); ++i)
      energy_next[i] = em.c_table[i] * tables.adv[i] + energy[i];
    const TabularPolicy pi_next = softmax_policy(energy_next, 1.0, S, A);

    for (int s = 0; s < S; ++s) {
      const double* star = &pi_star.probs[s * A];
      const double* cur = &pi_t.probs[s * A];
      const double* nxt = &pi_next.probs[s * A];
      const double* tgt = &em.target.probs[s * A];
      const double lhs = kl_div(star, nxt, A) - kl_div(star, cur, A);
      double t1 = 0.0, t2 = 0.0, l1 = 0.0, t4 = 0.0;
      for (int a = 0; a < A; ++a) {
        const double dlog_tgt = std::log(nxt[a]) - std::log(tgt[a]);
        const double dlog_cur = std::log(nxt[a]) - std::log(cur[a]);
        const double ca = em.c_table[s * A + a] * tables.adv[s * A + a];
        t1 += dlog_tgt * (cur[a] - star[a]);
        t2 -= ca * (star[a] - cur[a]);
        l1 += std::abs(nxt[a] - cur[a]);
        t4 -= dlog_cur * (cur[a] - nxt[a]);
      }
      const double rhs = t1 + t2 - 0.5 * l1 * l1 + t4;
      worst = std::max(worst, lhs - rhs);
    }
    energy = std::move(energy_next);
  }
  if (!std::isfinite(worst)) worst = 0.0;  // n_iters = 0 edge
  return make_report("kl-potential", worst, 1e-9, context);
}

ConcentrabilityReport concentrability(const Mdp& mdp,
                                      const TabularPolicy& pi_star,
                                      const TabularPolicy& pi_t) {
  const int S = mdp.n_states, A = mdp.n_actions;
  const VisitationDist star = visitation(mdp, pi_star);
  const VisitationDist cur = visitation(mdp, pi_t);
  ConcentrabilityReport rep;

  double phi2 = 0.0;
  for (int s = 0; s < S; ++s)
    for (int a = 0; a < A; ++a) {
      // dpi/dpi_0 against the uniform reference is |A| * pi(a|s)
      const double diff = A * pi_star.prob(s, a) - A * pi_t.prob(s, a);
      phi2 += cur.sigma_tilde[s * A + a] * diff * diff;
    }
  rep.phi_star_t = std::sqrt(phi2);

  double psi2 = 0.0;
  for (int s = 0; s < S; ++s) {
    if (cur.nu[s] <= 0.0) continue;  // sigma_t-measure zero
    const double state_ratio = star.nu[s] / cur.nu[s];
    for (int a = 0; a < A; ++a) {
      const double sig = cur.sigma[s * A + a];
      if (sig <= 0.0) continue;
      const double pair_ratio = star.sigma[s * A + a] / sig;
      psi2 += sig * (pair_ratio - state_ratio) * (pair_ratio - state_ratio);
    }
  }
  rep.psi_star_t = std::sqrt(psi2);

  double cmax = 0.0;
  bool finite = true;
  for (int s = 0; s < S; ++s) {
    if (star.nu[s] <= 0.0) continue;
    if (cur.nu[s] <= 0.0) {
      finite = false;
      continue;
    }
    cmax = std::max(cmax, star.nu[s] / cur.nu[s]);
  }
  rep.c_infinity =
      finite ? cmax : std::numeric_limits<double>::infinity();
  rep.c_infinity_finite = finite;
  return rep;
}

CheckReport check_concentrability(int n_trials, std::uint64_t seed) {
  Rng rng = Rng(seed).split(0xcf1);
  double worst = 0.0;
  for (int trial = 0; trial < n_trials; ++trial) {
    const int S = 1 + static_cast<int>(rng.next_below(5));
    const int A = 2 + static_cast<int>(rng.next_below(3));
    Mdp mdp = make_random(S, A, 0.9, rng.next_u64());
    const TabularPolicy pi_star = value_iteration(mdp, 1e-13).pi_star;
    TabularPolicy pi_t = random_policy(S, A, rng);

    ConcentrabilityReport r = concentrability(mdp, pi_star, pi_t);
    if (!std::isfinite(r.phi_star_t) || !std::isfinite(r.psi_star_t) ||
        !r.c_infinity_finite)
      worst = std::max(worst, 1.0);
    worst = std::max(worst, -r.phi_star_t);
    worst = std::max(worst, -r.psi_star_t);
    worst = std::max(worst, 1.0 - r.c_infinity);  // achievable nu: ratio >= 1
    if (S == 1) worst = std::max(worst, std::abs(r.c_infinity - 1.0));

    // pi_t = pi_star collapses both RN differences and the sup-ratio
    ConcentrabilityReport id = concentrability(mdp, pi_star, pi_star);
    worst = std::max(worst, id.psi_star_t);
    worst = std::max(worst, id.phi_star_t);
    worst = std::max(worst, std::abs(id.c_infinity - 1.0));
  }
  return make_report("concentrability", worst, 1e-9,
                     "seed=" + std::to_string(seed) +
                         " trials=" + std::to_string(n_trials));
}

std::vector<CheckReport> run_check_suite(const std::string& suite,
                                         std::uint64_t seed) {
  std::vector<CheckReport> out;
  bool all = suite == "all";
  bool known = all;
  if (all || suite == "grad-equiv") {
    for (CheckReport& r : check_gradient_equivalence(200, seed))
      out.push_back(std::move(r));
    known = true;
  }
  if (all || suite == "closed-form") {
    out.push_back(check_closed_form(200, seed));
    known = true;
  }
  if (all || suite == "perf-diff") {
    out.push_back(check_performance_difference(100, seed));
    known = true;
  }
  if (all || suite == "kl") {
    Rng rng = Rng(seed).split(0x717);
    HingeLossSpec spec;
    // Policy-weighted ratio pairing: per-step gradients stay bounded by
    // |A|, so no clamp can fire and the energy bookkeeping stays exact.
    // Unit weights blow 1/theta up once probabilities collapse, and the
    // clamped dynamics no longer match the closed form the inequality
    // is stated for.
    spec.weights = WeightScheme::PolicyWeighted;
    EmdaConfig cfg;
    cfg.eta = 0.05;
    cfg.k_max = 5;
    for (int i = 0; i < 5; ++i) {
      Mdp mdp = make_random(4, 3, 0.9, rng.next_u64());
      out.push_back(check_kl_potential(
          mdp, 10, spec, cfg,
          "seed=" + std::to_string(seed) + " mdp=" + std::to_string(i)));
    }
    known = true;
  }
  if (all || suite == "concentrability") {
    out.push_back(check_concentrability(50, seed));
    known = true;
  }
  if (!known)
    throw std::invalid_argument("unknown check suite: " + suite);
  return out;
}

bool all_passed(const std::vector<CheckReport>& reports) {
  for (const CheckReport& r : reports)
    if (!r.passed) return false;
  return true;
}

std::string reports_to_json(const std::vector<CheckReport>& reports) {
  nlohmann::json arr = nlohmann::json::array();
  for (const CheckReport& r : reports) {
    arr.push_back({{"name", r.name},
                   {"residual", r.residual},
                   {"tolerance", r.tolerance},
                   {"passed", r.passed},
                   {"context", r.context}});
  }
  return arr.dump(2) + "\n";
}

}  // namespace hingepo
