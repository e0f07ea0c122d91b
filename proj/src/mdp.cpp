#include "hingepo/mdp.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>

namespace hingepo {

namespace {

std::string label(const char* field, int i) {
  return std::string(field) + "[" + std::to_string(i) + "]";
}
std::string label(const char* field, int i, int j) {
  return std::string(field) + "[" + std::to_string(i) + "][" +
         std::to_string(j) + "]";
}

// P_pi as a dense matrix, row s -> sum_a pi(a|s) P(.|s,a).
Eigen::MatrixXd policy_transition(const Mdp& mdp, const TabularPolicy& pi) {
  const int S = mdp.n_states, A = mdp.n_actions;
  Eigen::MatrixXd P = Eigen::MatrixXd::Zero(S, S);
  for (int s = 0; s < S; ++s)
    for (int a = 0; a < A; ++a) {
      double w = pi.prob(s, a);
      if (w == 0.0) continue;
      for (int s2 = 0; s2 < S; ++s2) P(s, s2) += w * mdp.p(s, a, s2);
    }
  return P;
}

}  // namespace

void Mdp::finalize() {
  const int S = n_states, A = n_actions;
  if (S < 1 || A < 1) throw std::invalid_argument("n_states/n_actions must be >= 1");
  if (!(gamma > 0.0) || !(gamma < 1.0))
    throw std::invalid_argument("gamma must lie in (0, 1)");
  if (static_cast<int>(mu.size()) != S)
    throw std::invalid_argument("mu has length " + std::to_string(mu.size()) +
                                ", expected n_states = " + std::to_string(S));
  if (static_cast<int>(reward.size()) != S * A)
    throw std::invalid_argument("reward table has wrong shape");
  if (transition.size() != static_cast<std::size_t>(S) * A * S)
    throw std::invalid_argument("transition tensor has wrong shape");

  double mu_sum = 0.0;
  for (int s = 0; s < S; ++s) {
    if (!(mu[s] >= 0.0))
      throw std::invalid_argument(label("mu", s) + " is negative");
    mu_sum += mu[s];
  }
  if (std::abs(mu_sum - 1.0) > 1e-9)
    throw std::invalid_argument("mu sums to " + std::to_string(mu_sum) +
                                ", expected 1");
  // Skip ulp-scale deviations so save -> load -> finalize is bitwise
  // idempotent; one division already lands within this band.
  if (std::abs(mu_sum - 1.0) > 1e-13)
    for (auto& v : mu) v /= mu_sum;

  r_max = 0.0;
  for (int s = 0; s < S; ++s)
    for (int a = 0; a < A; ++a) {
      double rw = reward[idx(s, a)];
      if (!std::isfinite(rw) || rw < 0.0)
        throw std::invalid_argument(label("reward", s, a) +
                                    " must be finite and >= 0");
      r_max = std::max(r_max, rw);
    }

  for (int s = 0; s < S; ++s)
    for (int a = 0; a < A; ++a) {
      double* row = &transition[static_cast<std::size_t>(idx(s, a)) * S];
      double sum = 0.0;
      for (int s2 = 0; s2 < S; ++s2) {
        if (!(row[s2] >= -1e-12) || !std::isfinite(row[s2]))
          throw std::invalid_argument(label("transition", s, a) + "[" +
                                      std::to_string(s2) + "] is negative");
        if (row[s2] < 0.0) row[s2] = 0.0;
        sum += row[s2];
      }
      if (std::abs(sum - 1.0) > 1e-9)
        throw std::invalid_argument(label("transition", s, a) + " sums to " +
                                    std::to_string(sum) + ", expected 1");
      if (std::abs(sum - 1.0) > 1e-13)
        for (int s2 = 0; s2 < S; ++s2) row[s2] /= sum;
    }
}

void Mdp::validate() const {
  Mdp copy = *this;
  copy.finalize();  // reuses the checks; discards the renormalized copy
}

TabularPolicy TabularPolicy::uniform(int n_states, int n_actions) {
  TabularPolicy pi;
  pi.n_states = n_states;
  pi.n_actions = n_actions;
  pi.probs.assign(static_cast<std::size_t>(n_states) * n_actions,
                  1.0 / n_actions);
  return pi;
}

void TabularPolicy::validate(bool require_positive) const {
  if (static_cast<int>(probs.size()) != n_states * n_actions)
    throw std::invalid_argument("policy table has wrong shape");
  for (int s = 0; s < n_states; ++s) {
    double sum = 0.0;
    for (int a = 0; a < n_actions; ++a) {
      double p = prob(s, a);
      if (!(p >= 0.0) || !std::isfinite(p))
        throw std::invalid_argument(label("policy", s, a) + " is invalid");
      if (require_positive && !(p > 0.0))
        throw std::invalid_argument(label("policy", s, a) +
                                    " must be strictly positive");
      sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-12)
      throw std::invalid_argument(label("policy row", s) + " sums to " +
                                  std::to_string(sum) + ", expected 1");
  }
}

ValueTables evaluate_policy_exact(const Mdp& mdp, const TabularPolicy& pi) {
  const int S = mdp.n_states, A = mdp.n_actions;
  Eigen::MatrixXd P = policy_transition(mdp, pi);
  Eigen::VectorXd r_pi(S);
  for (int s = 0; s < S; ++s) {
    double acc = 0.0;
    for (int a = 0; a < A; ++a) acc += pi.prob(s, a) * mdp.r(s, a);
    r_pi(s) = acc;
  }
  Eigen::MatrixXd M = Eigen::MatrixXd::Identity(S, S) - mdp.gamma * P;
  Eigen::VectorXd v = M.partialPivLu().solve(r_pi);

  ValueTables t;
  t.v.assign(v.data(), v.data() + S);
  t.q.resize(static_cast<std::size_t>(S) * A);
  t.adv.resize(static_cast<std::size_t>(S) * A);
  for (int s = 0; s < S; ++s)
    for (int a = 0; a < A; ++a) {
      double q = mdp.r(s, a);
      for (int s2 = 0; s2 < S; ++s2) q += mdp.gamma * mdp.p(s, a, s2) * t.v[s2];
      t.q[mdp.idx(s, a)] = q;
      t.adv[mdp.idx(s, a)] = q - t.v[s];
    }

  double bound = mdp.r_max / (1.0 - mdp.gamma);
  for (int s = 0; s < S; ++s) {
    double mean_q = 0.0, mean_adv = 0.0;
    for (int a = 0; a < A; ++a) {
      mean_q += pi.prob(s, a) * t.q[mdp.idx(s, a)];
      mean_adv += pi.prob(s, a) * t.adv[mdp.idx(s, a)];
    }
    if (std::abs(mean_q - t.v[s]) > 1e-10)
      throw std::runtime_error("Bellman residual above tolerance at state " +
                               std::to_string(s));
    if (std::abs(mean_adv) > 1e-10)
      throw std::runtime_error("advantage not zero-mean at state " +
                               std::to_string(s));
    if (std::abs(t.v[s]) > bound * (1.0 + 1e-9) + 1e-9)
      throw std::runtime_error("value exceeds r_max/(1-gamma) at state " +
                               std::to_string(s));
  }
  return t;
}

VisitationDist visitation(const Mdp& mdp, const TabularPolicy& pi) {
  const int S = mdp.n_states, A = mdp.n_actions;
  Eigen::MatrixXd P = policy_transition(mdp, pi);
  Eigen::Map<const Eigen::VectorXd> mu(mdp.mu.data(), S);
  Eigen::MatrixXd M =
      Eigen::MatrixXd::Identity(S, S) - mdp.gamma * P.transpose();
  Eigen::VectorXd nu = (1.0 - mdp.gamma) * M.partialPivLu().solve(mu);

  VisitationDist d;
  d.nu.assign(nu.data(), nu.data() + S);
  d.sigma.resize(static_cast<std::size_t>(S) * A);
  d.sigma_tilde.resize(static_cast<std::size_t>(S) * A);
  double total = 0.0;
  for (int s = 0; s < S; ++s) {
    if (d.nu[s] < 0.0 && d.nu[s] > -1e-12) d.nu[s] = 0.0;
    total += d.nu[s];
    for (int a = 0; a < A; ++a) {
      d.sigma[mdp.idx(s, a)] = d.nu[s] * pi.prob(s, a);
      d.sigma_tilde[mdp.idx(s, a)] = d.nu[s] / A;
    }
  }
  if (std::abs(total - 1.0) > 1e-10)
    throw std::runtime_error("visitation does not sum to 1");
  return d;
}

double performance(const Mdp& mdp, const TabularPolicy& pi,
                   const VisitationDist& nu_star) {
  ValueTables t = evaluate_policy_exact(mdp, pi);
  double acc = 0.0;
  for (int s = 0; s < mdp.n_states; ++s) acc += nu_star.nu[s] * t.v[s];
  return acc;
}

ValueIterationResult value_iteration(const Mdp& mdp, double tol,
                                     int max_iter) {
  if (!(tol > 0.0)) throw std::invalid_argument("tol must be > 0");
  const int S = mdp.n_states, A = mdp.n_actions;
  std::vector<double> v(S, 0.0), v_next(S, 0.0);
  int it = 0;
  for (;; ++it) {
    if (it >= max_iter)
      throw std::runtime_error("value iteration failed to reach tolerance " +
                               std::to_string(tol) + " in " +
                               std::to_string(max_iter) + " iterations");
    double resid = 0.0;
    for (int s = 0; s < S; ++s) {
      double best = -1.0;
      for (int a = 0; a < A; ++a) {
        double q = mdp.r(s, a);
        for (int s2 = 0; s2 < S; ++s2) q += mdp.gamma * mdp.p(s, a, s2) * v[s2];
        if (q > best) best = q;
      }
      v_next[s] = best;
      resid = std::max(resid, std::abs(v_next[s] - v[s]));
    }
    v.swap(v_next);
    if (resid <= tol) break;
  }

  ValueIterationResult res;
  res.iterations = it + 1;
  res.pi_star.n_states = S;
  res.pi_star.n_actions = A;
  res.pi_star.probs.assign(static_cast<std::size_t>(S) * A, 0.0);
  const double smooth = 1e-12;
  for (int s = 0; s < S; ++s) {
    int best_a = 0;
    double best = -1.0;
    for (int a = 0; a < A; ++a) {
      double q = mdp.r(s, a);
      for (int s2 = 0; s2 < S; ++s2) q += mdp.gamma * mdp.p(s, a, s2) * v[s2];
      if (q > best) {
        best = q;
        best_a = a;
      }
    }
    for (int a = 0; a < A; ++a)
      res.pi_star.at(s, a) = (a == best_a ? 1.0 - smooth : 0.0) + smooth / A;
  }
  res.tables = evaluate_policy_exact(mdp, res.pi_star);
  return res;
}

double performance_difference_residual(const Mdp& mdp,
                                       const TabularPolicy& pi_prime,
                                       const TabularPolicy& pi) {
  ValueTables tp = evaluate_policy_exact(mdp, pi_prime);
  ValueTables t = evaluate_policy_exact(mdp, pi);
  VisitationDist d = visitation(mdp, pi_prime);

  double lhs = 0.0;
  for (int s = 0; s < mdp.n_states; ++s)
    lhs += mdp.mu[s] * (tp.v[s] - t.v[s]);

  double rhs = 0.0;
  for (int s = 0; s < mdp.n_states; ++s) {
    double inner = 0.0;
    for (int a = 0; a < mdp.n_actions; ++a)
      inner += t.adv[mdp.idx(s, a)] * (pi_prime.prob(s, a) - pi.prob(s, a));
    rhs += d.nu[s] * inner;
  }
  rhs /= 1.0 - mdp.gamma;
  return std::abs(lhs - rhs);
}

}  // namespace hingepo
