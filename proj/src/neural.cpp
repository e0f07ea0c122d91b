#include "hingepo/neural.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>

namespace hingepo {

namespace {

std::vector<std::vector<double>> feature_table(const FeatureMap& fmap) {
  std::vector<std::vector<double>> feat;
  feat.reserve(static_cast<std::size_t>(fmap.n_states) * fmap.n_actions);
  for (int s = 0; s < fmap.n_states; ++s)
    for (int a = 0; a < fmap.n_actions; ++a) feat.push_back(fmap.encode(s, a));
  return feat;
}

// Projected SGD scaffold shared by the TD and regression fits: step size
// 1/sqrt(n), radial projection after every step, and a running sum of the
// iterates so the returned weights are the path average over steps
// 0..n-1 (the initial point counts, the post-final one does not). The
// average of points in the ball stays in the ball, so no final projection.
template <class StepFn>
TwoLayerNet run_projected_sgd(TwoLayerNet net, std::size_t n,
                              StepFn&& step_fn) {
  const double eta = 1.0 / std::sqrt(static_cast<double>(n));
  const double inv_sqrt_m = 1.0 / std::sqrt(static_cast<double>(net.m));
  std::vector<double> acc(net.alpha.size(), 0.0);
  for (std::size_t t = 0; t < n; ++t) {
    for (std::size_t j = 0; j < acc.size(); ++j) acc[j] += net.alpha[j];
    const std::pair<double, const std::vector<double>*> step = step_fn(net, t);
    const double c = eta * step.first * inv_sqrt_m;
    const std::vector<double>& x = *step.second;
    for (int i = 0; i < net.m; ++i) {
      double* row = net.row(i);
      double pre = 0.0;
      for (int j = 0; j < net.d; ++j) pre += row[j] * x[j];
      if (pre > 0.0) {
        const double ci = c * static_cast<double>(net.b[i]);
        for (int j = 0; j < net.d; ++j) row[j] -= ci * x[j];
      }
    }
    project_ball(net);
  }
  for (std::size_t j = 0; j < acc.size(); ++j)
    net.alpha[j] = acc[j] / static_cast<double>(n);
  return net;
}

void ensure_finite(const std::vector<double>& xs, const char* what,
                   int iter) {
  for (double v : xs)
    if (!std::isfinite(v))
      throw std::runtime_error(std::string("run_neural: non-finite ") + what +
                               " at iteration " + std::to_string(iter));
}

}  // namespace

TabularPolicy softmax_policy(const std::vector<double>& energy,
                             double tau_inv, int n_states, int n_actions) {
  if (static_cast<int>(energy.size()) != n_states * n_actions)
    throw std::invalid_argument("softmax_policy: energy table size mismatch");
  TabularPolicy pi;
  pi.n_states = n_states;
  pi.n_actions = n_actions;
  pi.probs.assign(energy.size(), 0.0);
  for (int s = 0; s < n_states; ++s) {
    double mx = -std::numeric_limits<double>::infinity();
    for (int a = 0; a < n_actions; ++a)
      mx = std::max(mx, energy[s * n_actions + a] * tau_inv);
    double sum = 0.0;
    for (int a = 0; a < n_actions; ++a) {
      double arg = energy[s * n_actions + a] * tau_inv - mx;
      double e = std::exp(std::max(arg, -700.0));
      if (e < 1e-300) e = 1e-300;  // keep every action strictly possible
      pi.probs[s * n_actions + a] = e;
      sum += e;
    }
    for (int a = 0; a < n_actions; ++a) pi.probs[s * n_actions + a] /= sum;
  }
  return pi;
}

TabularPolicy EnergyPolicy::table(const FeatureMap& fmap) const {
  if (!(tau > 0.0))
    throw std::invalid_argument("EnergyPolicy: tau must be positive");
  std::vector<double> energy(
      static_cast<std::size_t>(fmap.n_states) * fmap.n_actions, 0.0);
  for (int s = 0; s < fmap.n_states; ++s)
    for (int a = 0; a < fmap.n_actions; ++a)
      energy[s * fmap.n_actions + a] = forward(f, fmap.encode(s, a));
  return softmax_policy(energy, 1.0 / tau, fmap.n_states, fmap.n_actions);
}

std::vector<SampleTuple> sample_tuples(const Mdp& mdp,
                                       const TabularPolicy& pi, int n,
                                       Rng& rng) {
  const int S = mdp.n_states, A = mdp.n_actions;
  std::vector<SampleTuple> out;
  out.reserve(static_cast<std::size_t>(std::max(n, 0)));
  for (int i = 0; i < n; ++i) {
    // s ~ nu_pi: restart from mu, take a geometric(1-gamma) number of steps
    int s = rng.next_categorical(mdp.mu.data(), S);
    while (rng.next_double() < mdp.gamma) {
      int a = rng.next_categorical(&pi.probs[s * A], A);
      s = rng.next_categorical(
          &mdp.transition[static_cast<std::size_t>(mdp.idx(s, a)) * S], S);
    }
    SampleTuple t;
    t.s = s;
    t.a = rng.next_categorical(&pi.probs[s * A], A);
    t.a0 = static_cast<int>(rng.next_below(static_cast<std::uint64_t>(A)));
    t.s_next = rng.next_categorical(
        &mdp.transition[static_cast<std::size_t>(mdp.idx(s, t.a)) * S], S);
    t.a_next = rng.next_categorical(&pi.probs[t.s_next * A], A);
    out.push_back(t);
  }
  return out;
}

TwoLayerNet td_policy_eval(const Mdp& mdp, TwoLayerNet q_net,
                           const std::vector<SampleTuple>& tuples,
                           const FeatureMap& fmap) {
  if (tuples.empty())
    throw std::invalid_argument("td_policy_eval: empty tuple set");
  const std::vector<std::vector<double>> feat = feature_table(fmap);
  return run_projected_sgd(
      std::move(q_net), tuples.size(),
      [&](const TwoLayerNet& net, std::size_t t) {
        const SampleTuple& tp = tuples[t];
        const std::vector<double>& x = feat[mdp.idx(tp.s, tp.a)];
        const std::vector<double>& xn = feat[mdp.idx(tp.s_next, tp.a_next)];
        const double delta = forward(net, x) - mdp.r(tp.s, tp.a) -
                             mdp.gamma * forward(net, xn);
        return std::pair<double, const std::vector<double>*>(delta, &x);
      });
}

NetAdvantage advantage_from_q(const TwoLayerNet& q_net,
                              const TabularPolicy& pi,
                              const FeatureMap& fmap) {
  const int S = fmap.n_states, A = fmap.n_actions;
  NetAdvantage out;
  out.q.resize(static_cast<std::size_t>(S) * A);
  out.adv.resize(out.q.size());
  for (int s = 0; s < S; ++s) {
    for (int a = 0; a < A; ++a)
      out.q[s * A + a] = forward(q_net, fmap.encode(s, a));
    double v = 0.0;
    for (int a = 0; a < A; ++a) v += pi.prob(s, a) * out.q[s * A + a];
    double mean = 0.0;
    for (int a = 0; a < A; ++a) {
      out.adv[s * A + a] = out.q[s * A + a] - v;
      mean += pi.prob(s, a) * out.adv[s * A + a];
    }
    if (std::abs(mean) > 1e-10)
      throw std::runtime_error(
          "advantage_from_q: advantage not centered under pi at state " +
          std::to_string(s));
  }
  return out;
}

TwoLayerNet sgd_policy_improve(TwoLayerNet f_net,
                               const std::vector<double>& target,
                               const std::vector<SampleTuple>& tuples,
                               const FeatureMap& fmap) {
  if (tuples.empty())
    throw std::invalid_argument("sgd_policy_improve: empty tuple set");
  if (static_cast<int>(target.size()) != fmap.n_states * fmap.n_actions)
    throw std::invalid_argument("sgd_policy_improve: target size mismatch");
  const std::vector<std::vector<double>> feat = feature_table(fmap);
  const int A = fmap.n_actions;
  return run_projected_sgd(
      std::move(f_net), tuples.size(),
      [&](const TwoLayerNet& net, std::size_t t) {
        const SampleTuple& tp = tuples[t];
        const int idx = tp.s * A + tp.a0;  // regression uses the uniform leg
        const std::vector<double>& x = feat[idx];
        const double delta = forward(net, x) - target[idx];
        return std::pair<double, const std::vector<double>*>(delta, &x);
      });
}

double NeuralRunConfig::effective_eta() const {
  return sqrt_t_step ? 1.0 / std::sqrt(static_cast<double>(T)) : emda.eta;
}

void NeuralRunConfig::validate() const {
  if (T < 1) throw std::invalid_argument("neural config: T must be >= 1");
  if (t_upd < 1)
    throw std::invalid_argument("neural config: t_upd must be >= 1");
  if (m_f < 1 || m_q < 1)
    throw std::invalid_argument("neural config: net widths must be >= 1");
  if (!(r_f > 0.0) || !(r_q > 0.0))
    throw std::invalid_argument("neural config: ball radii must be positive");
  loss.validate();
  emda.validate();
}

NeuralRunRecord run_neural(const Mdp& mdp, const NeuralRunConfig& cfg) {
  cfg.validate();
  const int S = mdp.n_states, A = mdp.n_actions;
  const FeatureMap fmap{S, A};
  const std::vector<std::vector<double>> feat = feature_table(fmap);

  EmdaConfig emda_cfg = cfg.emda;
  emda_cfg.eta = cfg.effective_eta();

  Rng root(cfg.seed);
  const TwoLayerNet f0 = init_net(cfg.m_f, fmap.dim(), cfg.r_f, root.split(1));
  const TwoLayerNet q0 = init_net(cfg.m_q, fmap.dim(), cfg.r_q, root.split(2));
  const Rng tuple_root = root.split(3);

  const ValueIterationResult oracle = value_iteration(mdp, 1e-13);
  const VisitationDist nu_star = visitation(mdp, oracle.pi_star);
  const double perf_star = performance(mdp, oracle.pi_star, nu_star);

  NeuralRunRecord rec;
  rec.c_checked = (cfg.loss.classifier == ClassifierKind::Ratio &&
                   cfg.loss.weights == WeightScheme::PolicyWeighted) ||
                  (cfg.loss.classifier == ClassifierKind::Sub &&
                   cfg.loss.weights == WeightScheme::AbsAdvantage);

  const double sqrt_t = std::sqrt(static_cast<double>(cfg.T));
  TabularPolicy pi = TabularPolicy::uniform(S, A);
  TwoLayerNet f_cur = f0;  // holds f_t for t >= 1
  double tau_cur = 0.0;
  double min_gap = std::numeric_limits<double>::infinity();
  double g_cmin = std::numeric_limits<double>::infinity();
  double g_cmax = -std::numeric_limits<double>::infinity();

  for (int t = 0; t < cfg.T; ++t) {
    const double tau_next = sqrt_t / (cfg.emda.k_max * (t + 1));
    Rng rng_t = tuple_root.split(static_cast<std::uint64_t>(t));
    const std::vector<SampleTuple> tuples =
        sample_tuples(mdp, pi, cfg.t_upd, rng_t);

    const ValueTables exact = evaluate_policy_exact(mdp, pi);
    const VisitationDist vis = visitation(mdp, pi);
    double perf_t = 0.0;
    for (int s = 0; s < S; ++s) perf_t += nu_star.nu[s] * exact.v[s];
    const double gap = std::max(perf_star - perf_t, 0.0);
    min_gap = std::min(min_gap, gap);

    const TwoLayerNet q_fit = td_policy_eval(mdp, q0, tuples, fmap);
    const NetAdvantage na = advantage_from_q(q_fit, pi, fmap);
    ensure_finite(na.q, "Q estimate", t);
    double td_mse = 0.0;
    for (std::size_t i = 0; i < na.q.size(); ++i) {
      const double e = na.q[i] - exact.q[i];
      td_mse += vis.sigma[i] * e * e;
    }

    // Every distinct sampled state contributes all of its actions whose
    // estimated advantage is meaningfully nonzero.
    std::set<int> batch_states;
    for (const SampleTuple& tp : tuples) batch_states.insert(tp.s);
    Batch batch;
    for (int s : batch_states)
      for (int a = 0; a < A; ++a)
        if (std::abs(na.adv[s * A + a]) >= 1e-12)
          batch.pairs.push_back({s, a, na.adv[s * A + a]});

    const EmdaResult em = run_emda(pi, batch, na.adv, cfg.loss, emda_cfg);
    rec.clamp_warnings += em.clamp_warnings;
    double c_min_it = 0.0, c_max_it = 0.0;
    if (!batch.pairs.empty()) {
      c_min_it = std::numeric_limits<double>::infinity();
      c_max_it = -c_min_it;
      for (const BatchPair& p : batch.pairs) {
        const double c = em.c_table[p.s * A + p.a];
        c_min_it = std::min(c_min_it, c);
        c_max_it = std::max(c_max_it, c);
      }
      g_cmin = std::min(g_cmin, c_min_it);
      g_cmax = std::max(g_cmax, c_max_it);
      rec.c_seen = true;
    }

    // Regression target tau_{t+1} (C_t o A + f_t / tau_t); the carry term
    // is zero on the first iteration, where the policy is literally uniform.
    std::vector<double> target(static_cast<std::size_t>(S) * A, 0.0);
    for (int s = 0; s < S; ++s)
      for (int a = 0; a < A; ++a) {
        const int i = s * A + a;
        const double carry =
            (t == 0) ? 0.0 : forward(f_cur, feat[i]) / tau_cur;
        target[i] = tau_next * (em.c_table[i] * na.adv[i] + carry);
      }
    ensure_finite(target, "regression target", t);

    const TwoLayerNet f_fit = sgd_policy_improve(f0, target, tuples, fmap);
    std::vector<double> fvals(static_cast<std::size_t>(S) * A, 0.0);
    double sgd_mse = 0.0;
    for (std::size_t i = 0; i < fvals.size(); ++i) {
      fvals[i] = forward(f_fit, feat[i]);
      const double e = fvals[i] - target[i];
      sgd_mse += vis.sigma_tilde[i] * e * e;
    }
    ensure_finite(fvals, "energy", t);

    TabularPolicy pi_next = softmax_policy(fvals, 1.0 / tau_next, S, A);
    ensure_finite(pi_next.probs, "policy", t);

    NeuralIterRow row;
    row.iter = t;
    row.tau = tau_next;
    row.gap = gap;
    row.min_gap = min_gap;
    row.td_mse = td_mse;
    row.sgd_mse = sgd_mse;
    row.clip_fraction = em.clip_fraction;
    row.c_min = c_min_it;
    row.c_max = c_max_it;
    rec.rows.push_back(row);

    pi = std::move(pi_next);
    f_cur = f_fit;
    tau_cur = tau_next;
  }

  const ValueTables exact = evaluate_policy_exact(mdp, pi);
  double perf_final = 0.0;
  for (int s = 0; s < S; ++s) perf_final += nu_star.nu[s] * exact.v[s];
  rec.final_policy = pi;
  rec.final_gap = std::max(perf_star - perf_final, 0.0);
  rec.min_gap = std::min(min_gap, rec.final_gap);
  rec.c_min = rec.c_seen ? g_cmin : 0.0;
  rec.c_max = rec.c_seen ? g_cmax : 0.0;
  return rec;
}

CBoundReport c_bound_report(const NeuralRunRecord& rec,
                            const NeuralRunConfig& cfg) {
  CBoundReport r;
  r.c_min = rec.c_min;
  r.c_max = rec.c_max;
  r.eta = cfg.effective_eta();
  r.k_eta = cfg.emda.k_max * r.eta;
  r.checked = rec.c_checked;
  r.seen = rec.c_seen;
  r.pass = !r.checked || !r.seen ||
           (r.c_min >= r.eta - 1e-12 && r.c_max <= r.k_eta + 1e-12);
  return r;
}

std::string neural_csv(const NeuralRunRecord& record) {
  std::string out =
      "iter,tau,gap,min_gap,td_mse,sgd_mse,clip_fraction,c_min,c_max\n";
  char buf[512];
  for (const NeuralIterRow& r : record.rows) {
    std::snprintf(buf, sizeof(buf),
                  "%d,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n",
                  r.iter, r.tau, r.gap, r.min_gap, r.td_mse, r.sgd_mse,
                  r.clip_fraction, r.c_min, r.c_max);
    out += buf;
  }
  return out;
}

}  // namespace hingepo
