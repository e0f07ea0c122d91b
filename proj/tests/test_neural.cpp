#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "hingepo/generators.hpp"
#include "hingepo/neural.hpp"

using namespace hingepo;

namespace {

Mdp bandit_mdp() {
  Mdp m;
  m.n_states = 1;
  m.n_actions = 2;
  m.gamma = 0.5;
  m.mu = {1.0};
  m.reward = {1.0, 0.0};
  m.transition = {1.0, 1.0};
  m.finalize();
  return m;
}

// Pair of opposite-sign neurons sharing a row: the net is identically zero
// but still has active ReLU units.
TwoLayerNet zero_net(int d) {
  TwoLayerNet net;
  net.m = 2;
  net.d = d;
  net.b = {1, -1};
  net.alpha.assign(2 * static_cast<std::size_t>(d), 0.25);
  net.alpha0 = net.alpha;
  return net;
}

}  // namespace

TEST_CASE("softmax_policy basics") {
  SUBCASE("flat energies give the uniform policy") {
    TabularPolicy pi = softmax_policy({2.0, 2.0, 2.0, 2.0, 2.0, 2.0}, 1.7, 2, 3);
    for (double p : pi.probs) CHECK(p == doctest::Approx(1.0 / 3).epsilon(1e-15));
  }
  SUBCASE("matches the explicit exponential form") {
    std::vector<double> e = {0.3, -0.2, 0.1};
    double tau_inv = 2.5;
    TabularPolicy pi = softmax_policy(e, tau_inv, 1, 3);
    double z = 0.0;
    for (double v : e) z += std::exp(v * tau_inv);
    for (int a = 0; a < 3; ++a)
      CHECK(pi.prob(0, a) ==
            doctest::Approx(std::exp(e[a] * tau_inv) / z).epsilon(1e-13));
  }
  SUBCASE("tiny temperature concentrates but never zeroes an action") {
    TabularPolicy pi = softmax_policy({0.1, 0.0}, 1e6, 1, 2);
    CHECK(pi.prob(0, 0) > 0.999999);
    CHECK(pi.prob(0, 1) > 0.0);
    pi.validate(/*require_positive=*/true);
  }
  SUBCASE("huge energies do not overflow") {
    TabularPolicy pi = softmax_policy({5000.0, -5000.0}, 1.0, 1, 2);
    CHECK(std::isfinite(pi.prob(0, 0)));
    CHECK(pi.prob(0, 0) > 0.999999);
    CHECK(pi.prob(0, 1) > 0.0);
  }
  SUBCASE("size mismatch") {
    CHECK_THROWS_AS(softmax_policy({1.0, 2.0}, 1.0, 2, 2),
                    std::invalid_argument);
  }
}

TEST_CASE("energy policy table matches manual softmax of net outputs") {
  FeatureMap fm{3, 2};
  EnergyPolicy ep;
  ep.f = init_net(32, fm.dim(), 10.0, Rng(7));
  ep.tau = 0.7;
  TabularPolicy pi = ep.table(fm);
  pi.validate(true);
  for (int s = 0; s < 3; ++s) {
    double z = 0.0;
    std::vector<double> e(2);
    for (int a = 0; a < 2; ++a) {
      e[a] = std::exp(forward(ep.f, fm.encode(s, a)) / 0.7);
      z += e[a];
    }
    for (int a = 0; a < 2; ++a)
      CHECK(pi.prob(s, a) == doctest::Approx(e[a] / z).epsilon(1e-12));
  }
  ep.tau = 1e-6;  // near-argmax regime
  TabularPolicy hard = ep.table(fm);
  for (int s = 0; s < 3; ++s) {
    double top = std::max(hard.prob(s, 0), hard.prob(s, 1));
    CHECK(top > 0.999);
    CHECK(hard.prob(s, 0) > 0.0);
    CHECK(hard.prob(s, 1) > 0.0);
  }
  ep.tau = 0.0;
  CHECK_THROWS_AS(ep.table(fm), std::invalid_argument);
}

TEST_CASE("sampled tuples follow the on-policy distributions") {
  Mdp m = make_random(3, 3, 0.9, 404);
  TabularPolicy pi;
  pi.n_states = 3;
  pi.n_actions = 3;
  pi.probs = {0.5, 0.3, 0.2, 0.2, 0.5, 0.3, 0.3, 0.2, 0.5};
  VisitationDist d = visitation(m, pi);

  const int n = 60000;
  Rng rng(2025);
  std::vector<SampleTuple> tuples = sample_tuples(m, pi, n, rng);
  REQUIRE(tuples.size() == static_cast<std::size_t>(n));

  std::vector<int> s_count(3, 0), a0_count(3, 0);
  std::map<std::pair<int, int>, int> sa_count;
  for (const auto& t : tuples) {
    s_count[t.s]++;
    a0_count[t.a0]++;
    sa_count[{t.s, t.a}]++;
    CHECK(t.s_next >= 0);
    CHECK(t.s_next < 3);
    CHECK(t.a_next >= 0);
    CHECK(t.a_next < 3);
  }
  for (int s = 0; s < 3; ++s)
    CHECK(std::abs(static_cast<double>(s_count[s]) / n - d.nu[s]) < 0.02);
  for (int a = 0; a < 3; ++a)
    CHECK(std::abs(static_cast<double>(a0_count[a]) / n - 1.0 / 3) < 0.02);
  int states_tested = 0;
  for (int s = 0; s < 3; ++s) {
    if (s_count[s] < 2000) continue;
    ++states_tested;
    for (int a = 0; a < 3; ++a) {
      double freq = static_cast<double>(sa_count[{s, a}]) / s_count[s];
      CHECK(std::abs(freq - pi.prob(s, a)) < 0.03);
    }
  }
  CHECK(states_tested >= 1);

  Rng r1(9), r2(9);
  std::vector<SampleTuple> t1 = sample_tuples(m, pi, 50, r1);
  std::vector<SampleTuple> t2 = sample_tuples(m, pi, 50, r2);
  for (int i = 0; i < 50; ++i) {
    CHECK(t1[i].s == t2[i].s);
    CHECK(t1[i].a == t2[i].a);
    CHECK(t1[i].a0 == t2[i].a0);
    CHECK(t1[i].s_next == t2[i].s_next);
    CHECK(t1[i].a_next == t2[i].a_next);
  }
  CHECK(sample_tuples(m, pi, 0, r1).empty());
}

TEST_CASE("zero rewards and a zero net leave TD weights untouched") {
  Mdp m = make_chain(3, 0.9);
  m.reward.assign(m.reward.size(), 0.0);
  m.finalize();
  TabularPolicy pi = TabularPolicy::uniform(3, 2);
  FeatureMap fm{3, 2};
  Rng rng(15);
  std::vector<SampleTuple> tuples = sample_tuples(m, pi, 200, rng);
  TwoLayerNet q0 = zero_net(fm.dim());
  TwoLayerNet fit = td_policy_eval(m, q0, tuples, fm);
  CHECK(fit.alpha == q0.alpha0);  // every TD error is exactly zero

  CHECK_THROWS_AS(td_policy_eval(m, q0, {}, fm), std::invalid_argument);
}

TEST_CASE("TD fits improve with more updates") {
  Mdp m = make_random(4, 2, 0.9, 31);
  TabularPolicy pi = TabularPolicy::uniform(4, 2);
  FeatureMap fm{4, 2};
  ValueTables exact = evaluate_policy_exact(m, pi);
  VisitationDist vis = visitation(m, pi);

  auto weighted_mse = [&](int t_upd, std::uint64_t seed) {
    Rng rng(seed);
    TwoLayerNet q0 = init_net(64, fm.dim(), 10.0, rng.split(1));
    Rng sampler = rng.split(2);
    std::vector<SampleTuple> tuples = sample_tuples(m, pi, t_upd, sampler);
    TwoLayerNet fit = td_policy_eval(m, q0, tuples, fm);
    double mse = 0.0;
    for (int s = 0; s < 4; ++s)
      for (int a = 0; a < 2; ++a) {
        double e = forward(fit, fm.encode(s, a)) - exact.q[m.idx(s, a)];
        mse += vis.sigma[m.idx(s, a)] * e * e;
      }
    return mse;
  };

  double coarse = 0.0, fine = 0.0;
  for (std::uint64_t seed : {11ull, 12ull, 13ull}) {
    coarse += weighted_mse(64, seed);
    fine += weighted_mse(2048, seed);
  }
  CHECK(fine < coarse);
}

TEST_CASE("advantages from a Q net are centered under the policy") {
  FeatureMap fm{4, 3};
  TwoLayerNet q = init_net(48, fm.dim(), 10.0, Rng(21));
  Rng rng(22);
  TabularPolicy pi;
  pi.n_states = 4;
  pi.n_actions = 3;
  pi.probs.resize(12);
  for (int s = 0; s < 4; ++s) {
    std::vector<double> row = rng.dirichlet_flat(3);
    for (int a = 0; a < 3; ++a) pi.probs[s * 3 + a] = row[a];
  }
  NetAdvantage na = advantage_from_q(q, pi, fm);
  for (int s = 0; s < 4; ++s) {
    double mean = 0.0, v = 0.0;
    for (int a = 0; a < 3; ++a) {
      CHECK(na.q[s * 3 + a] == forward(q, fm.encode(s, a)));
      mean += pi.prob(s, a) * na.adv[s * 3 + a];
      v += pi.prob(s, a) * na.q[s * 3 + a];
    }
    CHECK(std::abs(mean) < 1e-12);
    for (int a = 0; a < 3; ++a)
      CHECK(na.adv[s * 3 + a] ==
            doctest::Approx(na.q[s * 3 + a] - v).epsilon(1e-13));
  }
}

TEST_CASE("SGD regression moves net outputs toward the target") {
  Mdp m = make_random(3, 2, 0.9, 77);
  TabularPolicy pi = TabularPolicy::uniform(3, 2);
  FeatureMap fm{3, 2};
  std::vector<double> target = {0.4, -0.2, 0.1, 0.3, -0.5, 0.2};

  auto fit_mse = [&](int t_upd, std::uint64_t seed) {
    Rng rng(seed);
    TwoLayerNet f0 = init_net(64, fm.dim(), 10.0, rng.split(1));
    Rng sampler = rng.split(2);
    std::vector<SampleTuple> tuples = sample_tuples(m, pi, t_upd, sampler);
    TwoLayerNet fit = sgd_policy_improve(f0, target, tuples, fm);
    VisitationDist vis = visitation(m, pi);
    double mse = 0.0;
    for (int i = 0; i < 6; ++i) {
      double e = forward(fit, fm.encode(i / 2, i % 2)) - target[i];
      mse += vis.sigma_tilde[i] * e * e;
    }
    return mse;
  };

  double coarse = 0.0, fine = 0.0;
  for (std::uint64_t seed : {5ull, 6ull, 7ull}) {
    coarse += fit_mse(64, seed);
    fine += fit_mse(4096, seed);
  }
  CHECK(fine < coarse);

  TwoLayerNet f0 = init_net(8, fm.dim(), 10.0, Rng(1));
  CHECK_THROWS_AS(sgd_policy_improve(f0, target, {}, fm),
                  std::invalid_argument);
  std::vector<double> short_target = {1.0};
  Rng rng(2);
  std::vector<SampleTuple> tuples = sample_tuples(m, pi, 4, rng);
  CHECK_THROWS_AS(sgd_policy_improve(f0, short_target, tuples, fm),
                  std::invalid_argument);
}

TEST_CASE("neural config validation") {
  NeuralRunConfig cfg;
  cfg.validate();
  CHECK(cfg.effective_eta() == cfg.emda.eta);
  cfg.sqrt_t_step = true;
  cfg.T = 16;
  CHECK(cfg.effective_eta() == doctest::Approx(0.25).epsilon(1e-15));
  cfg.T = 0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg.T = 4;
  cfg.t_upd = 0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg.t_upd = 16;
  cfg.m_f = 0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg.m_f = 8;
  cfg.r_q = 0.0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}

TEST_CASE("neural loop on the two-armed bandit") {
  Mdp m = bandit_mdp();
  NeuralRunConfig cfg;
  cfg.T = 6;
  cfg.t_upd = 256;
  cfg.m_f = 64;
  cfg.m_q = 64;
  cfg.seed = 3;
  cfg.sqrt_t_step = true;
  NeuralRunRecord rec = run_neural(m, cfg);

  REQUIRE(rec.rows.size() == 6);
  double sqrt_t = std::sqrt(6.0);
  for (int t = 0; t < 6; ++t) {
    CHECK(rec.rows[t].iter == t);
    CHECK(rec.rows[t].tau ==
          doctest::Approx(sqrt_t / (5.0 * (t + 1))).epsilon(1e-15));
    // the running minimum it reports really is the minimum so far
    double expect = rec.rows[0].gap;
    for (int u = 1; u <= t; ++u) expect = std::min(expect, rec.rows[u].gap);
    CHECK(rec.rows[t].min_gap == expect);
    CHECK(rec.rows[t].td_mse >= 0.0);
    CHECK(rec.rows[t].sgd_mse >= 0.0);
  }
  CHECK(rec.min_gap <= rec.rows.back().min_gap);

  // uniform start has gap 1; a few energy updates must beat that
  CHECK(rec.rows[0].gap == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(rec.min_gap < 0.5);
  CHECK(rec.final_policy.prob(0, 0) > rec.final_policy.prob(0, 1));

  // default loss is ratio + policy weights, so the carry bound applies
  CHECK(rec.c_checked);
  CHECK(rec.c_seen);
  CBoundReport cb = c_bound_report(rec, cfg);
  CHECK(cb.checked);
  CHECK(cb.pass);
  CHECK(cb.eta == doctest::Approx(1.0 / sqrt_t).epsilon(1e-15));
  CHECK(rec.c_min >= cb.eta - 1e-12);
  CHECK(rec.c_max <= 5.0 * cb.eta + 1e-12);

  // reruns with the same config are byte-identical
  NeuralRunRecord rec2 = run_neural(m, cfg);
  CHECK(neural_csv(rec2) == neural_csv(rec));
  CHECK(rec2.final_policy.probs == rec.final_policy.probs);
}

TEST_CASE("neural csv shape") {
  Mdp m = bandit_mdp();
  NeuralRunConfig cfg;
  cfg.T = 3;
  cfg.t_upd = 64;
  cfg.m_f = 32;
  cfg.m_q = 32;
  NeuralRunRecord rec = run_neural(m, cfg);
  std::string csv = neural_csv(rec);
  std::istringstream in(csv);
  std::string line;
  REQUIRE(std::getline(in, line));
  CHECK(line == "iter,tau,gap,min_gap,td_mse,sgd_mse,clip_fraction,c_min,c_max");
  int rows = 0;
  while (std::getline(in, line)) {
    ++rows;
    int commas = 0;
    for (char c : line) commas += c == ',';
    CHECK(commas == 8);
  }
  CHECK(rows == 3);
}

TEST_CASE("c bound report logic") {
  NeuralRunConfig cfg;
  cfg.sqrt_t_step = true;
  cfg.T = 16;  // eta = 0.25, K eta = 1.25
  NeuralRunRecord rec;
  rec.c_checked = true;
  rec.c_seen = true;
  rec.c_min = 0.3;
  rec.c_max = 1.0;
  CHECK(c_bound_report(rec, cfg).pass);
  rec.c_min = 0.1;  // below eta
  CHECK_FALSE(c_bound_report(rec, cfg).pass);
  rec.c_min = 0.3;
  rec.c_max = 1.3;  // above K eta
  CHECK_FALSE(c_bound_report(rec, cfg).pass);
  rec.c_checked = false;  // no bound to check
  CHECK(c_bound_report(rec, cfg).pass);
  rec.c_checked = true;
  rec.c_seen = false;  // nothing updated, nothing to violate
  CHECK(c_bound_report(rec, cfg).pass);
}
