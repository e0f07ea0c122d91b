#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>
#include <vector>

#include "hingepo/nets.hpp"
#include "hingepo/rng.hpp"

using namespace hingepo;

namespace {

TwoLayerNet tiny_net() {
  // dyadic weights so the forward pass is exact in binary
  TwoLayerNet net;
  net.m = 4;
  net.d = 2;
  net.b = {1, -1, 1, -1};
  net.alpha = {1.0, 0.5, 0.75, -0.25, -1.0, 1.0, 0.5, -1.5};
  net.alpha0 = net.alpha;
  return net;
}

}  // namespace

TEST_CASE("forward pass on a hand-computed net") {
  TwoLayerNet net = tiny_net();
  // pre-activations at x=(0.5,1): 1.0, 0.125, 0.5, -1.25 (last one dropped)
  // acc = 1.0 - 0.125 + 0.5 = 1.375, / sqrt(4) = 0.6875 exactly
  CHECK(forward(net, {0.5, 1.0}) == 0.6875);
  CHECK_THROWS_AS(forward(net, {1.0}), std::invalid_argument);
}

TEST_CASE("a neuron sitting exactly at its kink contributes nothing") {
  TwoLayerNet net;
  net.m = 1;
  net.d = 2;
  net.b = {1};
  net.alpha = {1.0, 0.5};
  net.alpha0 = net.alpha;
  CHECK(forward(net, {1.0, -2.0}) == 0.0);  // pre = 1 - 1 = 0, strictly > 0 fails
  std::vector<double> g = grad_alpha(net, {1.0, -2.0});
  CHECK(g[0] == 0.0);
  CHECK(g[1] == 0.0);
}

TEST_CASE("initialization statistics at width ten thousand") {
  TwoLayerNet net = init_net(10000, 8, 10.0, Rng(5));
  CHECK(net.alpha == net.alpha0);
  CHECK(net.radius == 10.0);
  double mean_sq = 0.0, mean_b = 0.0;
  for (int i = 0; i < net.m; ++i) {
    const double* row = net.row(i);
    double sq = 0.0;
    for (int j = 0; j < net.d; ++j) sq += row[j] * row[j];
    mean_sq += sq;
    mean_b += net.b[i];
  }
  mean_sq /= net.m;
  mean_b /= net.m;
  CHECK(std::abs(mean_sq - 1.0) < 0.05);  // rows are N(0, I/d): E||row||^2 = 1
  CHECK(std::abs(mean_b) < 0.03);

  TwoLayerNet again = init_net(10000, 8, 10.0, Rng(5));
  CHECK(again.alpha0 == net.alpha0);
  CHECK(again.b == net.b);
  TwoLayerNet other = init_net(10000, 8, 10.0, Rng(6));
  CHECK(other.alpha0 != net.alpha0);

  CHECK_THROWS_AS(init_net(0, 8, 10.0, Rng(5)), std::invalid_argument);
  CHECK_THROWS_AS(init_net(8, 8, 0.0, Rng(5)), std::invalid_argument);
}

TEST_CASE("gradient matches finite differences away from kinks") {
  Rng rng(33);
  TwoLayerNet net = init_net(16, 5, 10.0, rng.split(0));
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> x(5);
    for (auto& v : x) v = rng.next_normal();
    bool near_kink = false;
    for (int i = 0; i < net.m; ++i) {
      double pre = 0.0;
      for (int j = 0; j < net.d; ++j) pre += net.row(i)[j] * x[j];
      near_kink = near_kink || std::abs(pre) < 1e-5;
    }
    if (near_kink) continue;
    std::vector<double> g = grad_alpha(net, x);
    for (int probe = 0; probe < 6; ++probe) {
      std::size_t k = rng.next_below(g.size());
      const double h = 1e-7;
      TwoLayerNet p = net, q = net;
      p.alpha[k] += h;
      q.alpha[k] -= h;
      double fd = (forward(p, x) - forward(q, x)) / (2.0 * h);
      CHECK(g[k] == doctest::Approx(fd).epsilon(1e-6));
    }
  }
}

TEST_CASE("ball projection") {
  Rng rng(44);
  TwoLayerNet net = init_net(8, 3, 2.0, rng.split(0));
  SUBCASE("inside the ball nothing moves") {
    for (std::size_t i = 0; i < net.alpha.size(); ++i)
      net.alpha[i] = net.alpha0[i] + 0.01 * rng.next_normal();
    std::vector<double> before = net.alpha;
    project_ball(net);
    CHECK(net.alpha == before);
  }
  SUBCASE("outside it lands on the sphere along the same ray") {
    std::vector<double> dir(net.alpha.size());
    for (auto& v : dir) v = rng.next_normal();
    for (std::size_t i = 0; i < net.alpha.size(); ++i)
      net.alpha[i] = net.alpha0[i] + 5.0 * dir[i];
    double before = displacement_norm(net);
    CHECK(before > 2.0);
    std::vector<double> disp_before(net.alpha.size());
    for (std::size_t i = 0; i < net.alpha.size(); ++i)
      disp_before[i] = net.alpha[i] - net.alpha0[i];
    project_ball(net);
    CHECK(displacement_norm(net) == doctest::Approx(2.0).epsilon(1e-12));
    // colinear with the pre-projection displacement
    double ratio = 0.0;
    bool set = false;
    for (std::size_t i = 0; i < net.alpha.size(); ++i) {
      double d = net.alpha[i] - net.alpha0[i];
      if (std::abs(disp_before[i]) > 1e-9) {
        double r = d / disp_before[i];
        if (!set) {
          ratio = r;
          set = true;
        } else {
          CHECK(r == doctest::Approx(ratio).epsilon(1e-9));
        }
      }
    }
  }
}

TEST_CASE("linearized forward is affine along a weight ray") {
  Rng rng(55);
  TwoLayerNet net = init_net(12, 4, 10.0, rng.split(0));
  std::vector<double> delta(net.alpha.size());
  for (auto& v : delta) v = 0.1 * rng.next_normal();
  std::vector<double> x(4);
  for (auto& v : x) v = rng.next_normal();
  auto at_t = [&](double t) {
    TwoLayerNet n = net;
    for (std::size_t i = 0; i < n.alpha.size(); ++i)
      n.alpha[i] = n.alpha0[i] + t * delta[i];
    return linearized_forward(n, x);
  };
  double f0 = at_t(0.0), f1 = at_t(1.0), fh = at_t(0.5);
  CHECK(fh == doctest::Approx(0.5 * (f0 + f1)).epsilon(1e-12));
  CHECK(at_t(0.0) == doctest::Approx(forward(net, x)).epsilon(1e-12));
}

TEST_CASE("wide nets hug their linearization") {
  // same unit displacement budget; the gap to the tangent model must
  // shrink as the width grows
  auto max_gap = [](int m) {
    Rng rng(77);
    TwoLayerNet net = init_net(m, 4, 1.0, rng.split(static_cast<uint64_t>(m)));
    std::vector<double> delta(net.alpha.size());
    double norm = 0.0;
    for (auto& v : delta) {
      v = rng.next_normal();
      norm += v * v;
    }
    norm = std::sqrt(norm);
    for (std::size_t i = 0; i < net.alpha.size(); ++i)
      net.alpha[i] = net.alpha0[i] + delta[i] / norm;  // displacement 1
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
      std::vector<double> x(4);
      for (auto& v : x) v = rng.next_normal();
      worst = std::max(worst,
                       std::abs(forward(net, x) - linearized_forward(net, x)));
    }
    return worst;
  };
  double narrow = max_gap(64);
  double wide = max_gap(16384);
  CHECK(wide < narrow);
  CHECK(wide < 0.1);
}

TEST_CASE("feature map is unit-norm one-hot pairs") {
  FeatureMap fm;
  fm.n_states = 3;
  fm.n_actions = 2;
  CHECK(fm.dim() == 5);
  std::vector<double> x = fm.encode(1, 1);
  CHECK(x.size() == 5);
  const double v = 1.0 / std::sqrt(2.0);
  CHECK(x[1] == v);
  CHECK(x[3 + 1] == v);
  double norm = 0.0;
  for (double xi : x) norm += xi * xi;
  CHECK(norm == doctest::Approx(1.0).epsilon(1e-14));
  int nonzero = 0;
  for (double xi : x) nonzero += xi != 0.0;
  CHECK(nonzero == 2);
  CHECK_THROWS_AS(fm.encode(3, 0), std::invalid_argument);
  CHECK_THROWS_AS(fm.encode(0, -1), std::invalid_argument);
}

TEST_CASE("checkpoint round trip and corruption handling") {
  Rng rng(88);
  TwoLayerNet net = init_net(6, 3, 2.5, rng.split(0));
  for (std::size_t i = 0; i < net.alpha.size(); ++i)
    net.alpha[i] += 0.1 * rng.next_normal();  // alpha differs from alpha0
  const char* path = "net_checkpoint_test.bin";
  save_net(net, path);

  TwoLayerNet back = load_net(path, 2.5);
  CHECK(back.m == 6);
  CHECK(back.d == 3);
  CHECK(back.radius == 2.5);
  CHECK(back.alpha == net.alpha);
  CHECK(back.alpha0 == net.alpha0);
  CHECK(back.b == net.b);
  CHECK(load_net(path).radius == 10.0);  // default radius when omitted

  SUBCASE("bad magic") {
    std::ofstream out("net_bad_magic.bin", std::ios::binary);
    out << "NOPE" << std::string(100, '\0');
    out.close();
    CHECK_THROWS_AS(load_net("net_bad_magic.bin"), std::invalid_argument);
    std::remove("net_bad_magic.bin");
  }
  SUBCASE("truncated file") {
    std::ifstream in(path, std::ios::binary);
    std::string bytes((std::istreambuf_iterator<char>(in)),
                      std::istreambuf_iterator<char>());
    in.close();
    std::ofstream out("net_truncated.bin", std::ios::binary);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size() - 9));
    out.close();
    CHECK_THROWS_AS(load_net("net_truncated.bin"), std::invalid_argument);
    std::remove("net_truncated.bin");
  }
  SUBCASE("corrupt sign byte") {
    std::ifstream in(path, std::ios::binary);
    std::string bytes((std::istreambuf_iterator<char>(in)),
                      std::istreambuf_iterator<char>());
    in.close();
    bytes[12] = 7;  // first b entry, right after the 12-byte header
    std::ofstream out("net_badsign.bin", std::ios::binary);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    out.close();
    CHECK_THROWS_AS(load_net("net_badsign.bin"), std::invalid_argument);
    std::remove("net_badsign.bin");
  }
  SUBCASE("missing file") {
    CHECK_THROWS_AS(load_net("does_not_exist.bin"), std::invalid_argument);
  }
  std::remove(path);
}
