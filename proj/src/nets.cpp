#include "hingepo/nets.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace hingepo {

namespace {

double dot(const double* a, const double* b, int n) {
  double acc = 0.0;
  for (int i = 0; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

}  // namespace

TwoLayerNet init_net(int m, int d, double radius, Rng rng) {
  if (m < 1 || d < 1) throw std::invalid_argument("net sizes must be >= 1");
  if (!(radius > 0.0)) throw std::invalid_argument("radius must be > 0");
  TwoLayerNet net;
  net.m = m;
  net.d = d;
  net.radius = radius;
  net.b.resize(static_cast<std::size_t>(m));
  net.alpha0.resize(static_cast<std::size_t>(m) * d);
  Rng signs = rng.split(1), weights = rng.split(2);
  for (int i = 0; i < m; ++i)
    net.b[i] = (signs.next_u64() & 1u) ? 1 : -1;
  double sd = 1.0 / std::sqrt(static_cast<double>(d));
  for (auto& w : net.alpha0) w = sd * weights.next_normal();
  net.alpha = net.alpha0;
  return net;
}

double forward(const TwoLayerNet& net, const std::vector<double>& x) {
  if (static_cast<int>(x.size()) != net.d)
    throw std::invalid_argument("input dimension mismatch");
  double acc = 0.0;
  for (int i = 0; i < net.m; ++i) {
    double pre = dot(net.row(i), x.data(), net.d);
    if (pre > 0.0) acc += net.b[i] * pre;
  }
  return acc / std::sqrt(static_cast<double>(net.m));
}

std::vector<double> grad_alpha(const TwoLayerNet& net,
                               const std::vector<double>& x) {
  if (static_cast<int>(x.size()) != net.d)
    throw std::invalid_argument("input dimension mismatch");
  std::vector<double> g(static_cast<std::size_t>(net.m) * net.d, 0.0);
  double scale = 1.0 / std::sqrt(static_cast<double>(net.m));
  for (int i = 0; i < net.m; ++i) {
    double pre = dot(net.row(i), x.data(), net.d);
    if (pre > 0.0) {
      double c = scale * net.b[i];
      for (int j = 0; j < net.d; ++j)
        g[static_cast<std::size_t>(i) * net.d + j] = c * x[j];
    }
  }
  return g;
}

double displacement_norm(const TwoLayerNet& net) {
  double acc = 0.0;
  for (std::size_t i = 0; i < net.alpha.size(); ++i) {
    double d = net.alpha[i] - net.alpha0[i];
    acc += d * d;
  }
  return std::sqrt(acc);
}

void project_ball(TwoLayerNet& net) {
  double norm = displacement_norm(net);
  if (norm <= net.radius) return;
  double scale = net.radius / norm;
  for (std::size_t i = 0; i < net.alpha.size(); ++i)
    net.alpha[i] = net.alpha0[i] + scale * (net.alpha[i] - net.alpha0[i]);
}

double linearized_forward(const TwoLayerNet& net,
                          const std::vector<double>& x) {
  if (static_cast<int>(x.size()) != net.d)
    throw std::invalid_argument("input dimension mismatch");
  double acc = 0.0;
  const double* a0 = net.alpha0.data();
  for (int i = 0; i < net.m; ++i) {
    if (dot(a0 + static_cast<std::size_t>(i) * net.d, x.data(), net.d) > 0.0)
      acc += net.b[i] * dot(net.row(i), x.data(), net.d);
  }
  return acc / std::sqrt(static_cast<double>(net.m));
}

std::vector<double> FeatureMap::encode(int s, int a) const {
  if (s < 0 || s >= n_states || a < 0 || a >= n_actions)
    throw std::invalid_argument("feature index out of range");
  std::vector<double> x(static_cast<std::size_t>(dim()), 0.0);
  const double v = 1.0 / std::sqrt(2.0);
  x[s] = v;
  x[n_states + a] = v;
  return x;
}

void save_net(const TwoLayerNet& net, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::invalid_argument("cannot write checkpoint: " + path);
  out.write("HPO1", 4);
  std::int32_t m = net.m, d = net.d;
  out.write(reinterpret_cast<const char*>(&m), 4);
  out.write(reinterpret_cast<const char*>(&d), 4);
  out.write(reinterpret_cast<const char*>(net.b.data()),
            static_cast<std::streamsize>(net.b.size()));
  out.write(reinterpret_cast<const char*>(net.alpha0.data()),
            static_cast<std::streamsize>(net.alpha0.size() * 8));
  out.write(reinterpret_cast<const char*>(net.alpha.data()),
            static_cast<std::streamsize>(net.alpha.size() * 8));
  if (!out) throw std::runtime_error("checkpoint write failed: " + path);
}

TwoLayerNet load_net(const std::string& path, double radius) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::invalid_argument("cannot open checkpoint: " + path);
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, "HPO1", 4) != 0)
    throw std::invalid_argument("bad checkpoint magic in " + path);
  std::int32_t m = 0, d = 0;
  in.read(reinterpret_cast<char*>(&m), 4);
  in.read(reinterpret_cast<char*>(&d), 4);
  if (!in || m < 1 || d < 1)
    throw std::invalid_argument("bad checkpoint header in " + path);
  TwoLayerNet net;
  net.m = m;
  net.d = d;
  net.radius = radius;
  net.b.resize(static_cast<std::size_t>(m));
  net.alpha0.resize(static_cast<std::size_t>(m) * d);
  net.alpha.resize(net.alpha0.size());
  in.read(reinterpret_cast<char*>(net.b.data()),
          static_cast<std::streamsize>(net.b.size()));
  in.read(reinterpret_cast<char*>(net.alpha0.data()),
          static_cast<std::streamsize>(net.alpha0.size() * 8));
  in.read(reinterpret_cast<char*>(net.alpha.data()),
          static_cast<std::streamsize>(net.alpha.size() * 8));
  if (!in) throw std::invalid_argument("truncated checkpoint: " + path);
  for (auto s : net.b)
    if (s != 1 && s != -1)
      throw std::invalid_argument("corrupt sign vector in " + path);
  return net;
}

}  // namespace hingepo
