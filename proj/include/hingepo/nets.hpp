#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hingepo/rng.hpp"

namespace hingepo {

// Width-m two-layer ReLU net u(x) = (1/sqrt(m)) sum_i b_i relu(alpha_i.x)
// with frozen +-1 output signs and weights kept inside a Frobenius ball of
// radius R around their initialization.
struct TwoLayerNet {
  int m = 0;
  int d = 0;
  double radius = 10.0;
  std::vector<double> alpha;   // m x d, row-major
  std::vector<double> alpha0;  // frozen initial weights
  std::vector<std::int8_t> b;  // +-1, frozen

  const double* row(int i) const { return &alpha[static_cast<std::size_t>(i) * d]; }
  double* row(int i) { return &alpha[static_cast<std::size_t>(i) * d]; }
};

// b_i ~ Unif{-1,+1}, alpha0 rows ~ N(0, I_d / d), alpha = alpha0.
TwoLayerNet init_net(int m, int d, double radius, Rng rng);

double forward(const TwoLayerNet& net, const std::vector<double>& x);

// d u / d alpha_{ij} = (1/sqrt(m)) b_i 1{alpha_i.x > 0} x_j (0 at the kink).
std::vector<double> grad_alpha(const TwoLayerNet& net,
                               const std::vector<double>& x);

// Radial projection onto { ||alpha - alpha0||_F <= R }.
void project_ball(TwoLayerNet& net);

double displacement_norm(const TwoLayerNet& net);

// Linearization at init: (1/sqrt(m)) sum_i b_i 1{alpha0_i.x > 0} alpha_i.x.
double linearized_forward(const TwoLayerNet& net, const std::vector<double>& x);

// one-hot(state) ++ one-hot(action), scaled to unit l2 norm (both hot
// entries are 1/sqrt(2)); d = n_states + n_actions.
struct FeatureMap {
  int n_states = 0;
  int n_actions = 0;

  int dim() const { return n_states + n_actions; }
  std::vector<double> encode(int s, int a) const;
};

// Flat binary checkpoint: magic "HPO1", m and d as little-endian int32,
// b as signed bytes, then alpha0 and alpha as little-endian float64
// row-major. The radius is a config value, not part of the file.
void save_net(const TwoLayerNet& net, const std::string& path);
TwoLayerNet load_net(const std::string& path, double radius = 10.0);

}  // namespace hingepo
