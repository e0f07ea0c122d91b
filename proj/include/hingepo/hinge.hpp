#pragma once

#include <string>
#include <vector>

#include "hingepo/mdp.hpp"

namespace hingepo {

enum class ClassifierKind { Ratio, Sub, Root, Log };
enum class WeightScheme { Unit, AbsAdvantage, PolicyWeighted };

ClassifierKind classifier_from_string(const std::string& s);
std::string to_string(ClassifierKind k);
WeightScheme weights_from_string(const std::string& s);
std::string to_string(WeightScheme w);

struct HingeLossSpec {
  ClassifierKind classifier = ClassifierKind::Ratio;
  double margin = 0.3;  // epsilon
  WeightScheme weights = WeightScheme::Unit;
  double w_max = 1e6;

  void validate() const;  // margin > 0, w_max > 0
};

struct BatchPair {
  int s = 0;
  int a = 0;
  double adv = 0.0;  // nonzero; zero-advantage pairs never enter a batch
};

struct Batch {
  std::vector<BatchPair> pairs;
};

// max{0, eps - y*f} with y in {-1, +1}.
double hinge(double y, double f, double eps);

// Classifier value h and its derivative in theta; theta is the candidate
// probability, ref the frozen reference probability pi_t(a|s).
double classifier_value(ClassifierKind k, double theta, double ref);
double classifier_deriv(ClassifierKind k, double theta, double ref);

// W(s,a) under the scheme, capped at w_max. pi_ref = pi_t(a|s).
double pair_weight(const HingeLossSpec& spec, double pi_ref, double adv);

// (1/|D|) sum over pairs of W * hinge(sgn A, h(theta), eps).
double batch_hinge_loss(const HingeLossSpec& spec, const Batch& batch,
                        const TabularPolicy& theta, const TabularPolicy& pi_t);

// Per-pair g = -W * sgn(A) * h'(theta) * 1{h(theta)*sgn(A) < eps}.
// The comparison is an exact <; at the boundary the indicator is off.
// No 1/|D| factor: this is the per-pair gradient the EMDA update consumes.
double subgradient(const HingeLossSpec& spec, double theta, double pi_ref,
                   double adv);
std::vector<double> batch_subgradients(const HingeLossSpec& spec,
                                       const Batch& batch,
                                       const TabularPolicy& theta,
                                       const TabularPolicy& pi_t);

// (1/|D|) sum of min{rho*A, clip(rho, 1-eps, 1+eps)*A}, rho = theta/pi_t.
double clipped_objective(double eps, const Batch& batch,
                         const TabularPolicy& theta,
                         const TabularPolicy& pi_t);

struct GradientEquivalenceReport {
  double max_analytic = 0.0;  // max |grad_clip + grad_hinge|
  double max_fd = 0.0;        // same, both sides central-differenced
  int n_pairs = 0;
};

// Verifies that the clipped objective and the |A|-weighted ratio hinge loss
// have opposite gradients. Requires Ratio classifier + AbsAdvantage weights
// and every pair at least kink_tol away from its indicator boundary;
// throws std::invalid_argument otherwise.
GradientEquivalenceReport gradient_equivalence(const HingeLossSpec& spec,
                                               const Batch& batch,
                                               const TabularPolicy& theta,
                                               const TabularPolicy& pi_t,
                                               double kink_tol = 1e-6);

}  // namespace hingepo
