#include "hingepo/hinge.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace hingepo {

namespace {

double sgn(double x) { return x > 0.0 ? 1.0 : -1.0; }

void check_pair(const BatchPair& p, const TabularPolicy& theta,
                const TabularPolicy& pi_t) {
  if (p.s < 0 || p.s >= pi_t.n_states || p.a < 0 || p.a >= pi_t.n_actions)
    throw std::invalid_argument("batch pair out of range");
  if (p.adv == 0.0)
    throw std::invalid_argument(
        "zero-advantage pair in batch (must be filtered)");
  (void)theta;
}

double theta_of(const TabularPolicy& theta, const BatchPair& p) {
  return theta.prob(p.s, p.a);
}

}  // namespace

ClassifierKind classifier_from_string(const std::string& s) {
  if (s == "ratio") return ClassifierKind::Ratio;
  if (s == "sub") return ClassifierKind::Sub;
  if (s == "root") return ClassifierKind::Root;
  if (s == "log") return ClassifierKind::Log;
  throw std::invalid_argument("unknown classifier: " + s);
}

std::string to_string(ClassifierKind k) {
  switch (k) {
    case ClassifierKind::Ratio: return "ratio";
    case ClassifierKind::Sub: return "sub";
    case ClassifierKind::Root: return "root";
    case ClassifierKind::Log: return "log";
  }
  return "?";
}

WeightScheme weights_from_string(const std::string& s) {
  if (s == "unit") return WeightScheme::Unit;
  if (s == "abs-adv") return WeightScheme::AbsAdvantage;
  if (s == "policy-weighted") return WeightScheme::PolicyWeighted;
  throw std::invalid_argument("unknown weight scheme: " + s);
}

std::string to_string(WeightScheme w) {
  switch (w) {
    case WeightScheme::Unit: return "unit";
    case WeightScheme::AbsAdvantage: return "abs-adv";
    case WeightScheme::PolicyWeighted: return "policy-weighted";
  }
  return "?";
}

void HingeLossSpec::validate() const {
  if (!(margin > 0.0)) throw std::invalid_argument("margin must be > 0");
  if (!(w_max > 0.0)) throw std::invalid_argument("w_max must be > 0");
}

double hinge(double y, double f, double eps) {
  return std::max(0.0, eps - y * f);
}

double classifier_value(ClassifierKind k, double theta, double ref) {
  switch (k) {
    case ClassifierKind::Ratio:
      if (!(ref > 0.0))
        throw std::domain_error("ratio classifier needs pi_t > 0");
      return theta / ref - 1.0;
    case ClassifierKind::Sub:
      return theta - ref;
    case ClassifierKind::Root:
      if (!(ref > 0.0) || !(theta >= 0.0))
        throw std::domain_error("root classifier needs pi_t > 0, theta >= 0");
      return std::sqrt(theta / ref) - 1.0;
    case ClassifierKind::Log:
      if (!(ref > 0.0) || !(theta > 0.0))
        throw std::domain_error("log classifier needs positive probabilities");
      return std::log(theta) - std::log(ref);
  }
  throw std::logic_error("unreachable");
}

double classifier_deriv(ClassifierKind k, double theta, double ref) {
  switch (k) {
    case ClassifierKind::Ratio:
      if (!(ref > 0.0))
        throw std::domain_error("ratio classifier needs pi_t > 0");
      return 1.0 / ref;
    case ClassifierKind::Sub:
      return 1.0;
    case ClassifierKind::Root:
      if (!(ref > 0.0) || !(theta > 0.0))
        throw std::domain_error("root derivative needs positive probabilities");
      return 1.0 / (2.0 * std::sqrt(theta * ref));
    case ClassifierKind::Log:
      if (!(theta > 0.0))
        throw std::domain_error("log derivative needs theta > 0");
      return 1.0 / theta;
  }
  throw std::logic_error("unreachable");
}

double pair_weight(const HingeLossSpec& spec, double pi_ref, double adv) {
  double w = 1.0;
  switch (spec.weights) {
    case WeightScheme::Unit: w = 1.0; break;
    case WeightScheme::AbsAdvantage: w = std::abs(adv); break;
    case WeightScheme::PolicyWeighted: w = pi_ref * std::abs(adv); break;
  }
  return std::min(w, spec.w_max);
}

double batch_hinge_loss(const HingeLossSpec& spec, const Batch& batch,
                        const TabularPolicy& theta,
                        const TabularPolicy& pi_t) {
  spec.validate();
  if (batch.pairs.empty()) throw std::invalid_argument("batch is empty");
  double acc = 0.0;
  for (const auto& p : batch.pairs) {
    check_pair(p, theta, pi_t);
    double ref = pi_t.prob(p.s, p.a);
    double h = classifier_value(spec.classifier, theta_of(theta, p), ref);
    acc += pair_weight(spec, ref, p.adv) * hinge(sgn(p.adv), h, spec.margin);
  }
  return acc / static_cast<double>(batch.pairs.size());
}

double subgradient(const HingeLossSpec& spec, double theta, double pi_ref,
                   double adv) {
  if (adv == 0.0)
    throw std::invalid_argument("subgradient of a zero-advantage pair");
  double y = sgn(adv);
  double h = classifier_value(spec.classifier, theta, pi_ref);
  if (!(h * y < spec.margin)) return 0.0;  // exact boundary counts as clipped
  return -pair_weight(spec, pi_ref, adv) * y *
         classifier_deriv(spec.classifier, theta, pi_ref);
}

std::vector<double> batch_subgradients(const HingeLossSpec& spec,
                                       const Batch& batch,
                                       const TabularPolicy& theta,
                                       const TabularPolicy& pi_t) {
  spec.validate();
  std::vector<double> g;
  g.reserve(batch.pairs.size());
  for (const auto& p : batch.pairs) {
    check_pair(p, theta, pi_t);
    g.push_back(subgradient(spec, theta_of(theta, p), pi_t.prob(p.s, p.a),
                            p.adv));
  }
  return g;
}

double clipped_objective(double eps, const Batch& batch,
                         const TabularPolicy& theta,
                         const TabularPolicy& pi_t) {
  if (batch.pairs.empty()) throw std::invalid_argument("batch is empty");
  double acc = 0.0;
  for (const auto& p : batch.pairs) {
    check_pair(p, theta, pi_t);
    double ref = pi_t.prob(p.s, p.a);
    if (!(ref > 0.0)) throw std::domain_error("ratio needs pi_t > 0");
    double rho = theta_of(theta, p) / ref;
    double clipped = std::clamp(rho, 1.0 - eps, 1.0 + eps);
    acc += std::min(rho * p.adv, clipped * p.adv);
  }
  return acc / static_cast<double>(batch.pairs.size());
}

GradientEquivalenceReport gradient_equivalence(const HingeLossSpec& spec,
                                               const Batch& batch,
                                               const TabularPolicy& theta,
                                               const TabularPolicy& pi_t,
                                               double kink_tol) {
  spec.validate();
  if (spec.classifier != ClassifierKind::Ratio ||
      spec.weights != WeightScheme::AbsAdvantage)
    throw std::invalid_argument(
        "gradient equivalence holds for the ratio classifier with "
        "abs-advantage weights");
  if (batch.pairs.empty()) throw std::invalid_argument("batch is empty");

  const double eps = spec.margin;
  const double n = static_cast<double>(batch.pairs.size());
  GradientEquivalenceReport rep;
  rep.n_pairs = static_cast<int>(batch.pairs.size());

  for (const auto& p : batch.pairs) {
    check_pair(p, theta, pi_t);
    if (std::abs(p.adv) > spec.w_max)
      throw std::invalid_argument(
          "w_max caps the |A| weight; equivalence needs the uncapped weight");
    double ref = pi_t.prob(p.s, p.a);
    double th = theta_of(theta, p);
    double h = classifier_value(ClassifierKind::Ratio, th, ref);
    if (!(std::abs(h * sgn(p.adv) - eps) > kink_tol))
      throw std::invalid_argument(
          "pair within kink_tol of the clip boundary; untestable point");

    // Analytic per-pair partials of the averaged objectives.
    double rho = th / ref;
    bool unclipped = sgn(p.adv) > 0.0 ? rho < 1.0 + eps : rho > 1.0 - eps;
    double g_clip = unclipped ? p.adv / ref / n : 0.0;
    double g_hinge = subgradient(spec, th, ref, p.adv) / n;
    rep.max_analytic = std::max(rep.max_analytic, std::abs(g_clip + g_hinge));

    // Central finite differences on the scalar theta entry of this pair.
    const double step = 1e-6;
    auto perturbed = [&](double t) {
      TabularPolicy tp = theta;
      tp.at(p.s, p.a) = t;
      return tp;
    };
    Batch one;
    one.pairs.push_back(p);
    double c_plus = clipped_objective(eps, one, perturbed(th + step), pi_t);
    double c_minus = clipped_objective(eps, one, perturbed(th - step), pi_t);
    double h_plus = batch_hinge_loss(spec, one, perturbed(th + step), pi_t);
    double h_minus = batch_hinge_loss(spec, one, perturbed(th - step), pi_t);
    double fd_clip = (c_plus - c_minus) / (2.0 * step) / n;
    double fd_hinge = (h_plus - h_minus) / (2.0 * step) / n;
    rep.max_fd = std::max(rep.max_fd, std::abs(fd_clip + fd_hinge));
  }
  return rep;
}

}  // namespace hingepo
