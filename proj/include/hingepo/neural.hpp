#pragma once

#include <cstdint>
#include <vector>

#include "hingepo/emda.hpp"
#include "hingepo/hinge.hpp"
#include "hingepo/mdp.hpp"
#include "hingepo/nets.hpp"
#include "hingepo/rng.hpp"

namespace hingepo {

// Softmax-over-energies policy pi(a|s) proportional to exp(f(s,a)/tau).
struct EnergyPolicy {
  TwoLayerNet f;
  double tau = 1.0;

  TabularPolicy table(const FeatureMap& fmap) const;
};

// Softmax of energy/tau rows; entries floored at 1e-300 so the policy stays
// strictly positive even when the temperature is tiny.
TabularPolicy softmax_policy(const std::vector<double>& energy, double tau_inv,
                             int n_states, int n_actions);

struct SampleTuple {
  int s = 0;       // ~ nu_t (geometric-horizon restart rollout)
  int a = 0;       // ~ pi_t(.|s)
  int a0 = 0;      // ~ uniform
  int s_next = 0;  // ~ P(.|s,a)
  int a_next = 0;  // ~ pi_t(.|s_next)
};

std::vector<SampleTuple> sample_tuples(const Mdp& mdp,
                                       const TabularPolicy& pi, int n,
                                       Rng& rng);

// One pass of TD(0) over the tuples, step size 1/sqrt(#tuples), radial
// projection onto the ball around net.alpha0 after every step; returns the
// net with path-averaged weights (average includes the initial weights and
// excludes the post-final ones).
TwoLayerNet td_policy_eval(const Mdp& mdp, TwoLayerNet q_net,
                           const std::vector<SampleTuple>& tuples,
                           const FeatureMap& fmap);

// Q table evaluated from the net plus A = Q - sum_a pi(a|s) Q(s,a).
struct NetAdvantage {
  std::vector<double> q;
  std::vector<double> adv;
};
NetAdvantage advantage_from_q(const TwoLayerNet& q_net,
                              const TabularPolicy& pi, const FeatureMap& fmap);

// SGD regression of the net outputs onto target[s][a] at the (s_i, a_i^0)
// tuple entries; same stepping/projection/averaging scheme as the TD pass.
TwoLayerNet sgd_policy_improve(TwoLayerNet f_net,
                               const std::vector<double>& target,
                               const std::vector<SampleTuple>& tuples,
                               const FeatureMap& fmap);

struct NeuralRunConfig {
  int T = 16;
  EmdaConfig emda;     // eta ignored when sqrt_t_step is set
  HingeLossSpec loss{ClassifierKind::Ratio, 0.3, WeightScheme::PolicyWeighted,
                     1e6};
  int t_upd = 2048;
  int m_f = 256;
  int m_q = 256;
  double r_f = 10.0;
  double r_q = 10.0;
  std::uint64_t seed = 0;
  bool sqrt_t_step = false;  // EMDA step 1/sqrt(T)

  double effective_eta() const;
  void validate() const;
};

struct NeuralIterRow {
  int iter = 0;  // 0-based; metrics describe the policy entering iteration t
  double tau = 0.0;  // tau_{t+1} = sqrt(T)/(K(t+1))
  double gap = 0.0;  // nu*-weighted suboptimality of pi_t
  double min_gap = 0.0;
  double td_mse = 0.0;   // sigma_t-weighted (Q_net - Q_exact)^2
  double sgd_mse = 0.0;  // sigma~_t-weighted (f_fit - target)^2
  double clip_fraction = 0.0;
  double c_min = 0.0, c_max = 0.0;  // this iteration's updated pairs; 0,0
                                    // when nothing was updated
};

struct NeuralRunRecord {
  std::vector<NeuralIterRow> rows;
  TabularPolicy final_policy;
  double final_gap = 0.0;
  double min_gap = 0.0;  // includes the post-loop policy
  double c_min = 0.0, c_max = 0.0;
  bool c_checked = false;  // ratio/sub with canonical weights
  bool c_seen = false;
  int clamp_warnings = 0;
};

NeuralRunRecord run_neural(const Mdp& mdp, const NeuralRunConfig& cfg);

struct CBoundReport {
  double c_min = 0.0, c_max = 0.0;
  double eta = 0.0;
  double k_eta = 0.0;
  bool checked = false;
  bool seen = false;
  bool pass = false;
};

CBoundReport c_bound_report(const NeuralRunRecord& rec,
                            const NeuralRunConfig& cfg);

// CSV header: iter,tau,gap,min_gap,td_mse,sgd_mse,clip_fraction,c_min,c_max
std::string neural_csv(const NeuralRunRecord& record);

}  // namespace hingepo
