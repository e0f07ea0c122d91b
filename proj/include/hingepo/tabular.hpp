#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hingepo/emda.hpp"
#include "hingepo/hinge.hpp"
#include "hingepo/mdp.hpp"
#include "hingepo/rng.hpp"

namespace hingepo {

enum class BatchScheduleKind { CyclicSweep, UniformRandom };

BatchScheduleKind schedule_from_string(const std::string& s);
std::string to_string(BatchScheduleKind k);

struct BatchSchedule {
  BatchScheduleKind mode = BatchScheduleKind::CyclicSweep;
  int batch_size = 1;
};

// Batch for one iteration, advantages not yet filled in. CyclicSweep walks
// the global pair sequence (s = i mod S, a = (i / S) mod A) in consecutive
// blocks of batch_size; UniformRandom draws i.i.d. pairs and drops
// duplicate states, so its batches may come back smaller.
Batch next_batch(const BatchSchedule& schedule, int n_states, int n_actions,
                 std::int64_t iteration, Rng& rng);

struct TabularConfig {
  int n_iters = 1000;
  HingeLossSpec loss;
  EmdaConfig emda;
  BatchSchedule schedule;
  std::uint64_t seed = 0;
  double early_stop_tol = 0.0;  // <= 0 disables; stops after 10 straight
                                // iterations with gap below the tolerance
  std::string trace_path;  // non-empty: append per-step EMDA gradient
                           // records as JSON lines

  void validate(const Mdp& mdp) const;
};

struct TabularIterRow {
  int iter = 0;             // 1-based; state after this many updates
  double gap = 0.0;         // max_s (V*(s) - V^{(t)}(s))
  double min_improvement = 0.0;  // min_s (V^{(t)}(s) - V^{(t-1)}(s))
  double clip_fraction = 0.0;
  double entropy = 0.0;     // mean over states, nats
};

struct TabularRunRecord {
  std::vector<TabularIterRow> rows;
  TabularPolicy final_policy;
  std::vector<double> final_v;
  double final_gap = 0.0;
  // Final-iterate advantage-sign sets, per state.
  std::vector<std::vector<int>> i_plus, i_zero, i_minus;
  int clamp_warnings = 0;
  bool early_stopped = false;
  int iters_run = 0;
  // C_t range over updated nonzero-advantage pairs across the whole run;
  // meaningful (c_checked) only for ratio/sub with their canonical weights.
  double c_min = 0.0, c_max = 0.0;
  bool c_checked = false;
  bool c_seen = false;  // at least one updated pair existed
};

// Uniform start; per iteration: batch -> exact advantage -> drop zero-
// advantage pairs -> run_emda -> replace policy. Aborts with state and
// iteration if any V^{(t+1)}(s) < V^{(t)}(s) - 1e-12.
TabularRunRecord run_tabular(const Mdp& mdp, const TabularConfig& cfg);

// CSV with header iter,gap,min_improvement,clip_fraction,entropy; doubles
// printed with %.17g so reruns are byte-comparable.
std::string tabular_csv(const TabularRunRecord& record);

}  // namespace hingepo
