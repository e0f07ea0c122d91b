#include "hingepo/tabular.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace hingepo {

BatchScheduleKind schedule_from_string(const std::string& s) {
  if (s == "cyclic") return BatchScheduleKind::CyclicSweep;
  if (s == "random") return BatchScheduleKind::UniformRandom;
  throw std::invalid_argument("unknown schedule: " + s);
}

std::string to_string(BatchScheduleKind k) {
  return k == BatchScheduleKind::CyclicSweep ? "cyclic" : "random";
}

void TabularConfig::validate(const Mdp& mdp) const {
  loss.validate();
  emda.validate();
  if (n_iters < 1) throw std::invalid_argument("n_iters must be >= 1");
  if (schedule.batch_size < 1 || schedule.batch_size > mdp.n_states)
    throw std::invalid_argument(
        "batch_size must lie in [1, n_states] so batch states are distinct");
}

Batch next_batch(const BatchSchedule& schedule, int n_states, int n_actions,
                 std::int64_t iteration, Rng& rng) {
  if (schedule.batch_size < 1 || schedule.batch_size > n_states)
    throw std::invalid_argument("batch_size must lie in [1, n_states]");
  Batch b;
  if (schedule.mode == BatchScheduleKind::CyclicSweep) {
    std::int64_t period = static_cast<std::int64_t>(n_states) * n_actions;
    for (int j = 0; j < schedule.batch_size; ++j) {
      std::int64_t i =
          (iteration * schedule.batch_size + j) % period;
      b.pairs.push_back({static_cast<int>(i % n_states),
                         static_cast<int>((i / n_states) % n_actions), 0.0});
    }
  } else {
    std::vector<char> seen(static_cast<std::size_t>(n_states), 0);
    for (int j = 0; j < schedule.batch_size; ++j) {
      auto flat = rng.next_below(
          static_cast<std::uint64_t>(n_states) * n_actions);
      int s = static_cast<int>(flat % n_states);
      int a = static_cast<int>(flat / n_states);
      if (seen[s]) continue;  // duplicate state: drop, batch shrinks
      seen[s] = 1;
      b.pairs.push_back({s, a, 0.0});
    }
  }
  return b;
}

TabularRunRecord run_tabular(const Mdp& mdp, const TabularConfig& cfg) {
  cfg.validate(mdp);
  const int S = mdp.n_states, A = mdp.n_actions;

  ValueIterationResult oracle = value_iteration(mdp, 1e-13);
  TabularPolicy pi = TabularPolicy::uniform(S, A);
  ValueTables cur = evaluate_policy_exact(mdp, pi);
  Rng rng = Rng(cfg.seed).split(0x7ab);

  const bool c_canonical =
      (cfg.loss.classifier == ClassifierKind::Ratio &&
       cfg.loss.weights == WeightScheme::PolicyWeighted) ||
      (cfg.loss.classifier == ClassifierKind::Sub &&
       cfg.loss.weights == WeightScheme::AbsAdvantage);

  TabularRunRecord rec;
  rec.c_checked = c_canonical;
  auto gap_of = [&](const std::vector<double>& v) {
    double g = 0.0;
    for (int s = 0; s < S; ++s)
      g = std::max(g, oracle.tables.v[s] - v[s]);
    return std::max(g, 0.0);
  };

  std::ofstream trace;
  if (!cfg.trace_path.empty()) {
    trace.open(cfg.trace_path, std::ios::binary | std::ios::trunc);
    if (!trace)
      throw std::runtime_error("cannot open trace file: " + cfg.trace_path);
  }

  int calm_streak = 0;
  for (int t = 0; t < cfg.n_iters; ++t) {
    Batch batch = next_batch(cfg.schedule, S, A, t, rng);
    Batch live;
    for (auto& p : batch.pairs) {
      p.adv = cur.adv[mdp.idx(p.s, p.a)];
      if (p.adv != 0.0) live.pairs.push_back(p);
    }

    double clip_fraction = 0.0;
    if (!live.pairs.empty()) {
      EmdaResult em = run_emda(pi, live, cur.adv, cfg.loss, cfg.emda);
      rec.clamp_warnings += em.clamp_warnings;
      clip_fraction = em.clip_fraction;
      if (trace.is_open()) {
        char line[192];
        for (const auto& e : em.grad_log) {
          std::snprintf(line, sizeof line,
                        "{\"iter\":%d,\"k\":%d,\"s\":%d,\"a\":%d,"
                        "\"g\":%.17g,\"active\":%s}\n",
                        t + 1, e.k, e.s, e.a, e.g,
                        e.active ? "true" : "false");
          trace << line;
        }
      }
      for (const auto& p : live.pairs) {
        double c = em.c_table[mdp.idx(p.s, p.a)];
        if (!rec.c_seen) {
          rec.c_min = rec.c_max = c;
          rec.c_seen = true;
        } else {
          rec.c_min = std::min(rec.c_min, c);
          rec.c_max = std::max(rec.c_max, c);
        }
      }
      pi = em.target;
    }

    ValueTables next = evaluate_policy_exact(mdp, pi);
    double min_impr = 0.0;
    for (int s = 0; s < S; ++s) {
      double d = next.v[s] - cur.v[s];
      min_impr = s == 0 ? d : std::min(min_impr, d);
      if (d < -1e-12)
        throw std::runtime_error(
            "state-wise improvement violated at state " + std::to_string(s) +
            ", iteration " + std::to_string(t + 1) + " (delta " +
            std::to_string(d) + ")");
    }
    cur = next;

    TabularIterRow row;
    row.iter = t + 1;
    row.gap = gap_of(cur.v);
    row.min_improvement = min_impr;
    row.clip_fraction = clip_fraction;
    double ent = 0.0;
    for (int s = 0; s < S; ++s)
      for (int a = 0; a < A; ++a) {
        double p = pi.prob(s, a);
        if (p > 0.0) ent -= p * std::log(p);
      }
    row.entropy = ent / S;
    rec.rows.push_back(row);
    rec.iters_run = t + 1;

    if (cfg.early_stop_tol > 0.0) {
      calm_streak = row.gap < cfg.early_stop_tol ? calm_streak + 1 : 0;
      if (calm_streak >= 10) {
        rec.early_stopped = true;
        break;
      }
    }
  }

  rec.final_policy = pi;
  rec.final_v = cur.v;
  rec.final_gap = gap_of(cur.v);
  rec.i_plus.resize(S);
  rec.i_zero.resize(S);
  rec.i_minus.resize(S);
  for (int s = 0; s < S; ++s)
    for (int a = 0; a < A; ++a) {
      double adv = cur.adv[mdp.idx(s, a)];
      (adv > 0.0 ? rec.i_plus[s] : adv < 0.0 ? rec.i_minus[s] : rec.i_zero[s])
          .push_back(a);
    }
  return rec;
}

std::string tabular_csv(const TabularRunRecord& record) {
  std::string out = "iter,gap,min_improvement,clip_fraction,entropy\n";
  char buf[256];
  for (const auto& r : record.rows) {
    std::snprintf(buf, sizeof buf, "%d,%.17g,%.17g,%.17g,%.17g\n", r.iter,
                  r.gap, r.min_improvement, r.clip_fraction, r.entropy);
    out += buf;
  }
  return out;
}

}  // namespace hingepo
