#include "hingepo/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <thread>

#include "hingepo/generators.hpp"
#include "hingepo/mdp_io.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace hingepo {

namespace {

void require_keys(const json& j, std::initializer_list<const char*> allowed,
                  const char* what) {
  if (!j.is_object())
    throw std::invalid_argument(std::string(what) +
                                " config must be a JSON object");
  for (const auto& item : j.items()) {
    bool ok = false;
    for (const char* k : allowed)
      if (item.key() == k) {
        ok = true;
        break;
      }
    if (!ok)
      throw std::invalid_argument(std::string("unknown ") + what +
                                  " config key: " + item.key());
  }
}

double get_num(const json& j, const char* key, double dflt) {
  if (!j.contains(key)) return dflt;
  if (!j[key].is_number())
    throw std::invalid_argument(std::string("config key '") + key +
                                "' must be a number");
  return j[key].get<double>();
}

int get_int(const json& j, const char* key, int dflt) {
  if (!j.contains(key)) return dflt;
  if (!j[key].is_number_integer())
    throw std::invalid_argument(std::string("config key '") + key +
                                "' must be an integer");
  return j[key].get<int>();
}

std::uint64_t get_u64(const json& j, const char* key, std::uint64_t dflt) {
  if (!j.contains(key)) return dflt;
  if (!j[key].is_number_integer() || (j[key].is_number_integer() &&
                                      !j[key].is_number_unsigned() &&
                                      j[key].get<std::int64_t>() < 0))
    throw std::invalid_argument(std::string("config key '") + key +
                                "' must be a nonnegative integer");
  return j[key].get<std::uint64_t>();
}

std::string get_str(const json& j, const char* key, const std::string& dflt) {
  if (!j.contains(key)) return dflt;
  if (!j[key].is_string())
    throw std::invalid_argument(std::string("config key '") + key +
                                "' must be a string");
  return j[key].get<std::string>();
}

bool get_bool(const json& j, const char* key, bool dflt) {
  if (!j.contains(key)) return dflt;
  if (!j[key].is_boolean())
    throw std::invalid_argument(std::string("config key '") + key +
                                "' must be a boolean");
  return j[key].get<bool>();
}

HingeLossSpec loss_from_json(const json& j) {
  HingeLossSpec loss;
  loss.classifier = classifier_from_string(get_str(j, "classifier", "ratio"));
  loss.weights = weights_from_string(get_str(j, "weights", "unit"));
  loss.margin = get_num(j, "margin", loss.margin);
  loss.w_max = get_num(j, "w-max", loss.w_max);
  return loss;
}

void loss_to_json(const HingeLossSpec& loss, json& j) {
  j["classifier"] = to_string(loss.classifier);
  j["weights"] = to_string(loss.weights);
  j["margin"] = loss.margin;
  j["w-max"] = loss.w_max;
}

std::string join_out(const std::string& out_dir, const std::string& rel) {
  fs::path p(rel);
  if (p.is_absolute()) return rel;
  return (fs::path(out_dir) / p).string();
}

void write_text(const std::string& path, const std::string& text) {
  fs::path p(path);
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("cannot open output file: " + path);
  f << text;
  if (!f) throw std::runtime_error("short write: " + path);
}

// metrics.csv -> metrics.manifest.json
std::string manifest_name(const std::string& out_rel) {
  fs::path p(out_rel);
  p.replace_extension();
  return p.string() + ".manifest.json";
}

json manifest_to_json(const RunManifest& m) {
  json j;
  j["command"] = m.command;
  j["config"] = m.config;
  j["seeds"] = m.seeds;
  j["outputs"] = m.outputs;
  j["build"] = {{"git_describe", m.git}, {"compiler", m.compiler}};
  return j;
}

json parse_json_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::invalid_argument("cannot open file: " + path);
  try {
    return json::parse(f);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument("JSON parse error in " + path + ": " +
                                e.what());
  }
}

}  // namespace

std::string git_describe() {
#ifdef HINGEPO_GIT_DESCRIBE
  return HINGEPO_GIT_DESCRIBE;
#else
  return "unknown";
#endif
}

std::string compiler_id() {
#if defined(__clang__)
  return std::string("clang ") + __clang_version__;
#elif defined(__GNUC__)
  return std::string("gcc ") + __VERSION__;
#else
  return "unknown";
#endif
}

TabularConfig tabular_config_from_json(const json& j) {
  require_keys(j,
               {"mdp", "out", "classifier", "weights", "margin", "w-max",
                "emda-step", "emda-iters", "iters", "schedule", "batch-size",
                "early-stop-tol", "seed", "trace-emda"},
               "run-tabular");
  TabularConfig cfg;
  cfg.loss = loss_from_json(j);
  cfg.emda.eta = get_num(j, "emda-step", cfg.emda.eta);
  cfg.emda.k_max = get_int(j, "emda-iters", cfg.emda.k_max);
  cfg.n_iters = get_int(j, "iters", cfg.n_iters);
  cfg.schedule.mode = schedule_from_string(get_str(j, "schedule", "cyclic"));
  cfg.schedule.batch_size = get_int(j, "batch-size", cfg.schedule.batch_size);
  cfg.early_stop_tol = get_num(j, "early-stop-tol", cfg.early_stop_tol);
  cfg.seed = get_u64(j, "seed", cfg.seed);
  cfg.trace_path = get_str(j, "trace-emda", "");
  return cfg;
}

json tabular_config_to_json(const TabularConfig& cfg) {
  json j;
  loss_to_json(cfg.loss, j);
  j["emda-step"] = cfg.emda.eta;
  j["emda-iters"] = cfg.emda.k_max;
  j["iters"] = cfg.n_iters;
  j["schedule"] = to_string(cfg.schedule.mode);
  j["batch-size"] = cfg.schedule.batch_size;
  j["early-stop-tol"] = cfg.early_stop_tol;
  j["seed"] = cfg.seed;
  if (!cfg.trace_path.empty()) j["trace-emda"] = cfg.trace_path;
  return j;
}

NeuralRunConfig neural_config_from_json(const json& j) {
  require_keys(j,
               {"mdp", "out", "classifier", "weights", "margin", "w-max",
                "emda-step", "emda-iters", "T", "t-upd", "width-f", "width-q",
                "radius-f", "radius-q", "sqrt-t-step", "seed"},
               "run-neural");
  NeuralRunConfig cfg;
  cfg.loss = loss_from_json(j);
  if (!j.contains("weights")) {
    // neural runs default to the weighting each classifier's update-size
    // bounds assume: policy-weighted for ratio, |A| otherwise
    cfg.loss.weights = cfg.loss.classifier == ClassifierKind::Ratio
                           ? WeightScheme::PolicyWeighted
                           : WeightScheme::AbsAdvantage;
  }
  cfg.emda.eta = get_num(j, "emda-step", cfg.emda.eta);
  cfg.emda.k_max = get_int(j, "emda-iters", cfg.emda.k_max);
  cfg.T = get_int(j, "T", cfg.T);
  cfg.t_upd = get_int(j, "t-upd", cfg.t_upd);
  cfg.m_f = get_int(j, "width-f", cfg.m_f);
  cfg.m_q = get_int(j, "width-q", cfg.m_q);
  cfg.r_f = get_num(j, "radius-f", cfg.r_f);
  cfg.r_q = get_num(j, "radius-q", cfg.r_q);
  cfg.sqrt_t_step = get_bool(j, "sqrt-t-step", cfg.sqrt_t_step);
  cfg.seed = get_u64(j, "seed", cfg.seed);
  return cfg;
}

json neural_config_to_json(const NeuralRunConfig& cfg) {
  json j;
  loss_to_json(cfg.loss, j);
  j["emda-step"] = cfg.emda.eta;
  j["emda-iters"] = cfg.emda.k_max;
  j["T"] = cfg.T;
  j["t-upd"] = cfg.t_upd;
  j["width-f"] = cfg.m_f;
  j["width-q"] = cfg.m_q;
  j["radius-f"] = cfg.r_f;
  j["radius-q"] = cfg.r_q;
  j["sqrt-t-step"] = cfg.sqrt_t_step;
  j["seed"] = cfg.seed;
  return j;
}

void write_manifest(const RunManifest& m, const std::string& path) {
  write_text(path, manifest_to_json(m).dump(2) + "\n");
}

RunManifest read_manifest(const std::string& path) {
  json j = parse_json_file(path);
  require_keys(j, {"command", "config", "seeds", "outputs", "build"},
               "manifest");
  for (const char* k : {"command", "config", "seeds", "outputs", "build"})
    if (!j.contains(k))
      throw std::invalid_argument("manifest missing key '" + std::string(k) +
                                  "': " + path);
  RunManifest m;
  m.command = j["command"].get<std::string>();
  m.config = j["config"];
  m.seeds = j["seeds"].get<std::vector<std::uint64_t>>();
  m.outputs = j["outputs"].get<std::vector<std::string>>();
  m.git = j["build"].value("git_describe", "unknown");
  m.compiler = j["build"].value("compiler", "unknown");
  return m;
}

json config_from_file(const std::string& path, const std::string& command) {
  json j = parse_json_file(path);
  if (j.is_object() && j.contains("command")) {
    RunManifest m = read_manifest(path);
    if (m.command != command)
      throw std::invalid_argument("manifest " + path + " was produced by '" +
                                  m.command + "', not '" + command + "'");
    return m.config;
  }
  return j;
}

RunOutcome execute_gen_mdp(const json& config, const std::string& out_dir) {
  require_keys(config,
               {"kind", "n", "w", "h", "states", "actions", "gamma", "seed",
                "out"},
               "gen-mdp");
  const std::string kind = get_str(config, "kind", "");
  const double gamma = get_num(config, "gamma", 0.9);
  const std::uint64_t seed = get_u64(config, "seed", 0);
  Mdp mdp;
  if (kind == "chain") {
    mdp = make_chain(get_int(config, "n", 5), gamma);
  } else if (kind == "gridworld") {
    mdp = make_gridworld(get_int(config, "w", 3), get_int(config, "h", 3),
                         gamma);
  } else if (kind == "random") {
    mdp = make_random(get_int(config, "states", 5),
                      get_int(config, "actions", 3), gamma, seed);
  } else {
    throw std::invalid_argument(
        "gen-mdp kind must be chain, gridworld or random (got '" + kind +
        "')");
  }
  const std::string out_rel = get_str(config, "out", kind + "_mdp.json");
  const std::string out_abs = join_out(out_dir, out_rel);
  if (fs::path(out_abs).has_parent_path())
    fs::create_directories(fs::path(out_abs).parent_path());
  save_mdp(mdp, out_abs);

  json snapshot = config;
  snapshot["kind"] = kind;
  snapshot["gamma"] = gamma;
  snapshot["out"] = out_rel;
  RunManifest m;
  m.command = "gen-mdp";
  m.config = snapshot;
  if (kind == "random") m.seeds = {seed};
  m.outputs = {out_rel};
  m.git = git_describe();
  m.compiler = compiler_id();
  const std::string man_rel = manifest_name(out_rel);
  write_manifest(m, join_out(out_dir, man_rel));

  RunOutcome out;
  out.outputs = {out_rel, man_rel};
  return out;
}

RunOutcome execute_tabular(const json& config, const std::string& out_dir) {
  TabularConfig cfg = tabular_config_from_json(config);
  const std::string mdp_path = get_str(config, "mdp", "");
  if (mdp_path.empty())
    throw std::invalid_argument("config key 'mdp' (MDP file path) is required");
  const Mdp mdp = load_mdp(mdp_path);
  const std::string out_rel = get_str(config, "out", "tabular_metrics.csv");

  TabularConfig run_cfg = cfg;
  if (!run_cfg.trace_path.empty())
    run_cfg.trace_path = join_out(out_dir, run_cfg.trace_path);
  const TabularRunRecord rec = run_tabular(mdp, run_cfg);
  write_text(join_out(out_dir, out_rel), tabular_csv(rec));

  json snapshot = tabular_config_to_json(cfg);
  snapshot["mdp"] = mdp_path;
  snapshot["out"] = out_rel;
  RunManifest m;
  m.command = "run-tabular";
  m.config = snapshot;
  m.seeds = {cfg.seed};
  m.outputs = {out_rel};
  if (!cfg.trace_path.empty()) m.outputs.push_back(cfg.trace_path);
  m.git = git_describe();
  m.compiler = compiler_id();
  const std::string man_rel = manifest_name(out_rel);
  write_manifest(m, join_out(out_dir, man_rel));

  RunOutcome out;
  out.outputs = m.outputs;
  out.outputs.push_back(man_rel);
  out.final_gap = rec.final_gap;
  out.min_gap = rec.rows.empty()
                    ? rec.final_gap
                    : std::min_element(rec.rows.begin(), rec.rows.end(),
                                       [](const TabularIterRow& a,
                                          const TabularIterRow& b) {
                                         return a.gap < b.gap;
                                       })
                          ->gap;
  return out;
}

RunOutcome execute_neural(const json& config, const std::string& out_dir) {
  NeuralRunConfig cfg = neural_config_from_json(config);
  const std::string mdp_path = get_str(config, "mdp", "");
  if (mdp_path.empty())
    throw std::invalid_argument("config key 'mdp' (MDP file path) is required");
  const Mdp mdp = load_mdp(mdp_path);
  const std::string out_rel = get_str(config, "out", "neural_metrics.csv");

  const NeuralRunRecord rec = run_neural(mdp, cfg);
  write_text(join_out(out_dir, out_rel), neural_csv(rec));

  json snapshot = neural_config_to_json(cfg);
  snapshot["mdp"] = mdp_path;
  snapshot["out"] = out_rel;
  RunManifest m;
  m.command = "run-neural";
  m.config = snapshot;
  m.seeds = {cfg.seed};
  m.outputs = {out_rel};
  m.git = git_describe();
  m.compiler = compiler_id();
  const std::string man_rel = manifest_name(out_rel);
  write_manifest(m, join_out(out_dir, man_rel));

  RunOutcome out;
  out.outputs = {out_rel, man_rel};
  out.final_gap = rec.final_gap;
  out.min_gap = rec.min_gap;
  return out;
}

SweepOutcome execute_sweep(const json& config, const std::string& out_dir,
                           int jobs) {
  require_keys(config, {"algo", "classifiers", "seeds", "base"}, "sweep");
  const std::string algo = get_str(config, "algo", "tabular");
  if (algo != "tabular" && algo != "neural")
    throw std::invalid_argument("sweep algo must be tabular or neural (got '" +
                                algo + "')");
  std::vector<std::string> classifiers = {"ratio", "sub", "root", "log"};
  if (config.contains("classifiers")) {
    if (!config["classifiers"].is_array())
      throw std::invalid_argument("config key 'classifiers' must be an array");
    classifiers = config["classifiers"].get<std::vector<std::string>>();
  }
  std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5};
  if (config.contains("seeds")) {
    if (!config["seeds"].is_array())
      throw std::invalid_argument("config key 'seeds' must be an array");
    seeds = config["seeds"].get<std::vector<std::uint64_t>>();
  }
  if (classifiers.empty() || seeds.empty())
    throw std::invalid_argument("sweep needs at least one classifier and seed");
  for (const std::string& c : classifiers) classifier_from_string(c);
  json base = config.value("base", json::object());

  struct RunSlot {
    std::string classifier;
    std::uint64_t seed = 0;
    json cfg;
    bool ok = false;
    std::string error;
    RunOutcome outcome;
  };
  std::vector<RunSlot> slots;
  for (const std::string& c : classifiers)
    for (std::uint64_t s : seeds) {
      RunSlot slot;
      slot.classifier = c;
      slot.seed = s;
      slot.cfg = base;
      slot.cfg["classifier"] = c;
      slot.cfg["seed"] = s;
      slot.cfg["out"] = algo + "_" + c + "_seed" + std::to_string(s) + ".csv";
      slots.push_back(std::move(slot));
    }

  // Validate the composed configs up front: a malformed base is a config
  // error (exit 2), not a per-run failure.
  for (const RunSlot& slot : slots) {
    if (algo == "tabular")
      tabular_config_from_json(slot.cfg);
    else
      neural_config_from_json(slot.cfg);
    if (get_str(slot.cfg, "mdp", "").empty())
      throw std::invalid_argument(
          "sweep base config key 'mdp' (MDP file path) is required");
  }

  auto work = [&](RunSlot& slot) {
    try {
      slot.outcome = algo == "tabular" ? execute_tabular(slot.cfg, out_dir)
                                       : execute_neural(slot.cfg, out_dir);
      slot.ok = true;
    } catch (const std::exception& e) {
      slot.ok = false;
      slot.error = e.what();
    }
  };

  jobs = std::max(jobs, 1);
  if (jobs == 1 || slots.size() == 1) {
    for (RunSlot& slot : slots) work(slot);
  } else {
    std::atomic<std::size_t> next{0};
    auto runner = [&]() {
      for (;;) {
        std::size_t i = next.fetch_add(1);
        if (i >= slots.size()) return;
        work(slots[i]);
      }
    };
    std::vector<std::thread> pool;
    const std::size_t n_threads =
        std::min<std::size_t>(static_cast<std::size_t>(jobs), slots.size());
    pool.reserve(n_threads);
    for (std::size_t i = 0; i < n_threads; ++i) pool.emplace_back(runner);
    for (std::thread& th : pool) th.join();
  }

  SweepOutcome outcome;
  outcome.n_runs = static_cast<int>(slots.size());
  json rows = json::array();
  for (const std::string& c : classifiers) {
    std::vector<double> finals, mins;
    int failed = 0;
    for (const RunSlot& slot : slots)
      if (slot.classifier == c) {
        if (slot.ok) {
          finals.push_back(slot.outcome.final_gap);
          mins.push_back(slot.outcome.min_gap);
        } else {
          ++failed;
        }
      }
    auto mean_std = [](const std::vector<double>& xs) {
      json out;
      if (xs.empty()) {
        out["mean"] = nullptr;
        out["std"] = nullptr;
        return out;
      }
      double mean = 0.0;
      for (double x : xs) mean += x;
      mean /= static_cast<double>(xs.size());
      double var = 0.0;
      for (double x : xs) var += (x - mean) * (x - mean);
      var /= static_cast<double>(xs.size());
      out["mean"] = mean;
      out["std"] = std::sqrt(var);
      return out;
    };
    json row;
    row["classifier"] = c;
    row["n_runs"] = static_cast<int>(seeds.size());
    row["n_failed"] = failed;
    row["final_gap"] = mean_std(finals);
    row["min_gap"] = mean_std(mins);
    rows.push_back(row);
  }
  json failures = json::array();
  for (const RunSlot& slot : slots)
    if (!slot.ok) {
      failures.push_back({{"classifier", slot.classifier},
                          {"seed", slot.seed},
                          {"error", slot.error}});
      outcome.failures.push_back({slot.classifier, slot.seed, slot.error});
    }
  json summary;
  summary["algo"] = algo;
  summary["classifiers"] = rows;
  summary["failures"] = failures;
  write_text(join_out(out_dir, "summary.json"), summary.dump(2) + "\n");

  for (const RunSlot& slot : slots)
    if (slot.ok)
      for (const std::string& o : slot.outcome.outputs)
        outcome.outputs.push_back(o);
  outcome.outputs.push_back("summary.json");

  json snapshot;
  snapshot["algo"] = algo;
  snapshot["classifiers"] = classifiers;
  snapshot["seeds"] = seeds;
  snapshot["base"] = base;
  RunManifest m;
  m.command = "sweep";
  m.config = snapshot;
  m.seeds = seeds;
  m.outputs = outcome.outputs;
  m.git = git_describe();
  m.compiler = compiler_id();
  write_manifest(m, join_out(out_dir, "sweep.manifest.json"));
  outcome.outputs.push_back("sweep.manifest.json");
  return outcome;
}

}  // namespace hingepo
