#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "hingepo/neural.hpp"
#include "hingepo/tabular.hpp"

namespace hingepo {

std::string git_describe();
std::string compiler_id();

// Config JSON uses the CLI flag names as keys ("emda-step", "t-upd", ...).
// Unknown keys are rejected with the key named in the error.
TabularConfig tabular_config_from_json(const nlohmann::json& j);
nlohmann::json tabular_config_to_json(const TabularConfig& cfg);
NeuralRunConfig neural_config_from_json(const nlohmann::json& j);
nlohmann::json neural_config_to_json(const NeuralRunConfig& cfg);

// Written alongside every output so any run can be replayed bit-exactly:
// `hingepo <command> --config <manifest>` reruns it (paths in `outputs` are
// relative to the out dir the rerun chooses).
struct RunManifest {
  std::string command;
  nlohmann::json config;
  std::vector<std::uint64_t> seeds;
  std::vector<std::string> outputs;
  std::string git;
  std::string compiler;
};

void write_manifest(const RunManifest& m, const std::string& path);
RunManifest read_manifest(const std::string& path);

// Loads a config file that is either a bare config object or a manifest
// produced by `command` (its embedded config is unwrapped; a manifest for a
// different command is an error).
nlohmann::json config_from_file(const std::string& path,
                                const std::string& command);

struct RunOutcome {
  std::vector<std::string> outputs;  // relative to out_dir
  double final_gap = 0.0;
  double min_gap = 0.0;
};

// Each execute_* loads inputs, runs, writes the metrics/artifact files plus
// a sibling <stem>.manifest.json into out_dir, and returns the outputs.
// std::invalid_argument = bad config (exit 2); std::runtime_error = run
// failure (exit 1).
RunOutcome execute_gen_mdp(const nlohmann::json& config,
                           const std::string& out_dir);
RunOutcome execute_tabular(const nlohmann::json& config,
                           const std::string& out_dir);
RunOutcome execute_neural(const nlohmann::json& config,
                          const std::string& out_dir);

struct SweepFailure {
  std::string classifier;
  std::uint64_t seed = 0;
  std::string error;
};

struct SweepOutcome {
  int n_runs = 0;
  std::vector<SweepFailure> failures;
  std::vector<std::string> outputs;
};

// One run per (classifier, seed) over the embedded base config; failures
// are captured per run and reported in summary.json rather than aborting
// the sweep. jobs > 1 runs them on a small thread pool.
SweepOutcome execute_sweep(const nlohmann::json& config,
                           const std::string& out_dir, int jobs);

}  // namespace hingepo
