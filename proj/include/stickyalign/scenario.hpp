#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "stickyalign/diagnostics.hpp"

namespace stickyalign {

// Parsed scenario configuration (JSON file plus flag overrides).
struct ScenarioConfig {
  CommunicationKernel kernel = CommunicationKernel::zero();
  InitialData initial;
  int N = 0;  // 0: default to the atom count of atomic data
  std::vector<int> Ns;
  int N_ref = 0;
  double T = 1.0;
  std::vector<double> snapshot_times;
  int snapshot_count = 21;
  double dt_max = 0.01;
  FluxMode mode = FluxMode::Sample;
  std::vector<double> probe_times;
  std::uint64_t seed = 0;
  std::string out_dir = "out";
  bool require_threshold = true;
  bool inject_non_entropic = false;  // verification test hook
  std::optional<InitialData> initial_b;
  std::optional<double> flux_shift;
  std::string echo;
};

struct CliOverrides {
  std::optional<double> T;
  std::optional<double> dt_max;
  std::optional<int> N;
  std::optional<std::vector<int>> Ns;
  std::optional<std::string> mode;
  std::optional<std::string> out;
  std::optional<std::vector<double>> snapshots;
};

// Throws std::invalid_argument / std::runtime_error on malformed input;
// the CLI maps those to exit code 2.
ScenarioConfig load_scenario(const std::string& path, const CliOverrides& overrides);
CommunicationKernel kernel_from_json_text(const std::string& text);

int cmd_simulate(const ScenarioConfig& cfg);
int cmd_verify(const ScenarioConfig& cfg);
int cmd_converge(const ScenarioConfig& cfg);
int cmd_flock(const ScenarioConfig& cfg);
int cmd_stability(const ScenarioConfig& cfg);

// 17 significant digits; identical configs produce byte-identical files.
std::string csv_num(double v);

}  // namespace stickyalign
