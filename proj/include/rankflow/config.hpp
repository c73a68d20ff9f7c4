#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace rankflow {

// Experiment description, INI style: [section] headers, key = value lines,
// '#' comments, comma-separated lists. Unknown sections or keys and
// malformed values are rejected with file:line anchored messages.

struct SystemSection {
  bool infinite = false;
  std::optional<std::size_t> n;  // optional, cross-checked against lengths
  std::vector<double> drifts;
  std::vector<double> sigmas;    // exactly one of sigmas / sigmas2
  std::vector<double> sigmas2;
  std::vector<double> initial;
  // infinite systems only:
  std::optional<std::size_t> M;
  std::optional<double> gamma1;
  std::optional<double> gamma2;
  std::optional<double> initial_slope;   // X_i(0) = slope * i + offset
  std::optional<double> initial_offset;
};

struct SimulationSection {
  double T = 1.0;
  double dt = 1e-3;
  std::string scheme = "euler";  // euler | event
  std::optional<double> epsilon_triple;
  std::size_t decimation = 1;
  double safety_margin = 1.0;
  std::size_t max_steps = 20'000'000;
};

struct McSection {
  std::optional<std::size_t> n_paths;
  std::optional<std::uint64_t> seed;  // mandatory wherever noise is used
  std::vector<double> epsilons;       // strictly decreasing for curves
};

struct OutputSection {
  std::string trajectory = "trajectory.csv";
  std::string activations = "activations.csv";
  std::string report = "report.json";
  std::string curve = "triples.csv";
  std::string check = "check.json";
};

struct ValidateSection {
  std::vector<std::string> checks;  // empty = run the full battery
};

struct ExperimentConfig {
  SystemSection system;
  SimulationSection simulation;
  McSection mc;
  OutputSection output;
  ValidateSection validate;
  std::string source_path;
};

ExperimentConfig parse_config_file(const std::string& path);
ExperimentConfig parse_config_text(const std::string& text,
                                   const std::string& path_label);

// Rank-level variances: sigmas2 verbatim, or the squares of sigmas.
std::vector<double> resolved_variances(const SystemSection& system);

// Rank-level sigmas: sigmas verbatim, or element-wise sqrt of sigmas2.
std::vector<double> resolved_sigmas(const SystemSection& system);

}  // namespace rankflow
