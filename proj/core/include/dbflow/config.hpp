#pragma once

// Experiment configuration: INI-style sections with a fixed key set,
// overridable from the command line.

#include "dbflow/flow.hpp"
#include "dbflow/models.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace dbf {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Experiment { flow, emulate, pinch_bench, certify, spectrum };
enum class ModelKind { tfim, tlfim, custom };

std::string to_string(Experiment e);
Experiment parse_experiment(const std::string& text);
std::string to_string(ModelKind m);

struct RunConfig {
  Experiment experiment = Experiment::flow;
  std::uint64_t seed = 0;
  std::filesystem::path out = "run";

  ModelKind model = ModelKind::tfim;
  int sites = 3;
  double coupling = 1.0;
  std::filesystem::path model_file;

  // flow / spectrum
  int steps = 15;
  std::string policy = "canonical";  // canonical | variational | list
  std::vector<std::string> candidates;
  StepSearchConfig search;
  std::optional<bool> snapshots;
  double saturation = 1e-8;
  bool baseline_canonical = false;
  std::string states = "polarized";  // all | polarized | none | comma-separated bit strings
  std::vector<int> spectrum_steps;
  bool duration_scan = false;
  bool write_matrices = false;

  // emulate
  double emulate_duration = 0.1;
  std::vector<int> emulate_steps{4, 8, 16, 32};
  std::vector<double> repeat_durations;
  int repetitions = 10;
  bool compare_single = true;

  // certify
  std::vector<double> certify_durations{1e-3, 2e-3, 5e-3, 1e-2, 2e-2, 5e-2, 1e-1};
  int flip_orders = 0;  // random flip orders on top of the lexicographic one

  // pinch-bench
  std::optional<double> epsilon;
  double epsilon_factor = 0.3;
  double delta = 0.05;
  int trials = 200;
  std::optional<std::size_t> sparsity;
  std::vector<std::uint64_t> envelope_samples{100, 1000};
  int envelope_resamples = 100;
  double envelope_exponent = 2.0;  // R·ε² for the envelope check

  void validate() const;
  // Canonical INI rendering; parsing it yields an equal configuration.
  std::string to_ini() const;
};

struct CliOverrides {
  std::optional<Experiment> experiment;
  std::optional<std::string> model;
  std::optional<int> sites;
  std::optional<double> coupling;
  std::optional<int> steps;
  std::optional<std::string> policy;
  std::optional<std::uint64_t> seed;
  std::optional<std::filesystem::path> out;
};

// Unknown sections or keys, malformed values and out-of-domain values raise
// ConfigError naming the key and its expected domain.
RunConfig parse_config(const std::filesystem::path& path, const CliOverrides& overrides = {});
RunConfig parse_config_text(const std::string& text, const CliOverrides& overrides = {},
                            const std::filesystem::path& base_dir = ".");
RunConfig config_from_overrides(const CliOverrides& overrides);

PauliSum build_model(const RunConfig& config);
FlowPolicy build_policy(const RunConfig& config);
std::vector<BitString> selected_states(const RunConfig& config);

}  // namespace dbf
