#pragma once

// Batch execution of a RunConfig: one output directory per run holding
// manifest.json plus experiment-specific CSV / JSON / text files.

#include "dbflow/config.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace dbf {

enum ExitCode : int {
  exit_success = 0,
  exit_config_error = 2,
  exit_certification_failure = 3,
  exit_early_termination = 4,
};

struct ManifestEntry {
  std::string file;  // relative to the run directory
  std::string sha256;
  std::uintmax_t bytes = 0;
};

struct RunManifest {
  std::string config_echo;
  std::string version;
  std::string started_utc;
  double wall_seconds = 0.0;
  int exit_code = exit_success;
  std::string status;
  std::vector<ManifestEntry> files;

  std::string to_json() const;
};

std::string sha256_hex(const std::string& bytes);

// Runs the experiment, writes every output file and manifest.json into
// config.out and returns the manifest (exit_code distinguishes success,
// certification failure and early termination). I/O errors throw.
RunManifest execute(const RunConfig& config);

std::string trace_csv(const FlowTrace& trace);
std::string trace_json(const FlowTrace& trace);

}  // namespace dbf
