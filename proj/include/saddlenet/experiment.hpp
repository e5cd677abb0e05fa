#pragma once

// Experiment orchestration: runs a validated ExperimentConfig, writes CSV
// outputs plus a manifest, and summarizes a finished manifest.

#include "saddlenet/config.hpp"
#include "saddlenet/parallel.hpp"

#include <filesystem>
#include <string>
#include <string_view>

namespace saddlenet {

enum ExitCode : int { kExitOk = 0, kExitValidation = 1, kExitDivergence = 2, kExitIo = 3 };

struct ExperimentOutcome {
  int exit_code = kExitOk;
  std::string message;
  std::filesystem::path manifest;
};

// Writes into config.output_dir (created if needed). The manifest is written
// last and lists every other file with its SHA-256 and the seeds that produced
// it. Divergence keeps the partial outputs and returns kExitDivergence.
ExperimentOutcome run_experiment(const ExperimentConfig& config,
                                 Execution exec = Execution::parallel);

// Bound-vs-empirical report. Throws IoError listing missing files and
// ValidationError for an empty or malformed manifest.
std::string summarize(const std::filesystem::path& manifest_path);

// 17 significant digits, '.' decimal separator; reads back to the same double.
std::string format_double(double value);

std::string sha256_hex(std::string_view data);

}  // namespace saddlenet
