// saddlenet: run, validate and summarize experiment configs.
//
//   saddlenet validate <config.json>
//   saddlenet run <config.json>
//   saddlenet summarize <out/manifest.json>
//
// SADDLENET_WORKERS overrides the replica worker-pool size.

#include "saddlenet/experiment.hpp"

#include "CLI11.hpp"

#include <cstdlib>
#include <fstream>
#include <iostream>

namespace {

using namespace saddlenet;

json load_document(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read config '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw ValidationError("config '" + path + "' is not valid JSON: " + e.what());
  }
}

void apply_worker_override() {
  const char* env = std::getenv("SADDLENET_WORKERS");
  if (!env || !*env) return;
  char* end = nullptr;
  const long n = std::strtol(env, &end, 10);
  if (*end != '\0' || n < 1) throw ValidationError("SADDLENET_WORKERS must be a positive integer");
  set_worker_count(static_cast<int>(n));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Diffusion SGD saddle-escape experiments"};
  app.require_subcommand(1);
  std::string config_path, manifest_path;
  auto* run_cmd = app.add_subcommand("run", "run an experiment config");
  run_cmd->add_option("config", config_path, "config document (JSON)")->required();
  auto* validate_cmd = app.add_subcommand("validate", "check a config and print its resolved form");
  validate_cmd->add_option("config", config_path, "config document (JSON)")->required();
  auto* summarize_cmd = app.add_subcommand("summarize", "report on a finished experiment");
  summarize_cmd->add_option("manifest", manifest_path, "manifest.json")->required();
  CLI11_PARSE(app, argc, argv);

  try {
    if (*summarize_cmd) {
      std::cout << summarize(manifest_path);
      return kExitOk;
    }
    const ExperimentConfig cfg = validate_config(load_document(config_path));
    if (*validate_cmd) {
      std::cout << to_json(cfg).dump(2) << "\n";
      return kExitOk;
    }
    apply_worker_override();
    const ExperimentOutcome outcome = run_experiment(cfg);
    if (outcome.exit_code != kExitOk) std::cerr << "error: " << outcome.message << "\n";
    if (!outcome.manifest.empty()) std::cout << "manifest: " << outcome.manifest.string() << "\n";
    return outcome.exit_code;
  } catch (const ValidationError& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const IoError& e) {
    std::cerr << "I/O error: " << e.what() << "\n";
    return kExitIo;
  } catch (const DivergenceError& e) {
    std::cerr << "divergence: " << e.what() << "\n";
    return kExitDivergence;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  }
}
