#pragma once

// Experiment configuration documents (JSON).
//
// A document is validated into an ExperimentConfig with every default
// resolved; to_json() emits the resolved form, which revalidates to an equal
// object. Unknown fields are rejected by name.

#include "saddlenet/analysis.hpp"
#include "saddlenet/engine.hpp"

#include "json.hpp"

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace saddlenet {

using json = nlohmann::json;

inline constexpr int kSchemaVersion = 1;

enum class ExperimentKind { single_run, escape_sweep, deviation_sweep, descent_check, surface_grid };

std::string to_string(ExperimentKind kind);

struct NetworkSpec {
  std::size_t n_agents = 1;
  std::vector<std::array<std::size_t, 2>> edges;
  std::vector<bool> self_loops;
  std::string rule = "averaging";  // averaging | metropolis | explicit
  std::vector<double> entries;     // row-major N x N when rule == explicit
  friend bool operator==(const NetworkSpec&, const NetworkSpec&) = default;
};

struct ProblemSpec {
  std::string kind = "logistic";  // logistic | quadratic_saddle | cubic_saddle
  double reg = 0.1;
  int quadrature_nodes = LogisticNNProblem::kDefaultNodes;
  std::vector<double> hessian;    // row-major M x M (saddle kinds)
  std::vector<double> direction;  // cubic_saddle
  double kappa = 0.0;             // cubic_saddle
  friend bool operator==(const ProblemSpec&, const ProblemSpec&) = default;
};

struct NoiseComponentSpec {
  std::string kind;  // natural_sampling | directional | isotropic
  std::vector<double> direction;
  double stddev = 0.0;
  friend bool operator==(const NoiseComponentSpec&, const NoiseComponentSpec&) = default;
};

struct NoiseSpec {
  std::vector<NoiseComponentSpec> components;
  DeclaredMoments declared;
  friend bool operator==(const NoiseSpec&, const NoiseSpec&) = default;
};

struct RunSpec {
  double mu = 0.01;
  std::int64_t n_iterations = 1;
  std::uint64_t seed = 0;
  std::int64_t burn_in = 0;
  std::int64_t trace_stride = 1;
  double divergence_cap = 1e6;
  bool record_agents = false;
  NetworkSpec network;
  std::vector<ProblemSpec> problems;  // one per agent
  NoiseSpec noise;
  std::vector<std::vector<double>> initial;  // one row per agent
  friend bool operator==(const RunSpec&, const RunSpec&) = default;
};

// Theory constants; the noise constants (sigma2, sigma_u2, sigma_l2) come from
// the noise model's declared moments.
struct ConstantsSpec {
  double delta = 1.0;
  double pi = 0.5;
  double tau = 0.1;
  friend bool operator==(const ConstantsSpec&, const ConstantsSpec&) = default;
};

struct EscapeSpec {
  std::vector<double> mu_list;
  std::string criterion = "ball_exit";  // ball_exit | loss_drop | theorem_descent
  double threshold = 0.1;               // radius or loss drop; unused for theorem_descent
  std::int64_t horizon = 50'000;
  bool run_to_horizon = false;
  std::int64_t tail_window = 0;
  friend bool operator==(const EscapeSpec&, const EscapeSpec&) = default;
};

struct DeviationSpec {
  std::vector<double> mu_list;
  double horizon_T = 1.0;
  std::int64_t anchor_iteration = 0;
  std::int64_t disagreement_burn_in = 0;
  std::int64_t disagreement_window = 0;  // 0 disables the disagreement sweep
  friend bool operator==(const DeviationSpec&, const DeviationSpec&) = default;
};

struct DescentSpec {
  std::string region = "H";
  std::vector<double> box_lo;
  std::vector<double> box_hi;
  long max_attempts = 100'000;
  friend bool operator==(const DescentSpec&, const DescentSpec&) = default;
};

struct SurfaceSpec {
  std::vector<double> lo{-2.0, -2.0};
  std::vector<double> hi{2.0, 2.0};
  std::vector<std::int64_t> points{81, 81};
  friend bool operator==(const SurfaceSpec&, const SurfaceSpec&) = default;
};

struct ExperimentConfig {
  int schema_version = kSchemaVersion;
  ExperimentKind experiment = ExperimentKind::single_run;
  std::string output_dir = "out";
  RunSpec run;
  std::optional<ConstantsSpec> constants;
  std::vector<std::uint64_t> replica_seeds;
  std::optional<EscapeSpec> escape;
  std::optional<DeviationSpec> deviation;
  std::optional<DescentSpec> descent;
  std::optional<SurfaceSpec> surface;
  friend bool operator==(const ExperimentConfig&, const ExperimentConfig&) = default;
};

// Throws ValidationError naming the offending field or quoting the violated
// constraint.
ExperimentConfig validate_config(const json& document);
json to_json(const ExperimentConfig& config);

// Domain objects built from a validated config.
CombinationMatrix build_network(const NetworkSpec& spec);
AgentProblems build_problems(const RunSpec& spec);
NoiseModel build_noise(const NoiseSpec& spec);
RunConfig build_run_config(const RunSpec& spec);
Constants build_constants(const ConstantsSpec& spec, double mu, const DeclaredMoments& noise);

}  // namespace saddlenet
