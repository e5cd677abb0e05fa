#pragma once

// Adapt-then-combine diffusion recursion, network centroid bookkeeping and
// the coupled short-term (frozen Hessian) model.

#include "saddlenet/network.hpp"
#include "saddlenet/noise.hpp"
#include "saddlenet/problems.hpp"
#include "saddlenet/types.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace saddlenet {

struct Constants;  // analysis.hpp

struct NetworkState {
  Matrix iterates;  // N x M, row k is agent k
  std::int64_t iteration = 0;

  std::size_t n_agents() const { return static_cast<std::size_t>(iterates.rows()); }
  Eigen::Index dimension() const { return iterates.cols(); }
  bool is_consensus() const;
};

// All agents at the same point.
NetworkState consensus_state(std::size_t n_agents, const Vector& w);

enum class SetKind { G, H, M };
char to_char(SetKind kind);

struct RunConfig {
  double mu = 0.01;
  std::int64_t n_iterations = 1;
  std::uint64_t seed = 0;
  std::int64_t burn_in = 0;
  std::int64_t trace_stride = 1;
  double divergence_cap = 1e6;
  bool record_agents = false;

  CombinationMatrix network;
  AgentProblems problems;  // one per agent
  NoiseModel noise;
  Matrix initial;  // N x M

  // Validates shapes and positivity; throws ValidationError.
  void validate() const;
};

struct TraceRecord {
  std::int64_t iteration = 0;
  Vector centroid;
  double centroid_loss = 0.0;
  double centroid_grad_norm2 = 0.0;
  double disagreement2 = 0.0;
  double disagreement4 = 0.0;
  std::optional<SetKind> set_label;
  bool in_burn_in = false;
  std::optional<Matrix> agents;
};

struct RunResult {
  std::vector<TraceRecord> records;
  std::optional<std::string> divergence;  // set when the run aborted
  std::optional<std::int64_t> divergence_iteration;
  bool diverged() const { return divergence.has_value(); }
};

// phi_k = w_k - mu * stochastic_gradient_k(w_k). Agent k draws from the
// stream (seed, k, state.iteration + 1). When `gradients_out` is given it
// receives the N x M stochastic gradients used. Throws DivergenceError on a
// non-finite gradient.
Matrix adapt_step(const NetworkState& state, const AgentProblems& problems,
                  const NoiseModel& noise, double mu, std::uint64_t seed,
                  Matrix* gradients_out = nullptr);

// w_k = sum_l a_{lk} phi_l, evaluated as phi_k + sum_l a_{lk} (phi_l - phi_k)
// so consensus inputs are reproduced bit for bit.
NetworkState combine_step(const Matrix& phi, const CombinationMatrix& A,
                          std::int64_t iteration);

Vector centroid(const NetworkState& state, const Vector& p);

struct DisagreementMoments {
  double second = 0.0;
  double fourth = 0.0;
};

// sum_k p_k ||w_k - w_c||^2 and sum_k p_k ||w_k - w_c||^4.
DisagreementMoments disagreement_moments(const NetworkState& state, const Vector& p);

struct PerturbationTerms {
  Vector d;  // sum_k p_k (grad J_k(w_k) - grad J_k(w_c))
  Vector s;  // sum_k p_k (stochastic grad_k - grad J_k(w_k))
};

PerturbationTerms perturbation_terms(const NetworkState& state,
                                     const AgentProblems& problems, const Vector& p,
                                     const Matrix& stochastic_gradients);

/// Stateful driver for one realisation of the recursion.
class Simulation {
 public:
  explicit Simulation(const RunConfig& config);

  const NetworkState& state() const { return state_; }
  const Vector& perron() const { return p_; }
  const AggregateCost& cost() const { return cost_; }
  Vector centroid() const { return saddlenet::centroid(state_, p_); }

  // One adapt + combine. Returns the perturbation terms of the centroid
  // recursion evaluated at the pre-step state with the same noise draws.
  // Throws DivergenceError.
  PerturbationTerms step();
  // Same as step() but skips the perturbation bookkeeping.
  void advance();

 private:
  void check_finite() const;

  const RunConfig* config_;
  Vector p_;
  AggregateCost cost_;
  NetworkState state_;
  Matrix gradients_;
};

// Runs the recursion, emitting a record every trace_stride iterations
// (iteration 0 included). `labels` enables G/H/M classification.
RunResult run(const RunConfig& config, const Constants* labels = nullptr);

struct ShortTermStep {
  double dev2 = 0.0;        // ||w~||^2
  double dev3 = 0.0;        // ||w~||^3
  double dev4 = 0.0;        // ||w~||^4
  double model_gap2 = 0.0;  // ||w~ - w~'||^2
  double model2 = 0.0;      // ||w~'||^2
};

struct ShortTermTrace {
  Vector anchor;
  Vector anchor_gradient;
  Matrix anchor_hessian;
  std::vector<ShortTermStep> steps;  // steps[i] is deviation after i+1 iterations
  std::optional<std::string> warning;
};

// Runs `anchor_iteration` plain iterations, freezes the anchor centroid, then
// advances the true recursion and the frozen-Hessian model for `horizon`
// iterations with shared aggregate noise. Deviations are measured as
// w_c(anchor) - w_c(anchor + i). A horizon beyond T/mu is recorded as a
// warning.
ShortTermTrace coupled_short_term_run(const RunConfig& config,
                                      std::int64_t anchor_iteration,
                                      std::int64_t horizon, double horizon_T = 1.0);

}  // namespace saddlenet
