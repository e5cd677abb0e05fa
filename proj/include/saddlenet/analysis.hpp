#pragma once

// Set classification (G / H / M), escape-time bounds, and the Monte Carlo
// experiments that check the escape and descent behaviour at desk scale.

#include "saddlenet/engine.hpp"
#include "saddlenet/parallel.hpp"
#include "saddlenet/problems.hpp"
#include "saddlenet/spectral.hpp"
#include "saddlenet/types.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace saddlenet {

struct Constants {
  double mu = 0.0;
  double delta = 0.0;
  double sigma2 = 0.0;
  double pi_confidence = 0.5;
  double tau = 0.0;
  double sigma_u2 = 0.0;
  double sigma_l2 = 0.0;

  double c1() const { return 0.5 * (1.0 - 2.0 * mu * delta); }
  double c2() const { return delta * sigma2 / 2.0; }
  // Squared-gradient threshold separating G from its complement.
  double gradient_threshold() const {
    return mu * (c2() / c1()) * (1.0 + 1.0 / pi_confidence);
  }

  // Throws ValidationError quoting the violated constraint.
  void validate() const;
  Constants with_mu(double new_mu) const;
};

struct SetLabel {
  SetKind label = SetKind::M;
  double grad_norm2 = 0.0;
  double lambda_min = 0.0;
};

// G if ||grad J||^2 >= threshold, else H if lambda_min <= -tau, else M.
SetLabel classify(const Vector& w, const Problem& cost, const Constants& constants);

// ceil(log(2 M sigma_u2 / sigma_l2 + 1) / log(1 + 2 mu tau)), at least 1.
// Throws ValidationError when sigma_l2 <= 0 (no finite bound).
std::int64_t escape_time_bound(int m_dim, double sigma_u2, double sigma_l2, double mu,
                               double tau);

// ceil((J0 - J_floor) / (mu^2 c2 pi) * i_s).
std::int64_t second_order_iteration_bound(double j0, double j_floor, double mu, double c2,
                                          double pi_confidence, std::int64_t i_s);

struct ExitCriterion {
  enum class Kind { ball_exit, loss_drop };
  Kind kind = Kind::ball_exit;
  double threshold = 0.1;

  static ExitCriterion ball(double radius) { return {Kind::ball_exit, radius}; }
  static ExitCriterion loss_drop(double delta) { return {Kind::loss_drop, delta}; }
  // Loss drop of (mu / 2) M sigma_u2, the descent promised after escape.
  static ExitCriterion theorem_descent(const Constants& c, Eigen::Index dim) {
    return loss_drop(0.5 * c.mu * static_cast<double>(dim) * c.sigma_u2);
  }
};

struct EscapeOptions {
  std::int64_t horizon = 50'000;
  bool run_to_horizon = false;     // keep iterating after the exit event
  std::int64_t tail_window = 0;    // average the centroid over the last iterations
  // Reference point for the exit test; defaults to the initial centroid.
  std::optional<Vector> anchor;
};

struct ReplicaEscape {
  std::uint64_t seed = 0;
  std::int64_t escape_iteration = 0;  // horizon + 1 when censored
  bool censored = true;
  bool diverged = false;
  Vector final_centroid;
  Vector tail_centroid;  // empty unless tail_window > 0
};

struct EscapeStats {
  double mu = 0.0;
  double tau = 0.0;
  ExitCriterion criterion;
  std::int64_t horizon = 0;
  std::vector<ReplicaEscape> replicas;
  // Quantiles over replicas; censored replicas count as +infinity.
  double median = 0.0;
  double q1 = 0.0;
  double q3 = 0.0;
  std::size_t n_escaped = 0;
};

// The anchor (options.anchor, else the template's initial centroid) must
// classify as H.
EscapeStats empirical_escape_time(const RunConfig& tmpl, const Constants& constants,
                                  const ExitCriterion& criterion,
                                  std::span<const std::uint64_t> seeds,
                                  const EscapeOptions& options = {},
                                  Execution exec = Execution::parallel);

enum class Region { G, H };

struct DescentResult {
  Region region = Region::H;
  std::int64_t steps = 0;
  double mean_drop = 0.0;  // E[J(start) - J(after steps)]
  double standard_error = 0.0;
  std::vector<double> drops;
  std::vector<Vector> starts;
};

// Start points are rejection-sampled from `start_box` until they classify into
// `region`; every agent starts there. G runs one iteration, H runs the escape
// time bound i^s computed from the constants.
DescentResult descent_experiment(Region region, const RunConfig& tmpl,
                                 const Constants& constants, const Box& start_box,
                                 std::span<const std::uint64_t> seeds,
                                 Execution exec = Execution::parallel,
                                 long max_attempts = 100'000);

struct DeviationRow {
  double mu = 0.0;
  std::int64_t horizon = 0;
  // Max over the horizon of the replica mean of each quantity.
  double dev2 = 0.0;
  double dev3 = 0.0;
  double dev4 = 0.0;
  double model_gap2 = 0.0;
  double model2 = 0.0;
};

struct DeviationSweep {
  std::vector<DeviationRow> rows;
  double slope_dev2 = 0.0;
  double slope_dev3 = 0.0;
  double slope_dev4 = 0.0;
  double slope_model_gap2 = 0.0;
  double slope_model2 = 0.0;
};

// Horizon floor(T / mu) per step size; anchor is the template's initial
// centroid after `anchor_iteration` iterations.
DeviationSweep deviation_scaling_sweep(std::span<const double> mu_list, double horizon_T,
                                       const RunConfig& tmpl,
                                       std::span<const std::uint64_t> seeds,
                                       std::int64_t anchor_iteration = 0,
                                       Execution exec = Execution::parallel);

struct DisagreementRow {
  double mu = 0.0;
  double mean2 = 0.0;
  double mean4 = 0.0;
};

struct DisagreementSweep {
  std::vector<DisagreementRow> rows;
  double slope2 = 0.0;
  double slope4 = 0.0;
};

// Time- and replica-averaged disagreement moments after burn_in iterations.
DisagreementSweep disagreement_scaling_sweep(std::span<const double> mu_list,
                                             const RunConfig& tmpl, std::int64_t burn_in,
                                             std::int64_t window,
                                             std::span<const std::uint64_t> seeds,
                                             Execution exec = Execution::parallel);

// Least-squares slope of log(y) against log(x).
double loglog_slope(std::span<const double> x, std::span<const double> y);

// Type-7 quantile; +infinity entries allowed.
double quantile(std::vector<double> values, double q);

}  // namespace saddlenet
