#pragma once

// Stochastic-gradient constructions and numerical probes of the noise
// assumptions (zero conditional mean, bounded moments, Lipschitz covariance,
// noise floor in the descent subspace).

#include "saddlenet/problems.hpp"
#include "saddlenet/rng.hpp"
#include "saddlenet/types.hpp"

#include <span>
#include <variant>
#include <vector>

namespace saddlenet {

// Replace the exact gradient with a per-sample gradient grad Q(w; x).
struct NaturalSampling {};

// v * direction with v ~ N(0, stddev^2) and a unit direction.
struct DirectionalNoise {
  Vector direction;
  double stddev = 0.0;
};

// N(0, stddev^2 I).
struct IsotropicNoise {
  double stddev = 0.0;
};

using NoiseComponent = std::variant<NaturalSampling, DirectionalNoise, IsotropicNoise>;

// Constants the user asserts for the noise process. They parameterise the
// theory (set thresholds, escape bounds) and are checked against probes.
struct DeclaredMoments {
  double sigma2 = 0.0;    // E||s||^2 bound
  double sigma4 = 0.0;    // E||s||^4 bound
  double sigma_l2 = 0.0;  // floor of the projected covariance on V^{<0}
  double sigma_u2 = 0.0;  // ceiling of the projected covariance, <= sigma2
  double beta_r = 0.0;    // covariance Lipschitz constant
  double gamma = 1.0;     // covariance Hoelder exponent in (0, 4]

  void validate() const;
  friend bool operator==(const DeclaredMoments&, const DeclaredMoments&) = default;
};

/// Sum of independent noise components on top of the gradient oracle. An
/// empty component list is the exact gradient. At most one NaturalSampling
/// component is allowed; it swaps the exact gradient for a sample gradient.
class NoiseModel {
 public:
  NoiseModel() = default;
  explicit NoiseModel(std::vector<NoiseComponent> components,
                      DeclaredMoments declared = {});

  static NoiseModel none() { return NoiseModel(); }
  static NoiseModel natural() { return NoiseModel({NaturalSampling{}}); }
  static NoiseModel directional(Vector direction, double stddev);
  static NoiseModel isotropic(double stddev);

  const std::vector<NoiseComponent>& components() const { return components_; }
  const DeclaredMoments& declared() const { return declared_; }
  bool uses_natural_sampling() const;

  // Additive covariance of the non-natural components (state independent).
  Matrix injected_covariance(Eigen::Index dim) const;

 private:
  std::vector<NoiseComponent> components_;
  DeclaredMoments declared_;
};

// One draw of the stochastic gradient at w.
Vector stochastic_gradient(const Problem& problem, const NoiseModel& noise,
                           const Vector& w, Rng& rng);

struct CovarianceEstimate {
  Matrix matrix;
  long n_samples = 0;
  double standard_error = 0.0;  // max entrywise standard error
  Vector mean;                  // sample mean of the noise
  double mean_standard_error = 0.0;  // sqrt(trace(matrix) / n)
};

inline constexpr long kMinCovarianceSamples = 100;

// Known-mean covariance of s = stochastic_gradient(w) - grad J(w).
CovarianceEstimate estimate_covariance(const Problem& problem, const NoiseModel& noise,
                                       const Vector& w, long n_samples, Rng& rng);

// sum_k p_k^2 R_k.
Matrix aggregate_covariance(std::span<const Matrix> per_agent, const Vector& p);

// lambda_min of V^T R V with V spanning the negative-curvature eigenvectors of
// the Hessian at w. Throws ValidationError when lambda_min(hessian) > -tau.
double noise_floor_in_descent_subspace(const Problem& problem, const NoiseModel& noise,
                                       const Vector& w, double tau, long n_samples,
                                       Rng& rng);

struct CovarianceLipschitzProbe {
  double beta_hat = 0.0;
  double gamma = 1.0;
  long pairs_used = 0;
};

CovarianceLipschitzProbe probe_covariance_lipschitz(
    const Problem& problem, const NoiseModel& noise,
    std::span<const std::pair<Vector, Vector>> probe_pairs, long n_samples, Rng& rng,
    double gamma = 1.0);

struct MomentProbe {
  double sigma2_hat = 0.0;
  double sigma4_hat = 0.0;
  double max_conditional_mean_norm = 0.0;
  // max over probes of ||mean|| / mean_standard_error (0 when noise is absent)
  double max_mean_z = 0.0;
};

MomentProbe probe_moment_bounds(const Problem& problem, const NoiseModel& noise,
                                std::span<const Vector> probes, long n_samples, Rng& rng);

}  // namespace saddlenet
