#include "saddlenet/noise.hpp"

#include "saddlenet/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace saddlenet {

void DeclaredMoments::validate() const {
  const double vals[] = {sigma2, sigma4, sigma_l2, sigma_u2, beta_r};
  for (double v : vals)
    if (!std::isfinite(v) || v < 0.0)
      throw ValidationError("declared noise moments must be finite and nonnegative");
  if (sigma_u2 > sigma2) {
    std::ostringstream os;
    os << "declared sigma_u2 = " << sigma_u2 << " exceeds sigma2 = " << sigma2
       << " (constraint: sigma_u2 <= sigma2)";
    throw ValidationError(os.str());
  }
  if (!(gamma > 0.0 && gamma <= 4.0))
    throw ValidationError("declared gamma must lie in (0, 4]");
}

NoiseModel::NoiseModel(std::vector<NoiseComponent> components, DeclaredMoments declared)
    : components_(std::move(components)), declared_(declared) {
  declared_.validate();
  int natural = 0;
  for (const auto& c : components_) {
    if (std::holds_alternative<NaturalSampling>(c)) ++natural;
    if (const auto* d = std::get_if<DirectionalNoise>(&c)) {
      if (std::abs(d->direction.norm() - 1.0) > 1e-12)
        throw ValidationError("directional noise direction must be unit norm");
      if (!(d->stddev >= 0.0)) throw ValidationError("noise stddev must be >= 0");
    }
    if (const auto* iso = std::get_if<IsotropicNoise>(&c))
      if (!(iso->stddev >= 0.0)) throw ValidationError("noise stddev must be >= 0");
  }
  if (natural > 1)
    throw ValidationError("at most one natural_sampling component is allowed");
}

NoiseModel NoiseModel::directional(Vector direction, double stddev) {
  return NoiseModel({DirectionalNoise{std::move(direction), stddev}});
}

NoiseModel NoiseModel::isotropic(double stddev) {
  return NoiseModel({IsotropicNoise{stddev}});
}

bool NoiseModel::uses_natural_sampling() const {
  return std::any_of(components_.begin(), components_.end(), [](const auto& c) {
    return std::holds_alternative<NaturalSampling>(c);
  });
}

Matrix NoiseModel::injected_covariance(Eigen::Index dim) const {
  Matrix r = Matrix::Zero(dim, dim);
  for (const auto& c : components_) {
    if (const auto* d = std::get_if<DirectionalNoise>(&c))
      r += d->stddev * d->stddev * d->direction * d->direction.transpose();
    if (const auto* iso = std::get_if<IsotropicNoise>(&c))
      r += iso->stddev * iso->stddev * Matrix::Identity(dim, dim);
  }
  return r;
}

Vector stochastic_gradient(const Problem& problem, const NoiseModel& noise,
                           const Vector& w, Rng& rng) {
  Vector g = noise.uses_natural_sampling() ? problem.sample_gradient(w, rng)
                                           : problem.gradient(w);
  for (const auto& c : noise.components()) {
    if (const auto* d = std::get_if<DirectionalNoise>(&c)) {
      if (d->direction.size() != w.size())
        throw ValidationError("directional noise dimension does not match problem");
      if (d->stddev > 0.0) g += (d->stddev * rng.normal()) * d->direction;
    } else if (const auto* iso = std::get_if<IsotropicNoise>(&c)) {
      if (iso->stddev > 0.0)
        for (Eigen::Index i = 0; i < g.size(); ++i) g(i) += iso->stddev * rng.normal();
    }
  }
  return g;
}

CovarianceEstimate estimate_covariance(const Problem& problem, const NoiseModel& noise,
                                       const Vector& w, long n_samples, Rng& rng) {
  if (n_samples < kMinCovarianceSamples)
    throw ValidationError("estimate_covariance needs at least " +
                          std::to_string(kMinCovarianceSamples) + " samples, got " +
                          std::to_string(n_samples));
  const Eigen::Index m = w.size();
  const Vector exact = problem.gradient(w);
  Matrix sum = Matrix::Zero(m, m);
  Matrix sum_sq = Matrix::Zero(m, m);
  Vector mean = Vector::Zero(m);
  for (long i = 0; i < n_samples; ++i) {
    const Vector s = stochastic_gradient(problem, noise, w, rng) - exact;
    const Matrix outer = s * s.transpose();
    sum += outer;
    sum_sq += outer.cwiseProduct(outer);
    mean += s;
  }
  const double n = static_cast<double>(n_samples);
  CovarianceEstimate est;
  est.n_samples = n_samples;
  est.matrix = sum / n;
  est.matrix = 0.5 * (est.matrix + est.matrix.transpose()).eval();
  const Matrix var = (sum_sq / n - est.matrix.cwiseProduct(est.matrix)).cwiseMax(0.0);
  est.standard_error = std::sqrt(var.maxCoeff() / n);
  est.mean = mean / n;
  est.mean_standard_error = std::sqrt(est.matrix.trace() / n);
  return est;
}

Matrix aggregate_covariance(std::span<const Matrix> per_agent, const Vector& p) {
  if (static_cast<Eigen::Index>(per_agent.size()) != p.size() || per_agent.empty())
    throw ValidationError("aggregate_covariance: " + std::to_string(per_agent.size()) +
                          " covariances for " + std::to_string(p.size()) + " weights");
  const Eigen::Index m = per_agent.front().rows();
  Matrix out = Matrix::Zero(m, m);
  for (std::size_t k = 0; k < per_agent.size(); ++k) {
    if (per_agent[k].rows() != m || per_agent[k].cols() != m)
      throw ValidationError("aggregate_covariance: covariance " + std::to_string(k) +
                            " has mismatched dimensions");
    const double pk = p(static_cast<Eigen::Index>(k));
    out += pk * pk * per_agent[k];
  }
  return out;
}

double noise_floor_in_descent_subspace(const Problem& problem, const NoiseModel& noise,
                                       const Vector& w, double tau, long n_samples,
                                       Rng& rng) {
  const HessianSplit split = hessian_split(problem.hessian(w));
  if (split.v_neg.cols() == 0 || split.lambda_neg(0) > -tau) {
    std::ostringstream os;
    os << "hessian at w has lambda_min = "
       << (split.v_neg.cols() ? split.lambda_neg(0) : split.lambda_nonneg(0))
       << " > -tau = " << -tau << "; w is not a strict-saddle (H-type) point";
    throw ValidationError(os.str());
  }
  const CovarianceEstimate est = estimate_covariance(problem, noise, w, n_samples, rng);
  const Matrix projected = split.v_neg.transpose() * est.matrix * split.v_neg;
  return lambda_min(projected);
}

CovarianceLipschitzProbe probe_covariance_lipschitz(
    const Problem& problem, const NoiseModel& noise,
    std::span<const std::pair<Vector, Vector>> probe_pairs, long n_samples, Rng& rng,
    double gamma) {
  if (!(gamma > 0.0 && gamma <= 4.0))
    throw ValidationError("covariance Hoelder exponent must lie in (0, 4]");
  CovarianceLipschitzProbe out;
  out.gamma = gamma;
  for (const auto& [x, y] : probe_pairs) {
    const double dist = (x - y).norm();
    if (dist == 0.0) continue;
    // Common random numbers at both points of a pair.
    Rng shared = rng;
    const Matrix rx = estimate_covariance(problem, noise, x, n_samples, rng).matrix;
    const Matrix ry = estimate_covariance(problem, noise, y, n_samples, shared).matrix;
    const Matrix diff = rx - ry;
    const double norm = std::max(std::abs(lambda_min(diff)), std::abs(lambda_max(diff)));
    out.beta_hat = std::max(out.beta_hat, norm / std::pow(dist, gamma));
    ++out.pairs_used;
  }
  return out;
}

MomentProbe probe_moment_bounds(const Problem& problem, const NoiseModel& noise,
                                std::span<const Vector> probes, long n_samples, Rng& rng) {
  MomentProbe out;
  for (const Vector& w : probes) {
    const Vector exact = problem.gradient(w);
    double m2 = 0.0, m4 = 0.0;
    Vector mean = Vector::Zero(w.size());
    for (long i = 0; i < n_samples; ++i) {
      const Vector s = stochastic_gradient(problem, noise, w, rng) - exact;
      const double sq = s.squaredNorm();
      m2 += sq;
      m4 += sq * sq;
      mean += s;
    }
    const double n = static_cast<double>(n_samples);
    m2 /= n;
    m4 /= n;
    mean /= n;
    out.sigma2_hat = std::max(out.sigma2_hat, m2);
    out.sigma4_hat = std::max(out.sigma4_hat, m4);
    out.max_conditional_mean_norm = std::max(out.max_conditional_mean_norm, mean.norm());
    const double se = std::sqrt(m2 / n);
    if (se > 0.0) out.max_mean_z = std::max(out.max_mean_z, mean.norm() / se);
  }
  return out;
}

}  // namespace saddlenet
