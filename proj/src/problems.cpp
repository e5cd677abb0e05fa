#include "saddlenet/problems.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>

namespace saddlenet {

Vector Problem::sample_gradient(const Vector&, Rng&) const {
  throw ValidationError("problem '" + name() +
                        "' has no per-sample gradient; natural_sampling noise "
                        "is unavailable");
}

GaussHermite::GaussHermite(int n) {
  if (n < 1) throw ValidationError("quadrature needs at least one node");
  Vector diag = Vector::Zero(n);
  Vector sub(std::max(n - 1, 0));
  for (int k = 1; k < n; ++k) sub(k - 1) = std::sqrt(static_cast<double>(k));
  Eigen::SelfAdjointEigenSolver<Matrix> solver;
  solver.computeFromTridiagonal(diag, sub, Eigen::ComputeEigenvectors);
  nodes = solver.eigenvalues();
  weights = solver.eigenvectors().row(0).transpose().array().square();
  // Impose the exact reflection symmetry of the rule.
  Vector sym_nodes(n), sym_weights(n);
  for (int i = 0; i < n; ++i) {
    sym_nodes(i) = 0.5 * (nodes(i) - nodes(n - 1 - i));
    sym_weights(i) = 0.5 * (weights(i) + weights(n - 1 - i));
  }
  nodes = sym_nodes;
  weights = sym_weights / sym_weights.sum();
}

namespace {

double softplus(double x) {
  return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x)));
}

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

void require_dim(const Vector& w, Eigen::Index m, const char* who) {
  if (w.size() != m)
    throw ValidationError(std::string(who) + ": expected a vector of length " +
                          std::to_string(m) + ", got " + std::to_string(w.size()));
}

}  // namespace

LogisticNNProblem::LogisticNNProblem(double reg, int quadrature_nodes)
    : reg_(reg), nodes_(quadrature_nodes) {
  const GaussHermite rule(quadrature_nodes);
  const Eigen::Index n = rule.nodes.size();
  t_.resize(2 * n);
  weight_.resize(2 * n);
  // g = +1: h = 1 + z, t = 1 + z.  g = -1: h = -1 + z, t = 1 - z.
  for (Eigen::Index j = 0; j < n; ++j) {
    t_(j) = 1.0 + rule.nodes(j);
    t_(n + j) = 1.0 - rule.nodes(j);
    weight_(j) = 0.5 * rule.weights(j);
    weight_(n + j) = 0.5 * rule.weights(j);
  }
}

double LogisticNNProblem::expected_softplus(double p) const {
  double acc = 0.0;
  const double* t = t_.data();
  const double* wt = weight_.data();
  const Eigen::Index n = t_.size();
#pragma omp simd reduction(+ : acc)
  for (Eigen::Index j = 0; j < n; ++j) acc += wt[j] * softplus(-p * t[j]);
  return acc;
}

double LogisticNNProblem::expected_tilt(double p) const {
  double acc = 0.0;
  for (Eigen::Index j = 0; j < t_.size(); ++j)
    acc += weight_(j) * t_(j) * sigmoid(-p * t_(j));
  return acc;
}

double LogisticNNProblem::expected_curvature(double p) const {
  double acc = 0.0;
  for (Eigen::Index j = 0; j < t_.size(); ++j) {
    const double x = p * t_(j);
    acc += weight_(j) * t_(j) * t_(j) * sigmoid(x) * sigmoid(-x);
  }
  return acc;
}

double LogisticNNProblem::loss(const Vector& w) const {
  require_dim(w, 2, "logistic loss");
  return expected_softplus(w(0) * w(1)) + 0.5 * reg_ * w.squaredNorm();
}

Vector LogisticNNProblem::gradient(const Vector& w) const {
  require_dim(w, 2, "logistic gradient");
  const double a = expected_tilt(w(0) * w(1));
  Vector g(2);
  g << reg_ * w(0) - a * w(1), reg_ * w(1) - a * w(0);
  return g;
}

Matrix LogisticNNProblem::hessian(const Vector& w) const {
  require_dim(w, 2, "logistic hessian");
  const double p = w(0) * w(1);
  const double a = expected_tilt(p);
  const double b = expected_curvature(p);
  Matrix h(2, 2);
  h(0, 0) = reg_ + b * w(1) * w(1);
  h(1, 1) = reg_ + b * w(0) * w(0);
  h(0, 1) = h(1, 0) = b * p - a;
  return h;
}

Vector LogisticNNProblem::sample_gradient(const Vector& w, Rng& rng) const {
  require_dim(w, 2, "logistic sample gradient");
  const double label = rng.sign();
  const double feature = label + rng.normal();
  const double t = label * feature;
  const double a = t * sigmoid(-w(0) * w(1) * t);
  Vector g(2);
  g << reg_ * w(0) - a * w(1), reg_ * w(1) - a * w(0);
  return g;
}

QuadraticSaddleProblem::QuadraticSaddleProblem(Matrix h) : h_(std::move(h)) {
  if (h_.rows() != h_.cols() || h_.rows() == 0)
    throw ValidationError("quadratic problem needs a square nonempty matrix");
  if ((h_ - h_.transpose()).cwiseAbs().maxCoeff() > 0.0)
    throw ValidationError("quadratic problem matrix must be symmetric");
}

CubicSaddleProblem::CubicSaddleProblem(Matrix h, Vector direction, double kappa)
    : h_(std::move(h)), u_(std::move(direction)), kappa_(kappa) {
  if (h_.rows() != h_.cols() || h_.rows() == 0)
    throw ValidationError("cubic problem needs a square nonempty matrix");
  if ((h_ - h_.transpose()).cwiseAbs().maxCoeff() > 0.0)
    throw ValidationError("cubic problem matrix must be symmetric");
  if (u_.size() != h_.rows())
    throw ValidationError("cubic problem direction has the wrong length");
  if (std::abs(u_.norm() - 1.0) > 1e-12)
    throw ValidationError("cubic problem direction must be unit norm");
}

double CubicSaddleProblem::loss(const Vector& w) const {
  const double s = u_.dot(w);
  return 0.5 * w.dot(h_ * w) + kappa_ / 6.0 * s * s * s;
}

Vector CubicSaddleProblem::gradient(const Vector& w) const {
  const double s = u_.dot(w);
  return h_ * w + 0.5 * kappa_ * s * s * u_;
}

Matrix CubicSaddleProblem::hessian(const Vector& w) const {
  return h_ + kappa_ * u_.dot(w) * (u_ * u_.transpose());
}

AggregateCost::AggregateCost(AgentProblems problems, Vector p)
    : problems_(std::move(problems)), p_(std::move(p)) {
  if (problems_.empty()) throw ValidationError("aggregate cost needs agents");
  if (static_cast<Eigen::Index>(problems_.size()) != p_.size())
    throw ValidationError("aggregate cost: weight vector length mismatch");
  homogeneous_ = std::all_of(problems_.begin(), problems_.end(),
                             [&](const ProblemPtr& q) { return q == problems_.front(); });
}

double AggregateCost::loss(const Vector& w) const {
  if (homogeneous_) return problems_.front()->loss(w);
  double acc = 0.0;
  for (std::size_t k = 0; k < problems_.size(); ++k)
    acc += p_(static_cast<Eigen::Index>(k)) * problems_[k]->loss(w);
  return acc;
}

Vector AggregateCost::gradient(const Vector& w) const {
  if (homogeneous_) return problems_.front()->gradient(w);
  Vector acc = Vector::Zero(w.size());
  for (std::size_t k = 0; k < problems_.size(); ++k)
    acc += p_(static_cast<Eigen::Index>(k)) * problems_[k]->gradient(w);
  return acc;
}

Matrix AggregateCost::hessian(const Vector& w) const {
  if (homogeneous_) return problems_.front()->hessian(w);
  Matrix acc = Matrix::Zero(w.size(), w.size());
  for (std::size_t k = 0; k < problems_.size(); ++k)
    acc += p_(static_cast<Eigen::Index>(k)) * problems_[k]->hessian(w);
  return acc;
}

Vector Box::sample(Rng& rng) const {
  Vector x(lo.size());
  for (Eigen::Index i = 0; i < lo.size(); ++i) x(i) = rng.uniform(lo(i), hi(i));
  return x;
}

bool Box::degenerate() const {
  if (lo.size() == 0 || lo.size() != hi.size()) return true;
  return ((hi - lo).array() <= 0.0).any();
}

SmoothnessEstimate estimate_smoothness(const Problem& problem, const Box& region,
                                       long n_probes, std::uint64_t seed) {
  if (n_probes < 2) throw ValidationError("estimate_smoothness needs n_probes >= 2");
  if (region.degenerate() || region.lo.size() != problem.dimension())
    throw ValidationError("estimate_smoothness: probe region has zero measure");
  Rng rng(seed, kProbeStream, 0);
  SmoothnessEstimate est;
  for (long i = 0; i < n_probes; ++i) {
    const Vector x = region.sample(rng);
    const Vector y = region.sample(rng);
    const double dist = (x - y).norm();
    if (dist == 0.0) continue;
    est.delta_hat = std::max(
        est.delta_hat, (problem.gradient(x) - problem.gradient(y)).norm() / dist);
    // Spectral norm of the (symmetric) Hessian difference.
    const Matrix dh = problem.hessian(x) - problem.hessian(y);
    Eigen::SelfAdjointEigenSolver<Matrix> eig(dh, Eigen::EigenvaluesOnly);
    est.rho_hat =
        std::max(est.rho_hat, eig.eigenvalues().cwiseAbs().maxCoeff() / dist);
    ++est.pairs_used;
  }
  return est;
}

double estimate_disagreement_bound(const AgentProblems& problems,
                                   const Box& region, long n_probes,
                                   std::uint64_t seed) {
  if (region.degenerate()) throw ValidationError("probe region has zero measure");
  Rng rng(seed, kProbeStream, 1);
  double worst = 0.0;
  for (long i = 0; i < n_probes; ++i) {
    const Vector x = region.sample(rng);
    std::vector<Vector> grads;
    for (const auto& q : problems) grads.push_back(q->gradient(x));
    for (std::size_t k = 0; k < grads.size(); ++k)
      for (std::size_t l = k + 1; l < grads.size(); ++l)
        worst = std::max(worst, (grads[k] - grads[l]).norm());
  }
  return worst;
}

Vector locate_minimizer(const Problem& problem, Vector start, double step,
                        double tol, long max_iterations) {
  Vector w = std::move(start);
  for (long i = 0; i < max_iterations; ++i) {
    const Vector g = problem.gradient(w);
    if (g.norm() < tol) return w;
    w -= step * g;
  }
  throw NumericalError("locate_minimizer did not converge",
                       problem.gradient(w).norm());
}

}  // namespace saddlenet
