#pragma once

// Differentiable costs with exact gradients and Hessians.

#include "saddlenet/rng.hpp"
#include "saddlenet/types.hpp"

#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace saddlenet {

struct Smoothness {
  double delta = 0.0;        // Lipschitz constant of the gradient
  double rho_hessian = 0.0;  // Lipschitz constant of the Hessian
  std::optional<double> disagreement_bound;  // max_{k,l} ||grad J_k - grad J_l||
};

class Problem {
 public:
  virtual ~Problem() = default;

  virtual std::string name() const = 0;
  virtual Eigen::Index dimension() const = 0;
  virtual double loss(const Vector& w) const = 0;
  virtual Vector gradient(const Vector& w) const = 0;
  virtual Matrix hessian(const Vector& w) const = 0;

  // Per-sample gradient grad Q(w; x) with x drawn from the data law. Only
  // problems defined as an expectation over data implement this.
  virtual bool has_sample_gradient() const { return false; }
  virtual Vector sample_gradient(const Vector& w, Rng& rng) const;
};

using ProblemPtr = std::shared_ptr<const Problem>;
using AgentProblems = std::vector<ProblemPtr>;

/// Gauss-Hermite rule for expectations under N(0, 1):
/// E f(z) ~= sum_j weights[j] f(nodes[j]). Nodes and weights come from the
/// Golub-Welsch eigenproblem of the probabilists' Hermite Jacobi matrix.
struct GaussHermite {
  Vector nodes;
  Vector weights;  // sums to one

  explicit GaussHermite(int n);
};

/// Two-parameter network with a linear hidden unit and logistic output,
///
///   J(w1, W2) = E log(1 + exp(-g w1 W2 h)) + reg/2 (w1^2 + W2^2),
///
/// with labels g = +-1 equiprobable and features h ~ N(g, 1). Expectations are
/// taken by Gauss-Hermite quadrature over each mixture component, so loss,
/// gradient and Hessian are deterministic.
class LogisticNNProblem final : public Problem {
 public:
  static constexpr int kDefaultNodes = 200;

  explicit LogisticNNProblem(double reg, int quadrature_nodes = kDefaultNodes);

  std::string name() const override { return "logistic"; }
  Eigen::Index dimension() const override { return 2; }
  double loss(const Vector& w) const override;
  Vector gradient(const Vector& w) const override;
  Matrix hessian(const Vector& w) const override;

  bool has_sample_gradient() const override { return true; }
  Vector sample_gradient(const Vector& w, Rng& rng) const override;

  double reg() const { return reg_; }
  int quadrature_nodes() const { return nodes_; }

  // E softplus(-p t), E[t s(-p t)] and E[t^2 s(p t) s(-p t)] for t = g h and
  // s the logistic sigmoid; p = w1 W2.
  double expected_softplus(double p) const;
  double expected_tilt(double p) const;
  double expected_curvature(double p) const;

 private:
  double reg_;
  int nodes_;
  // Samples of t = g h across both mixture components with their weights.
  Vector t_;
  Vector weight_;
};

/// J(w) = 1/2 w^T H w for a fixed symmetric H.
class QuadraticSaddleProblem final : public Problem {
 public:
  explicit QuadraticSaddleProblem(Matrix h);

  std::string name() const override { return "quadratic_saddle"; }
  Eigen::Index dimension() const override { return h_.rows(); }
  double loss(const Vector& w) const override { return 0.5 * w.dot(h_ * w); }
  Vector gradient(const Vector& w) const override { return h_ * w; }
  Matrix hessian(const Vector&) const override { return h_; }

  const Matrix& matrix() const { return h_; }

 private:
  Matrix h_;
};

/// J(w) = 1/2 w^T H w + kappa/6 (u^T w)^3 with unit u. The cubic term gives a
/// saddle with a non-vanishing third derivative, so the frozen-Hessian model
/// error is of leading order. Hessian Lipschitz constant is |kappa|.
class CubicSaddleProblem final : public Problem {
 public:
  CubicSaddleProblem(Matrix h, Vector direction, double kappa);

  std::string name() const override { return "cubic_saddle"; }
  Eigen::Index dimension() const override { return h_.rows(); }
  double loss(const Vector& w) const override;
  Vector gradient(const Vector& w) const override;
  Matrix hessian(const Vector& w) const override;

  const Matrix& matrix() const { return h_; }
  const Vector& direction() const { return u_; }
  double kappa() const { return kappa_; }

 private:
  Matrix h_;
  Vector u_;
  double kappa_;
};

/// J(w) = sum_k p_k J_k(w). Collapses to the shared problem when every agent
/// owns the same instance.
class AggregateCost final : public Problem {
 public:
  AggregateCost(AgentProblems problems, Vector p);

  std::string name() const override { return "aggregate"; }
  Eigen::Index dimension() const override { return problems_.front()->dimension(); }
  double loss(const Vector& w) const override;
  Vector gradient(const Vector& w) const override;
  Matrix hessian(const Vector& w) const override;

  bool homogeneous() const { return homogeneous_; }

 private:
  AgentProblems problems_;
  Vector p_;
  bool homogeneous_;
};

// Axis-aligned probe region.
struct Box {
  Vector lo;
  Vector hi;

  Vector sample(Rng& rng) const;
  bool degenerate() const;
};

struct SmoothnessEstimate {
  double delta_hat = 0.0;
  double rho_hat = 0.0;
  long pairs_used = 0;
};

// Max over n_probes random pairs of the gradient and Hessian difference
// quotients. Coincident pairs are skipped.
SmoothnessEstimate estimate_smoothness(const Problem& problem, const Box& region,
                                       long n_probes, std::uint64_t seed);

// Max over probe points of max_{k<l} ||grad J_k(x) - grad J_l(x)||.
double estimate_disagreement_bound(const AgentProblems& problems,
                                   const Box& region, long n_probes,
                                   std::uint64_t seed);

// Gradient descent from `start` to a stationary point (||grad|| < tol).
Vector locate_minimizer(const Problem& problem, Vector start, double step = 0.5,
                        double tol = 1e-12, long max_iterations = 100000);

}  // namespace saddlenet
