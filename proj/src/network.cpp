#include "saddlenet/network.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <queue>
#include <set>
#include <sstream>

namespace saddlenet {

Topology Topology::complete(std::size_t n, bool self_loops) {
  Topology t;
  t.n_agents = n;
  t.self_loops.assign(n, self_loops);
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = a + 1; b < n; ++b) t.edges.emplace_back(a, b);
  return t;
}

Topology Topology::ring(std::size_t n, bool self_loops) {
  Topology t;
  t.n_agents = n;
  t.self_loops.assign(n, self_loops);
  if (n == 2) t.edges.emplace_back(0, 1);
  if (n > 2)
    for (std::size_t a = 0; a < n; ++a) t.edges.emplace_back(a, (a + 1) % n);
  return t;
}

void Topology::validate() const {
  if (n_agents == 0) throw ValidationError("topology has no agents");
  if (self_loops.size() != n_agents)
    throw ValidationError("self_loops length " + std::to_string(self_loops.size()) +
                          " does not match n_agents " + std::to_string(n_agents));
  std::set<std::pair<std::size_t, std::size_t>> seen;
  for (auto [a, b] : edges) {
    if (a >= n_agents || b >= n_agents) {
      std::ostringstream os;
      os << "edge (" << a << "," << b << ") references an agent >= " << n_agents;
      throw ValidationError(os.str());
    }
    if (a == b)
      throw ValidationError("edge (" + std::to_string(a) + "," + std::to_string(b) +
                            ") is a self-loop; use self_loops instead");
    auto key = std::minmax(a, b);
    if (!seen.insert({key.first, key.second}).second) {
      std::ostringstream os;
      os << "duplicate edge (" << a << "," << b << ")";
      throw ValidationError(os.str());
    }
  }
}

std::vector<std::size_t> Topology::neighborhood(std::size_t k) const {
  std::vector<std::size_t> out;
  if (self_loops[k]) out.push_back(k);
  for (auto [a, b] : edges) {
    if (a == k) out.push_back(b);
    if (b == k) out.push_back(a);
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::size_t Topology::degree(std::size_t k) const {
  std::size_t d = 0;
  for (auto [a, b] : edges) d += (a == k) + (b == k);
  return d;
}

namespace {

void check_stochastic(const Matrix& a) {
  if (a.rows() != a.cols() || a.rows() == 0)
    throw ValidationError("combination matrix must be square and nonempty");
  for (Eigen::Index k = 0; k < a.cols(); ++k) {
    for (Eigen::Index l = 0; l < a.rows(); ++l) {
      if (!std::isfinite(a(l, k)) || a(l, k) < 0.0) {
        std::ostringstream os;
        os << "column " << k << ": entry a(" << l << "," << k << ") = " << a(l, k)
           << " is not a nonnegative finite weight";
        throw ValidationError(os.str());
      }
    }
    const double sum = a.col(k).sum();
    if (std::abs(sum - 1.0) > kStochasticTolerance) {
      std::ostringstream os;
      os.precision(17);
      os << "column " << k << " sums to " << sum << ", expected 1";
      throw ValidationError(os.str());
    }
  }
}

// Forward/backward reachability from agent 0 over the nonzero pattern.
bool reaches_all(const Matrix& a, bool transpose) {
  const auto n = a.rows();
  std::vector<bool> seen(static_cast<std::size_t>(n), false);
  std::queue<Eigen::Index> q;
  q.push(0);
  seen[0] = true;
  while (!q.empty()) {
    const auto u = q.front();
    q.pop();
    for (Eigen::Index v = 0; v < n; ++v) {
      const double w = transpose ? a(v, u) : a(u, v);
      if (w > 0.0 && !seen[static_cast<std::size_t>(v)]) {
        seen[static_cast<std::size_t>(v)] = true;
        q.push(v);
      }
    }
  }
  return std::all_of(seen.begin(), seen.end(), [](bool b) { return b; });
}

Vector power_iteration(const Matrix& a, long max_iterations) {
  const auto n = a.rows();
  Vector p = Vector::Constant(n, 1.0 / static_cast<double>(n));
  double residual = 0.0;
  for (long it = 0; it < max_iterations; ++it) {
    Vector next = a * p;
    next /= next.sum();
    residual = (a * next - next).lpNorm<Eigen::Infinity>();
    p = std::move(next);
    if (residual < kPerronTolerance) return p;
  }
  std::ostringstream os;
  os << "Perron power iteration did not converge after " << max_iterations
     << " iterations (residual " << residual << ")";
  throw NumericalError(os.str(), residual);
}

}  // namespace

CombinationMatrix from_entries(const Matrix& entries) {
  check_stochastic(entries);
  CombinationMatrix out;
  out.entries_ = entries;
  if (is_strongly_connected(out))
    out.perron_ = power_iteration(out.entries_, kPerronMaxIterations);
  return out;
}

CombinationMatrix build_combination_matrix(const Topology& topology,
                                           const WeightRule& rule) {
  topology.validate();
  const auto n = static_cast<Eigen::Index>(topology.n_agents);
  Matrix a = Matrix::Zero(n, n);

  if (std::holds_alternative<AveragingRule>(rule)) {
    for (std::size_t k = 0; k < topology.n_agents; ++k) {
      const auto hood = topology.neighborhood(k);
      if (hood.empty())
        throw ValidationError("agent " + std::to_string(k) +
                              " has an empty neighbourhood");
      for (auto l : hood)
        a(static_cast<Eigen::Index>(l), static_cast<Eigen::Index>(k)) =
            1.0 / static_cast<double>(hood.size());
    }
  } else if (std::holds_alternative<MetropolisRule>(rule)) {
    for (auto [u, v] : topology.edges) {
      const double w =
          1.0 / (1.0 + static_cast<double>(
                           std::max(topology.degree(u), topology.degree(v))));
      a(static_cast<Eigen::Index>(u), static_cast<Eigen::Index>(v)) = w;
      a(static_cast<Eigen::Index>(v), static_cast<Eigen::Index>(u)) = w;
    }
    for (Eigen::Index k = 0; k < n; ++k) {
      double off = 0.0;
      for (Eigen::Index l = 0; l < n; ++l)
        if (l != k) off += a(l, k);
      const double self = 1.0 - off;
      if (self > 0.0 && !topology.self_loops[static_cast<std::size_t>(k)])
        throw SparsityError("metropolis rule needs a self-loop at agent " +
                            std::to_string(k));
      a(k, k) = self;
    }
  } else {
    const auto& given = std::get<ExplicitWeights>(rule).entries;
    if (given.rows() != n || given.cols() != n)
      throw ValidationError("explicit entries must be " + std::to_string(n) + "x" +
                            std::to_string(n));
    for (std::size_t k = 0; k < topology.n_agents; ++k) {
      const auto hood = topology.neighborhood(k);
      for (std::size_t l = 0; l < topology.n_agents; ++l) {
        const double w =
            given(static_cast<Eigen::Index>(l), static_cast<Eigen::Index>(k));
        if (w != 0.0 && !std::binary_search(hood.begin(), hood.end(), l)) {
          std::ostringstream os;
          os << "entry a(" << l << "," << k << ") = " << w << " but agent " << l
             << " is not in the neighbourhood of agent " << k;
          throw SparsityError(os.str());
        }
      }
    }
    a = given;
  }
  return from_entries(a);
}

bool is_strongly_connected(const CombinationMatrix& A) {
  const Matrix& a = A.entries();
  if (a.size() == 0) return false;
  if (!(a.diagonal().array() > 0.0).any()) return false;
  return reaches_all(a, false) && reaches_all(a, true);
}

Vector perron_vector(const CombinationMatrix& A, long max_iterations) {
  // A non-default budget asks for a fresh computation.
  if (A.cached_perron() && max_iterations == kPerronMaxIterations) return *A.cached_perron();
  if (!is_strongly_connected(A))
    throw ValidationError("Perron vector requires a strongly connected matrix "
                          "with at least one positive self-weight");
  return power_iteration(A.entries(), max_iterations);
}

double mixing_rate(const CombinationMatrix& A) {
  const Matrix& a = A.entries();
  if (a.rows() <= 1) return 0.0;
  Eigen::EigenSolver<Matrix> solver(a, false);
  Eigen::VectorXcd ev = solver.eigenvalues();
  Eigen::Index perron = 0;
  (ev.array() - 1.0).abs().minCoeff(&perron);
  double second = 0.0;
  for (Eigen::Index i = 0; i < ev.size(); ++i)
    if (i != perron) second = std::max(second, std::abs(ev(i)));
  return second;
}

}  // namespace saddlenet
