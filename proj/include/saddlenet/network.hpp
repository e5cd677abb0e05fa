#pragma once

// Graph topologies and combination matrices.
//
// Convention: A = [a_{lk}] is LEFT-stochastic. Column k holds the weights
// agent k assigns to its neighbours l, so every column sums to one:
//
//     sum_l a_{lk} = 1,   a_{lk} >= 0,   a_{lk} = 0 if l not in N_k.
//
// The combine step therefore reads w_k = sum_l a_{lk} phi_l, i.e. W = A^T Phi
// with agents stored as rows. Much of the literature uses row-stochastic
// matrices instead; transpose before importing weights from elsewhere.

#include "saddlenet/types.hpp"

#include <cstddef>
#include <optional>
#include <utility>
#include <variant>
#include <vector>

namespace saddlenet {

struct Topology {
  std::size_t n_agents = 0;
  std::vector<std::pair<std::size_t, std::size_t>> edges;  // undirected
  std::vector<bool> self_loops;

  static Topology complete(std::size_t n, bool self_loops = true);
  static Topology ring(std::size_t n, bool self_loops = true);

  // Throws ValidationError on out-of-range or duplicate edges.
  void validate() const;

  // N_k, sorted; contains k iff self_loops[k].
  std::vector<std::size_t> neighborhood(std::size_t k) const;
  // Neighbours other than k.
  std::size_t degree(std::size_t k) const;
};

struct AveragingRule {};
struct MetropolisRule {};
struct ExplicitWeights {
  Matrix entries;
};
using WeightRule = std::variant<AveragingRule, MetropolisRule, ExplicitWeights>;

class CombinationMatrix {
 public:
  CombinationMatrix() = default;

  const Matrix& entries() const { return entries_; }
  std::size_t size() const { return static_cast<std::size_t>(entries_.rows()); }
  double operator()(std::size_t l, std::size_t k) const {
    return entries_(static_cast<Eigen::Index>(l), static_cast<Eigen::Index>(k));
  }

  // Present iff the matrix is strongly connected.
  const std::optional<Vector>& cached_perron() const { return perron_; }

 private:
  friend CombinationMatrix build_combination_matrix(const Topology&,
                                                    const WeightRule&);
  friend CombinationMatrix from_entries(const Matrix&);

  Matrix entries_;
  std::optional<Vector> perron_;
};

inline constexpr double kStochasticTolerance = 1e-12;
inline constexpr double kPerronTolerance = 1e-12;
inline constexpr long kPerronMaxIterations = 1'000'000;

// Throws ValidationError naming the offending column for non-stochastic or
// negative entries, SparsityError for weights outside a neighbourhood.
CombinationMatrix build_combination_matrix(const Topology& topology,
                                           const WeightRule& rule);

// Validates column-stochasticity only (no topology). The sparsity pattern is
// taken to be the nonzero pattern.
CombinationMatrix from_entries(const Matrix& entries);

// Strongly connected nonzero pattern and at least one a_kk > 0.
bool is_strongly_connected(const CombinationMatrix& A);

// Power iteration on p <- A p until ||Ap - p||_inf < kPerronTolerance.
// Throws ValidationError when A is not strongly connected and NumericalError
// (carrying the residual) when the iteration budget runs out.
Vector perron_vector(const CombinationMatrix& A,
                     long max_iterations = kPerronMaxIterations);

// Modulus of the second largest eigenvalue; 0 for a single agent.
double mixing_rate(const CombinationMatrix& A);

}  // namespace saddlenet
