#pragma once

#include <algorithm>
#include <utility>
#include <vector>

#include <Eigen/Eigenvalues>

#include "dpen/types.hpp"

namespace dpen {

/// Undirected, connected communication graph without self-loops.
///
/// Adjacency lists are sorted ascending; every algorithm that sums over
/// neighbors iterates in that order so results are reproducible bit for bit.
class Graph {
 public:
  Graph() = default;

  int n() const { return static_cast<int>(adjacency_.size()); }
  const std::vector<AgentId>& neighbors(AgentId i) const { return adjacency_[i]; }
  int degree(AgentId i) const { return static_cast<int>(adjacency_[i].size()); }
  bool adjacent(AgentId i, AgentId j) const;

  /// Canonical edge list with i < j, sorted lexicographically.
  const std::vector<std::pair<AgentId, AgentId>>& edges() const { return edges_; }

 private:
  friend Graph build_graph(int n, const std::vector<std::pair<AgentId, AgentId>>& edges);

  std::vector<std::vector<AgentId>> adjacency_;
  std::vector<std::pair<AgentId, AgentId>> edges_;
};

/// Builds a graph, deduplicating symmetric edges. Throws InvalidArgument on
/// out-of-range ids, self-loops, or a disconnected edge set.
Graph build_graph(int n, const std::vector<std::pair<AgentId, AgentId>>& edges);

Graph ring_graph(int n);
Graph path_graph(int n);
Graph complete_graph(int n);

/// Agents reachable from i in at most k edges, excluding i. Only k = 1, 2 are supported.
std::vector<AgentId> k_hop_neighbors(const Graph& g, AgentId i, int k);

/// L = D - A.
template <typename Scalar = double>
MatrixX<Scalar> laplacian(const Graph& g) {
  const int n = g.n();
  MatrixX<Scalar> L = MatrixX<Scalar>::Zero(n, n);
  for (const auto& [i, j] : g.edges()) {
    L(i, j) -= Scalar(1);
    L(j, i) -= Scalar(1);
    L(i, i) += Scalar(1);
    L(j, j) += Scalar(1);
  }
  return L;
}

/// Relative cutoff below which an eigenvalue counts as zero in lambda2().
inline constexpr double kZeroEigenvalueRelTol = 1e-8;

/// Smallest eigenvalue of a symmetric PSD matrix that is strictly above
/// kZeroEigenvalueRelTol * max(1, largest eigenvalue).
template <typename Derived>
typename Derived::Scalar lambda2(const Eigen::MatrixBase<Derived>& m) {
  using Scalar = typename Derived::Scalar;
  if (m.rows() != m.cols() || m.rows() == 0) {
    throw InvalidArgument("lambda2: expected a non-empty square matrix");
  }
  const MatrixX<Scalar> dense = m;
  const Scalar scale = std::max(Scalar(1), dense.cwiseAbs().maxCoeff());
  if ((dense - dense.transpose()).cwiseAbs().maxCoeff() > Scalar(1e-9) * scale) {
    throw InvalidArgument("lambda2: matrix is not symmetric");
  }
  Eigen::SelfAdjointEigenSolver<MatrixX<Scalar>> eig(dense, Eigen::EigenvaluesOnly);
  const auto& values = eig.eigenvalues();
  const Scalar largest = values(values.size() - 1);
  if (values(0) < -Scalar(1e-9) * std::max(Scalar(1), largest)) {
    throw InvalidArgument("lambda2: matrix is not positive semidefinite");
  }
  const Scalar threshold = Scalar(kZeroEigenvalueRelTol) * std::max(Scalar(1), largest);
  for (Index k = 0; k < values.size(); ++k) {
    if (values(k) > threshold) return values(k);
  }
  throw InvalidArgument("lambda2: zero matrix (all eigenvalues below threshold)");
}

}  // namespace dpen
