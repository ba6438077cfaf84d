#pragma once

#include <vector>

#include "dpen/graph.hpp"
#include "dpen/locality.hpp"
#include "dpen/penalty.hpp"
#include "dpen/problem.hpp"

namespace dpen {

/// A problem, its communication graph and every agent's 2-hop neighborhood.
/// Holds references; the problem and graph must outlive it.
class Network {
 public:
  Network(const Problem& pr, const Graph& g);

  const Problem& problem() const { return *pr_; }
  const Graph& graph() const { return *g_; }
  const Neighborhood& hood(AgentId i) const { return hoods_[i]; }
  const std::vector<Neighborhood>& hoods() const { return hoods_; }
  int n() const { return g_->n(); }

 private:
  const Problem* pr_;
  const Graph* g_;
  std::vector<Neighborhood> hoods_;
};

/// What every agent k broadcasts at the start of a round: its state x_k, the
/// derivative f_k'(x_k), and its row d/dx_k [g; h] of the constraint Jacobian.
/// Agent k computes the row itself from its own 2-hop view.
struct Published {
  Vector x;       // n
  Vector fprime;  // n
  Matrix jac;     // n x (m+p)
};

/// Everything agent `owner` may read in one round. Each accessor checks the
/// agent it reads from against the owner's 2-hop neighborhood.
class AgentView {
 public:
  AgentView(const Network& net, AgentId owner, const Vector& x, const Published* published = nullptr)
      : net_(&net), owner_(owner), x_(&x), pub_(published) {}

  AgentId owner() const { return owner_; }
  const Problem& problem() const { return net_->problem(); }

  double x(AgentId j) const;
  double fprime(AgentId j) const;
  /// Published Jacobian row of agent j, length m+p.
  Eigen::Ref<const Vector> jac_row(AgentId j) const;

  /// Constraint c restricted to its footprint, read through x().
  Vector footprint_state(int c) const;
  double constraint_value(int c) const;
  /// Gradient over footprint(c).
  Vector constraint_grad(int c) const;
  /// Hessian over footprint(c) x footprint(c).
  Matrix constraint_hess(int c) const;

 private:
  const Network* net_;
  AgentId owner_;
  const Vector* x_;
  const Published* pub_;
};

/// Each agent computes its own entries of Published from its view.
Published publish(const Network& net, const Vector& x);

/// Agent i's additive shares: g_share_j = g_j/n_j and slack_share_j = (y_j)^2/n_j if i is
/// in the footprint of g_j (else 0); h_share analogously. n_j = footprint size.
struct LocalShares {
  Vector g;      // m
  Vector slack;  // m
  Vector h;      // p
};

LocalShares local_share_gh(const AgentView& view, const Vector& lambda_hat,
                           const PenaltyParams& params);

/// Agent i's share of both linear systems.
struct LocalPieces {
  Matrix Ni;          // (m+p) x (m+p)
  Vector bi_mult;     // share of -[dg'; dh'] grad f
  Vector bi_varrho;   // share of [g + Y y; h], from the agent's lambda estimate
};

/// Ni and bi_mult. Requires published Jacobian rows.
LocalPieces local_Ni_bi(const AgentView& view, const PenaltyParams& params);

/// bi_varrho = [g_share + slack_share; h_share].
Vector local_bi_varrho(const AgentView& view, const Vector& lambda_hat, const PenaltyParams& params);

/// Column i of [R; S] with (lambda_hat, mu_hat) substituted for the multipliers.
/// Requires published data.
Vector local_ri_si(const AgentView& view, const Vector& lambda_hat, const Vector& mu_hat,
                   const PenaltyParams& params);

/// d f^eps / d x_i with chi_hat = (lambda; mu; varrho) substituted for chi(x).
double local_gradient(const AgentView& view, const Vector& chi_hat, const PenaltyParams& params);

/// Convenience: local pieces for every agent at x, each through its own view.
std::vector<LocalPieces> all_local_pieces(const Network& net, const Vector& x,
                                          const Vector& lambda_hat, const PenaltyParams& params);

/// Stacked local_gradient where agent i uses chi_hats[i].
Vector stacked_local_gradient(const Network& net, const Vector& x,
                              const std::vector<Vector>& chi_hats, const PenaltyParams& params);
/// Same with one shared chi_hat.
Vector stacked_local_gradient(const Network& net, const Vector& x, const Vector& chi_hat,
                              const PenaltyParams& params);

}  // namespace dpen
