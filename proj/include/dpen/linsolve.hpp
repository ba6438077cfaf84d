#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "dpen/graph.hpp"
#include "dpen/locality.hpp"
#include "dpen/rng.hpp"
#include "dpen/types.hpp"

namespace dpen {

/// (sum_i N_i) v = sum_i b_i with agent i holding (N_i, b_i).
///
/// Individual N_i may be singular or non-symmetric. The graph is referenced,
/// not owned, and must outlive the system.
struct SepLinSystem {
  SepLinSystem(const Graph& graph, int block_dim);

  int n() const { return graph->n(); }
  /// Block dimension of every N_i.
  int q;
  std::vector<Matrix> N;
  std::vector<Vector> b;
  const Graph* graph;

  void validate() const;
};

/// Stacked per-agent candidates v = [v_1; ...; v_n] and auxiliaries y.
struct StackedState {
  Vector v;
  Vector y;

  static StackedState zeros(int n, int q) { return {Vector::Zero(n * q), Vector::Zero(n * q)}; }
  Vector stacked() const;
  static StackedState from_stacked(const Vector& z);
  bool all_finite() const { return v.allFinite() && y.allFinite(); }
};

struct StackedSystem {
  Matrix P;      // 2nq x 2nq
  Vector q_vec;  // 2nq
};

/// P = [blockdiag(N_i), -(L kron I); L kron I, 0], q_vec = [b; 0].
StackedSystem assemble_P(const SepLinSystem& sys);

/// Direct solve of the aggregate system; throws SingularSystem when sum N_i is singular.
Vector solve_dense_oracle(const SepLinSystem& sys);

/// P z and P' w through the block structure, without forming P.
Vector apply_P(const SepLinSystem& sys, const Vector& z);
Vector apply_PT(const SepLinSystem& sys, const Vector& w);

/// ||P z - q_vec||.
double stacked_residual(const SepLinSystem& sys, const StackedState& z);

/// Per-agent N_i v_i - b_i, stacked; the quantity each agent publishes to its neighbors.
Vector agent_residuals(const SepLinSystem& sys, const StackedState& z);

/// What agent `owner` can see in one synchronous round. Every read is checked
/// against the owner's 2-hop neighborhood.
class LinearRoundView {
 public:
  LinearRoundView(const Neighborhood& hood, const SepLinSystem& sys, const StackedState& z,
                  const Vector& residuals)
      : hood_(&hood), q_(sys.q), z_(&z), residuals_(&residuals) {}

  AgentId owner() const { return hood_->owner(); }
  auto v(AgentId j) const {
    hood_->require(j, "v");
    return z_->v.segment(Index(j) * q_, q_);
  }
  auto y(AgentId j) const {
    hood_->require(j, "y");
    return z_->y.segment(Index(j) * q_, q_);
  }
  auto residual(AgentId j) const {
    hood_->require(j, "N v - b");
    return residuals_->segment(Index(j) * q_, q_);
  }

 private:
  const Neighborhood* hood_;
  int q_;
  const StackedState* z_;
  const Vector* residuals_;
};

struct AgentDerivative {
  Vector v_dot;
  Vector y_dot;
};

/// Agent i's share of -P'(P z - q_vec), computed only from its round view.
/// Neighbor sums run in ascending id order.
AgentDerivative agent_update(const SepLinSystem& sys, const LinearRoundView& view);

/// Stacked -P'(P z - q_vec), evaluated through agent_update for every agent.
StackedState flow_drift(const SepLinSystem& sys, const StackedState& z,
                        const std::vector<Neighborhood>& hoods);
StackedState flow_drift(const SepLinSystem& sys, const StackedState& z);

/// Disturbance injected into a flow.
///  - FixedNorm: norm `magnitude`, random direction, redrawn every `hold_steps` steps.
///  - Relative: norm `magnitude` * ||undisturbed drift||, redrawn every step.
struct DisturbanceModel {
  enum class Kind { None, FixedNorm, Relative };
  Kind kind = Kind::None;
  double magnitude = 0.0;
  int hold_steps = 1;
  std::uint64_t seed = 0;
  /// Direction entries drawn from [-0.5, 0.5) rather than [0, 1) before normalizing.
  bool centered = true;

  static DisturbanceModel none() { return {}; }
  static DisturbanceModel fixed_norm(double delta, int hold_steps, std::uint64_t seed) {
    return {Kind::FixedNorm, delta, hold_steps, seed, true};
  }
  static DisturbanceModel relative(double beta, std::uint64_t seed, bool centered = true) {
    return {Kind::Relative, beta, 1, seed, centered};
  }
};

/// Stateful generator for one disturbance channel.
class DisturbanceSource {
 public:
  explicit DisturbanceSource(DisturbanceModel model) : model_(model), rng_(model.seed) {}

  bool active() const { return model_.kind != DisturbanceModel::Kind::None && model_.magnitude > 0; }
  /// Disturbance for a drift vector; zero vector when inactive.
  Vector next(const Vector& drift);

 private:
  DisturbanceModel model_;
  Rng rng_;
  Vector held_;
  int age_ = 0;
};

/// One explicit Euler step of z' = -P'(P z - q_vec) + d.
StackedState flow_step(const SepLinSystem& sys, const StackedState& z, double dt,
                       const Vector* disturbance = nullptr);

/// Largest eigenvalue of P'P by power iteration on the structured operator.
double lambda_max_PtP(const SepLinSystem& sys, int iterations = 500);

/// 0.9 / lambda_max(P'P); explicit Euler on the linear flow is monotone below this.
double stable_step(const SepLinSystem& sys);

/// lambda_2(P'P) from a dense eigendecomposition.
double rate_bound(const SepLinSystem& sys);

/// z* with P z* = q_vec and the same null(P) component as z (minimum-norm correction).
StackedState project_to_equilibria(const SepLinSystem& sys, const StackedState& z);
/// ||z - z*||, the distance from z to the solution set of P z = q_vec.
double equilibrium_distance(const SepLinSystem& sys, const StackedState& z);

/// max_i ||v_i - mean(v)||_inf.
double consensus_error(const StackedState& z, int q);

struct SolveOptions {
  /// Requested step; 0 selects stable_step(). Larger values are capped to it.
  double dt = 0.0;
  double tol = 1e-10;
  long max_steps = 1'000'000;
  DisturbanceModel disturbance;
  /// Record ||P z - q_vec|| after every step.
  bool keep_history = false;
};

struct SolveReport {
  Vector solution;
  double consensus_error = 0.0;
  /// ||(sum N_i) v - sum b_i|| at the mean candidate v.
  double residual = 0.0;
  double stacked_residual = 0.0;
  long steps = 0;
  bool converged = false;
  double dt = 0.0;
  /// Exponential decay rate of the stacked residual (per unit time) over the last half of the run.
  double fitted_rate = 0.0;
  double rate_bound = 0.0;
  StackedState final_state;
  std::vector<double> history;
};

SolveReport run_to_tolerance(const SepLinSystem& sys, const StackedState& z0,
                             const SolveOptions& options = {});

/// Least-squares slope of log(values) against step index over the last `fraction`
/// of the samples, negated and divided by dt.
double fit_decay_rate(const std::vector<double>& values, double dt, double fraction = 0.5);

}  // namespace dpen
