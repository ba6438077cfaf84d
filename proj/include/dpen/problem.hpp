#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "dpen/graph.hpp"
#include "dpen/types.hpp"

namespace dpen {

/// Scalar objective term f_i with its first and second derivatives.
struct ScalarFunction {
  std::function<double(double)> value;
  std::function<double(double)> d1;
  std::function<double(double)> d2;
};

/// A constraint that reads only the variables listed in its footprint.
///
/// The callbacks take the footprint-restricted subvector (ordered as
/// `footprint`) and return the value, the gradient over the footprint, and
/// the Hessian over footprint x footprint.
struct ConstraintSpec {
  std::string name;
  AgentId corresponding_agent = 0;
  std::vector<AgentId> footprint;
  std::function<double(const Vector&)> value;
  std::function<Vector(const Vector&)> grad;
  std::function<Matrix(const Vector&)> hess;
  /// Hessian is identically zero; lets callers skip second-order terms.
  bool linear = false;
};

/// a' x_footprint - bound, i.e. the constraint a' x <= bound (or = bound).
ConstraintSpec linear_constraint(std::string name, AgentId corresponding_agent,
                                 std::vector<AgentId> footprint, Vector coefficients,
                                 double bound);

/// Compact regular set D, either the annulus {inner <= |x|_inf <= outer} or a box.
struct DomainBox {
  enum class Kind { Annulus, Box };

  Kind kind = Kind::Box;
  double inner = 0.0;
  double outer = 0.0;
  Vector lower;
  Vector upper;

  static DomainBox annulus(double inner, double outer);
  static DomainBox box(Vector lower, Vector upper);
  static DomainBox cube(Index n, double lo, double hi);

  /// Membership in D inflated by `slack` (a relative margin; 0.1 = 10%).
  bool contains(const Vector& x, double slack = 0.0) const;
  bool interior(const Vector& x) const;
};

enum class Sense { Minimize, Maximize };

/// Separable NLP: min sum_i f_i(x_i) s.t. g(x) <= 0, h(x) = 0, x in D,
/// with one scalar decision variable per agent.
///
/// Maximization problems store the negated objective; reported_objective()
/// restores the user's sign.
class Problem {
 public:
  Problem(std::string name, std::vector<ScalarFunction> objectives,
          std::vector<ConstraintSpec> inequalities, std::vector<ConstraintSpec> equalities,
          DomainBox domain, Sense sense = Sense::Minimize);

  const std::string& name() const { return name_; }
  int n() const { return static_cast<int>(objectives_.size()); }
  int m() const { return static_cast<int>(inequalities_.size()); }
  int p() const { return static_cast<int>(equalities_.size()); }
  /// m + p, the size of every multiplier-type system.
  int q() const { return m() + p(); }

  const ScalarFunction& objective(AgentId i) const { return objectives_[i]; }
  const std::vector<ConstraintSpec>& inequalities() const { return inequalities_; }
  const std::vector<ConstraintSpec>& equalities() const { return equalities_; }
  /// Constraint c in the stacked (g; h) ordering, c < q().
  const ConstraintSpec& constraint(int c) const {
    return c < m() ? inequalities_[c] : equalities_[c - m()];
  }
  const DomainBox& domain() const { return domain_; }
  Sense sense() const { return sense_; }

  /// Stacked constraint indices (g first, then h) whose footprint contains agent i.
  const std::vector<int>& involved(AgentId i) const { return involved_[i]; }

  /// Minimization-form objective sum_i f_i(x_i).
  double objective_value(const Vector& x) const;
  Vector objective_gradient(const Vector& x) const;
  Vector objective_hessian_diagonal(const Vector& x) const;
  /// Objective in the user's sense (negated back for maximization problems).
  double reported_objective(const Vector& x) const;

 private:
  std::string name_;
  std::vector<ScalarFunction> objectives_;
  std::vector<ConstraintSpec> inequalities_;
  std::vector<ConstraintSpec> equalities_;
  DomainBox domain_;
  Sense sense_;
  std::vector<std::vector<int>> involved_;
};

/// Problem bundled with its communication graph and default initial point.
struct Instance {
  Problem problem;
  Graph graph;
  Vector x0;
};

Vector restrict_to(const Vector& x, const std::vector<AgentId>& footprint);

struct LocalityReport {
  bool passed = true;
  std::vector<std::string> violations;
};

/// Every footprint must lie within the corresponding agent and its 1-hop neighbors.
LocalityReport validate_locality(const Problem& pr, const Graph& g);

struct ConstraintValues {
  Vector g;
  Vector h;
};
ConstraintValues eval_constraints(const Problem& pr, const Vector& x);

/// Column j is the gradient of constraint j, zero outside its footprint.
struct ConstraintJacobians {
  Matrix dg;  // n x m
  Matrix dh;  // n x p
};
ConstraintJacobians constraint_jacobians(const Problem& pr, const Vector& x);

/// Dense n x n Hessian of one constraint, scattered from its footprint.
Matrix constraint_hessian(const ConstraintSpec& c, const Vector& x, int n);

/// |g_j(x)| <= kActivityTol * (1 + |grad g_j(x)|_inf) marks g_j as active.
inline constexpr double kActivityTol = 1e-7;
inline constexpr double kLicqSingularTol = 1e-8;

struct LicqResult {
  bool holds = true;
  double smallest_singular_value = 0.0;
  std::vector<int> active;
};
LicqResult check_licq(const Problem& pr, const Vector& x);

/// Max relative error (|a - fd| / max(1, |a|)) of all analytic first and second
/// derivatives against central differences with step h.
double finite_diff_check(const Problem& pr, const Vector& x, double h);

/// 50-agent ring, maximize sum_i (i+1) log x_i s.t. A x <= C with each of the
/// m rows supported on a distinct corresponding agent and its ring neighbors.
Instance preset_num_ring(int n = 50, int m = 23, std::uint64_t seed = 1);

/// Two agents on one edge: min (x1-1)^2 + (x2+1)^2 s.t. x1 - 6x2 <= 0, -x1 + x2 <= 0.
Instance preset_counterexample();

/// Two agents on one edge: min (x1-2)^2 + (x2-1)^2 s.t. x1^2 + x2^2 - 1 = 0.
Instance preset_circle();

/// One agent: min x^2 s.t. x - 1 = 0.
Instance preset_scalar_equality();

std::vector<std::string> preset_names();
Instance make_preset(const std::string& name, std::uint64_t seed = 1);

}  // namespace dpen
