#include "check.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>
#include <string>
#include <vector>

#include "dpen/distgrad.hpp"
#include "dpen/penalty.hpp"
#include "dpen/rng.hpp"

using namespace dpen;

namespace {

struct Table {
  std::ostream& out;
  bool all_passed = true;

  void row(bool passed, const std::string& name, const std::string& detail) {
    all_passed = all_passed && passed;
    out << (passed ? "PASS  " : "FAIL  ") << name << "  " << detail << '\n';
  }
};

std::string sci(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

double max_abs(const Matrix& m) { return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff(); }

std::vector<Vector> check_points(const Instance& inst, int count) {
  Rng rng(12345);
  std::vector<Vector> out;
  for (int k = 0; k < count; ++k) {
    out.push_back(inst.problem.name() == "num_ring" ? rng.uniform_vector(inst.problem.n(), 0.5, 3.0)
                                                    : rng.uniform_vector(inst.problem.n(), -2.0, 2.0));
  }
  return out;
}

void generic_checks(const Instance& inst, Table& table) {
  const Problem& pr = inst.problem;
  const PenaltyParams params;
  const Network net(pr, inst.graph);
  const auto points = check_points(inst, 5);

  const LocalityReport locality = validate_locality(pr, inst.graph);
  table.row(locality.passed, "constraint locality",
            locality.passed ? "every footprint within 1 hop of its corresponding agent"
                            : locality.violations.front());

  double worst_fd = 0.0;
  for (const Vector& x : points) {
    const Vector grad = penalty_gradient(pr, x, params);
    for (Index k = 0; k < x.size(); ++k) {
      const double h = 1e-6 * std::max(1.0, std::abs(x(k)));
      Vector plus = x, minus = x;
      plus(k) += h;
      minus(k) -= h;
      const double fd = (penalty_value(pr, plus, params) - penalty_value(pr, minus, params)) / (2 * h);
      worst_fd = std::max(worst_fd, std::abs(grad(k) - fd) / std::max(1.0, std::abs(fd)));
    }
  }
  table.row(worst_fd <= 1e-5, "penalty gradient vs finite differences", "max rel err " + sci(worst_fd));

  double worst_sum = 0.0, worst_grad = 0.0;
  for (const Vector& x : points) {
    const MultiplierPair mult = multipliers(pr, x, params);
    const auto pieces = all_local_pieces(net, x, mult.lambda, params);
    Matrix N = Matrix::Zero(pr.q(), pr.q());
    Vector b_mult = Vector::Zero(pr.q()), b_var = Vector::Zero(pr.q());
    for (const auto& piece : pieces) {
      N += piece.Ni;
      b_mult += piece.bi_mult;
      b_var += piece.bi_varrho;
    }
    const ConstraintJacobians jac = constraint_jacobians(pr, x);
    Matrix A(pr.n(), pr.q());
    A << jac.dg, jac.dh;
    const ConstraintValues cv = eval_constraints(pr, x);
    Vector rhs(pr.q());
    rhs << cv.g + shifted_slack(pr, x, mult.lambda, params), cv.h;
    worst_sum = std::max({worst_sum, max_abs(N - assemble_N(pr, x, params)),
                          max_abs(b_mult + A.transpose() * pr.objective_gradient(x)),
                          max_abs(b_var - rhs)});
    worst_grad = std::max(worst_grad, max_abs(stacked_local_gradient(net, x, chi(pr, x, params), params) -
                                              penalty_gradient(pr, x, params)));
  }
  table.row(worst_sum <= 1e-12, "decomposition sums (N, b_mult, b_varrho)", "max abs err " + sci(worst_sum));
  table.row(worst_grad <= 1e-9, "distributed gradient with exact estimates", "max abs err " + sci(worst_grad));
}

void counterexample_checks(const Instance& inst, Table& table) {
  const Problem& pr = inst.problem;
  const Vector origin = Vector::Zero(2);
  const Matrix N = assemble_N(pr, origin, {});
  table.row(max_abs(N - (Matrix(2, 2) << 37, -7, -7, 2).finished()) == 0.0, "N(0,0) = [37 -7; -7 2]",
            "det " + sci(N.determinant()));
  for (double eps : {1.0, 0.1, 0.01}) {
    const PenaltyParams params{eps, 1.0};
    const MultiplierPair mult = multipliers(pr, origin, params);
    const double lam_err = max_abs(mult.lambda - Eigen::Vector2d(0, -2));
    const Vector slack = shifted_slack(pr, origin, mult.lambda, params);
    const double slack_err = max_abs(slack - Eigen::Vector2d(0, eps));
    const Vector lie = constraint_jacobians(pr, origin).dg.transpose() * -penalty_gradient(pr, origin, params);
    const double lie_err = max_abs(lie - Eigen::Vector2d(14, 2 * eps - 4));
    const std::string tag = " (eps=" + sci(eps) + ")";
    table.row(lam_err <= 1e-12, "lambda(0,0) = (0, -2)" + tag, "err " + sci(lam_err));
    table.row(slack_err <= 1e-12, "shifted slack (0, eps)" + tag, "err " + sci(slack_err));
    table.row(lie_err <= 1e-9, "Lie derivative (14, 2eps-4)" + tag,
              "got (" + sci(lie(0)) + ", " + sci(lie(1)) + "), err " + sci(lie_err));
  }
}

}  // namespace

bool run_checks(const std::string& preset, std::ostream& out) {
  const Instance inst = make_preset(preset);
  out << "checks for " << preset << " (n=" << inst.problem.n() << ", m=" << inst.problem.m()
      << ", p=" << inst.problem.p() << ")\n";
  Table table{out};
  generic_checks(inst, table);
  if (preset == "counterexample") counterexample_checks(inst, table);
  out << (table.all_passed ? "all checks passed\n" : "some checks FAILED\n");
  return table.all_passed;
}
