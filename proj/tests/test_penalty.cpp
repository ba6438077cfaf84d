#include "doctest.h"

#include <Eigen/Dense>

#include "dpen/penalty.hpp"
#include "dpen/rng.hpp"
#include "oracles.hpp"

using namespace dpen;

namespace {

const PenaltyParams kParams{1e-2, 1.0};

struct KnownKkt {
  Instance inst;
  Vector x;
  Vector lambda;
  Vector mu;
};

std::vector<KnownKkt> known_kkt_points() {
  std::vector<KnownKkt> out;
  out.push_back({preset_counterexample(), Eigen::Vector2d(30.0 / 37.0, 5.0 / 37.0),
                 Eigen::Vector2d(14.0 / 37.0, 0.0), Vector(0)});
  out.push_back({preset_circle(), Eigen::Vector2d(2.0, 1.0) / std::sqrt(5.0), Vector(0),
                 Vector::Constant(1, std::sqrt(5.0) - 1.0)});
  out.push_back({preset_scalar_equality(), Vector::Ones(1), Vector(0), Vector::Constant(1, -2.0)});
  return out;
}

Vector random_interior(const Instance& inst, Rng& rng) {
  if (inst.problem.name() == "num_ring") return rng.uniform_vector(inst.problem.n(), 0.5, 3.0);
  return rng.uniform_vector(inst.problem.n(), -2.0, 2.0);
}

}  // namespace

TEST_CASE("assemble_N") {
  const Instance ce = preset_counterexample();
  Eigen::Matrix2d expected;
  expected << 37, -7, -7, 2;
  CHECK(oracle::max_abs(assemble_N(ce.problem, Eigen::Vector2d(0, 0), kParams) - expected) == 0.0);

  std::vector<ScalarFunction> obj(2, ScalarFunction{[](double x) { return x * x; },
                                                    [](double x) { return 2 * x; },
                                                    [](double) { return 2.0; }});
  std::vector<ConstraintSpec> ineq;
  ineq.push_back(linear_constraint("x1", 0, {0}, Vector::Ones(1), 0.0));
  const Problem single("single", obj, ineq, {}, DomainBox::cube(2, -1, 1));
  CHECK(assemble_N(single, Eigen::Vector2d(0, 0.5), kParams)(0, 0) == 1.0);

  const Instance ring = preset_num_ring();
  const Matrix A = oracle::probe_linear_rows(ring.problem);
  const Vector C = -eval_constraints(ring.problem, Vector::Zero(50)).g;
  const Vector ones = Vector::Ones(50);
  const Vector g = A * ones - C;
  const Matrix dense = A * A.transpose() + Matrix(g.array().square().matrix().asDiagonal());
  CHECK(oracle::max_abs(assemble_N(ring.problem, ones, kParams) - dense) < 1e-12);
}

TEST_CASE("assemble_N rejects LICQ failure") {
  const Instance circle = preset_circle();
  CHECK_THROWS_AS(assemble_N(circle.problem, Eigen::Vector2d(0, 0), kParams), SingularSystem);
  CHECK_THROWS_AS(multipliers(circle.problem, Eigen::Vector2d(0, 0), kParams), SingularSystem);
}

TEST_CASE("N(x) is positive definite on sampled points") {
  Rng rng(21);
  for (const auto& name : {"num_ring", "counterexample", "circle"}) {
    const Instance inst = make_preset(name);
    for (int trial = 0; trial < 10; ++trial) {
      const Vector x = random_interior(inst, rng);
      if (!check_licq(inst.problem, x).holds) continue;
      Eigen::SelfAdjointEigenSolver<Matrix> eig(assemble_N(inst.problem, x, kParams));
      CHECK(eig.eigenvalues()(0) > 0);
    }
  }
}

TEST_CASE("multipliers") {
  const Instance ce = preset_counterexample();
  const MultiplierPair at_origin = multipliers(ce.problem, Eigen::Vector2d(0, 0), kParams);
  CHECK(std::abs(at_origin.lambda(0) - 0.0) <= 1e-12);
  CHECK(std::abs(at_origin.lambda(1) + 2.0) <= 1e-12);

  const Instance scalar = preset_scalar_equality();
  CHECK(multipliers(scalar.problem, Vector::Ones(1), kParams).mu(0) ==
        doctest::Approx(-2.0).epsilon(1e-14));

  // Dense oracle: QR solve of the explicitly assembled normal system.
  const Instance ring = preset_num_ring();
  const Matrix A = oracle::probe_linear_rows(ring.problem);
  const Vector C = -eval_constraints(ring.problem, Vector::Zero(50)).g;
  Rng rng(4);
  for (int trial = 0; trial < 5; ++trial) {
    const Vector x = rng.uniform_vector(50, 0.5, 3.0);
    const Vector g = A * x - C;
    Vector grad_f(50);
    for (int i = 0; i < 50; ++i) grad_f(i) = -(i + 1.0) / x(i);
    const Matrix N = A * A.transpose() + Matrix(g.array().square().matrix().asDiagonal());
    const Vector expected = N.colPivHouseholderQr().solve(-(A * grad_f));
    CHECK(oracle::rel_err(multipliers(ring.problem, x, kParams).lambda, expected) <= 1e-10);
  }
}

TEST_CASE("multipliers agree with KKT multipliers at KKT points") {
  for (const auto& k : known_kkt_points()) {
    const MultiplierPair mp = multipliers(k.inst.problem, k.x, kParams);
    CHECK(oracle::max_abs(mp.lambda - k.lambda) <= 1e-8);
    CHECK(oracle::max_abs(mp.mu - k.mu) <= 1e-8);
    CHECK(kkt_residual(k.inst.problem, k.x, {k.lambda, k.mu}) <= 1e-12);
  }
}

TEST_CASE("shifted_slack") {
  const Instance ce = preset_counterexample();
  const Vector slack = shifted_slack(ce.problem, Eigen::Vector2d(0, 0), Eigen::Vector2d(0, -2), kParams);
  CHECK(slack(0) == 0.0);
  CHECK(slack(1) == doctest::Approx(kParams.epsilon).epsilon(1e-15));

  CHECK(shifted_slack_from_values(Vector::Constant(1, 0.5), Vector::Constant(1, 1.0), 0.1)(0) == 0.0);
  CHECK(shifted_slack_from_values(Vector::Constant(1, -1.0), Vector::Zero(1), 0.1)(0) == 1.0);
}

TEST_CASE("penalty_value") {
  const Instance scalar = preset_scalar_equality();
  for (double eps : {1.0, 0.1, 0.01}) {
    CHECK(penalty_value(scalar.problem, Vector::Ones(1), {eps, 1.0}) ==
          doctest::Approx(1.0).epsilon(1e-14));
  }
  // Direct formula at the origin: f = 2, lambda = (0, -2), g + Yy = (0, eps).
  const Instance ce = preset_counterexample();
  for (double eps : {1.0, 0.1, 0.01}) {
    const double expected = 2.0 + (-2.0) * eps + (1.0 / eps) * eps * eps;
    CHECK(penalty_value(ce.problem, Eigen::Vector2d(0, 0), {eps, 1.0}) ==
          doctest::Approx(expected).epsilon(1e-13));
  }
}

TEST_CASE("rs_matrices") {
  const Instance ce = preset_counterexample();
  const Vector origin = Eigen::Vector2d(0, 0);
  const RSMatrices rs = rs_matrices(ce.problem, origin, kParams, multipliers(ce.problem, origin, kParams));
  Eigen::Matrix2d expected;  // 2 * grad g'
  expected << 2, -12, -2, 2;
  CHECK(oracle::max_abs(rs.R - expected) <= 1e-12);
  CHECK(rs.S.rows() == 0);
}

TEST_CASE("Jacobian identity [R; S] = -N * d(lambda, mu)/dx") {
  Rng rng(8);
  for (const auto& name : {"num_ring", "counterexample", "circle"}) {
    const Instance inst = make_preset(name);
    const Problem& pr = inst.problem;
    for (int trial = 0; trial < 3; ++trial) {
      const Vector x = random_interior(inst, rng);
      const auto stacked_mult = [&](const Vector& z) {
        const MultiplierPair mp = multipliers(pr, z, kParams);
        Vector out(pr.q());
        out << mp.lambda, mp.mu;
        return out;
      };
      const Matrix jac = oracle::central_jacobian(stacked_mult, x, 1e-6);
      const Matrix N = assemble_N(pr, x, kParams);
      const RSMatrices rs = rs_matrices(pr, x, kParams, multipliers(pr, x, kParams));
      Matrix RS(pr.q(), pr.n());
      RS << rs.R, rs.S;
      const Matrix fd = -N * jac;
      CHECK(oracle::max_abs(RS - fd) / std::max(1.0, oracle::max_abs(RS)) <= 1e-4);
    }
  }
}

TEST_CASE("varrho") {
  const Instance ce = preset_counterexample();
  const Vector origin = Eigen::Vector2d(0, 0);
  for (double eps : {1.0, 0.01}) {
    const PenaltyParams params{eps, 1.0};
    const Vector v = varrho(ce.problem, origin, params, multipliers(ce.problem, origin, params));
    Eigen::Matrix2d N;
    N << 37, -7, -7, 2;
    const Vector expected = N.inverse() * Eigen::Vector2d(0, eps);
    CHECK(oracle::max_abs(v - expected) <= 1e-14);
  }

  const Instance circle = preset_circle();
  const Vector on_circle = Eigen::Vector2d(0.6, 0.8);
  CHECK(varrho(circle.problem, on_circle, kParams, multipliers(circle.problem, on_circle, kParams))
            .norm() <= 1e-15);
}

TEST_CASE("penalty_gradient: Lie derivative at the counterexample origin") {
  const Instance ce = preset_counterexample();
  const Vector origin = Eigen::Vector2d(0, 0);
  const Matrix dg = constraint_jacobians(ce.problem, origin).dg;
  for (double eps : {1.0, 0.1, 0.01}) {
    const Vector lie = dg.transpose() * -penalty_gradient(ce.problem, origin, {eps, 1.0});
    CHECK(std::abs(lie(0) - 14.0) <= 1e-9);
    CHECK(std::abs(lie(1) - (2.0 * eps - 4.0)) <= 1e-9);
  }
}

TEST_CASE("penalty_gradient matches finite differences of penalty_value") {
  Rng rng(13);
  for (const auto& name : {"num_ring", "counterexample", "circle", "scalar_equality"}) {
    const Instance inst = make_preset(name);
    for (int trial = 0; trial < 10; ++trial) {
      const Vector x = random_interior(inst, rng);
      const Vector grad = penalty_gradient(inst.problem, x, kParams);
      const Vector fd = oracle::central_gradient(
          [&](const Vector& z) { return penalty_value(inst.problem, z, kParams); }, x, 1e-6);
      CHECK(oracle::rel_err(grad, fd) <= 1e-5);
    }
  }
}

TEST_CASE("stationarity transfer at KKT points") {
  for (const auto& k : known_kkt_points()) {
    for (double eps : {1.0, 0.1, 0.01}) {
      CHECK(penalty_gradient(k.inst.problem, k.x, {eps, 1.0}).norm() <= 1e-8);
    }
  }
}

TEST_CASE("gradient_with_estimates reduces to penalty_gradient at chi(x)") {
  Rng rng(17);
  const Instance ring = preset_num_ring();
  const Vector x = rng.uniform_vector(50, 0.5, 3.0);
  const Vector exact = chi(ring.problem, x, kParams);
  CHECK(oracle::max_abs(gradient_with_estimates(ring.problem, x, kParams, exact) -
                        penalty_gradient(ring.problem, x, kParams)) <= 1e-9);
}

TEST_CASE("kkt_residual") {
  const Instance ce = preset_counterexample();
  const Problem& pr = ce.problem;
  const Eigen::Vector2d best = oracle::brute_force_min_2d(
      [&](const Eigen::Vector2d& x) { return pr.objective_value(x); },
      [&](const Eigen::Vector2d& x) { return eval_constraints(pr, x).g.maxCoeff() <= 0; },
      Eigen::Vector2d(-10, -10), Eigen::Vector2d(10, 10));
  CHECK(std::abs(best(0) - 30.0 / 37.0) <= 1e-7);
  CHECK(std::abs(best(1) - 5.0 / 37.0) <= 1e-7);
  CHECK(kkt_residual(pr, best, multipliers(pr, best, kParams)) <= 1e-6);

  const Vector infeasible = Eigen::Vector2d(1, -1);
  const double violation = eval_constraints(pr, infeasible).g.maxCoeff();
  CHECK(kkt_residual(pr, infeasible, multipliers(pr, infeasible, kParams)) >= violation);

  const Instance scalar = preset_scalar_equality();
  CHECK(kkt_residual(scalar.problem, Vector::Ones(1), {Vector(0), Vector::Constant(1, -2.0)}) == 0.0);
}
