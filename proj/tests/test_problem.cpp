#include "doctest.h"

#include "dpen/problem.hpp"
#include "dpen/rng.hpp"
#include "oracles.hpp"

using namespace dpen;

TEST_CASE("validate_locality") {
  const Instance ring = preset_num_ring();
  CHECK(validate_locality(ring.problem, ring.graph).passed);

  std::vector<ScalarFunction> obj(3, ScalarFunction{[](double x) { return x * x; },
                                                    [](double x) { return 2 * x; },
                                                    [](double) { return 2.0; }});
  std::vector<ConstraintSpec> ineq;
  ineq.push_back(linear_constraint("far", 0, {0, 2}, Eigen::Vector2d(1, 1), 1));
  const Problem bad("bad", obj, ineq, {}, DomainBox::cube(3, -1, 1));
  const LocalityReport report = validate_locality(bad, path_graph(3));
  CHECK_FALSE(report.passed);
  REQUIRE(report.violations.size() == 1);
  CHECK(report.violations[0].find("far") != std::string::npos);

  const Instance single = preset_scalar_equality();
  CHECK(validate_locality(single.problem, single.graph).passed);
}

TEST_CASE("constraint evaluation on the counterexample") {
  const Instance ce = preset_counterexample();
  const auto v0 = eval_constraints(ce.problem, Eigen::Vector2d(0, 0));
  CHECK(v0.g == Eigen::Vector2d(0, 0));
  const auto v1 = eval_constraints(ce.problem, Eigen::Vector2d(6, 1));
  CHECK(v1.g(0) == 0.0);
  CHECK(v1.g(1) == -5.0);

  CHECK(ce.problem.objective_value(Eigen::Vector2d(0, 0)) == 2.0);
  CHECK(ce.problem.objective_gradient(Eigen::Vector2d(0, 0)) == Vector(Eigen::Vector2d(-2, 2)));

  Rng rng(5);
  for (int trial = 0; trial < 5; ++trial) {
    const Vector x = rng.uniform_vector(2, -5, 5);
    const auto jac = constraint_jacobians(ce.problem, x);
    CHECK(jac.dg.col(0) == Vector(Eigen::Vector2d(1, -6)));
    CHECK(jac.dg.col(1) == Vector(Eigen::Vector2d(-1, 1)));
  }
}

TEST_CASE("num_ring preset structure") {
  const Instance inst = preset_num_ring(50, 23, 1);
  const Problem& pr = inst.problem;
  CHECK(pr.n() == 50);
  CHECK(pr.m() == 23);
  CHECK(pr.p() == 0);
  CHECK(pr.sense() == Sense::Maximize);

  const Matrix A = oracle::probe_linear_rows(pr);
  std::vector<int> owners;
  for (int j = 0; j < pr.m(); ++j) {
    const AgentId c = pr.inequalities()[j].corresponding_agent;
    owners.push_back(c);
    int nonzeros = 0;
    for (int k = 0; k < 50; ++k) {
      if (A(j, k) != 0.0) {
        ++nonzeros;
        const int d = std::min((k - c + 50) % 50, (c - k + 50) % 50);
        CHECK(d <= 1);
        CHECK(A(j, k) >= 0.5);
        CHECK(A(j, k) <= 1.5);
      }
    }
    CHECK(nonzeros == 3);
  }
  std::sort(owners.begin(), owners.end());
  CHECK(std::adjacent_find(owners.begin(), owners.end()) == owners.end());

  // Every agent appears in some constraint.
  for (int i = 0; i < 50; ++i) CHECK_FALSE(pr.involved(i).empty());

  // x = 1 is strictly feasible, and evaluation through footprints matches A x - C.
  const Vector ones = Vector::Ones(50);
  const Vector g1 = eval_constraints(pr, ones).g;
  CHECK(g1.maxCoeff() < 0);
  const Vector C = -eval_constraints(pr, Vector::Zero(50)).g;
  Rng rng(11);
  for (int trial = 0; trial < 10; ++trial) {
    const Vector x = rng.uniform_vector(50, 0.2, 5.0);
    CHECK(oracle::max_abs(eval_constraints(pr, x).g - (A * x - C)) < 1e-12);
    const auto jac = constraint_jacobians(pr, x);
    CHECK(oracle::max_abs(jac.dg - A.transpose()) <= 1e-14);
    CHECK(((A.transpose().array() == 0.0) <= (jac.dg.array() == 0.0)).all());
  }

  CHECK(pr.domain().contains(ones));
  CHECK_FALSE(pr.domain().contains(Vector::Constant(50, 0.05)));
  CHECK(pr.domain().contains(Vector::Constant(50, 10.5), 0.1));
  CHECK_FALSE(pr.domain().contains(Vector::Constant(50, 11.5), 0.1));
}

TEST_CASE("check_licq") {
  const Instance ce = preset_counterexample();
  const LicqResult at_origin = check_licq(ce.problem, Eigen::Vector2d(0, 0));
  CHECK(at_origin.holds);
  CHECK(at_origin.active.size() == 2);
  CHECK(at_origin.smallest_singular_value > 0.1);

  const LicqResult inactive = check_licq(ce.problem, Eigen::Vector2d(1, 2));
  CHECK(inactive.holds);
  CHECK(inactive.active.empty());

  std::vector<ScalarFunction> obj(2, ScalarFunction{[](double x) { return x * x; },
                                                    [](double x) { return 2 * x; },
                                                    [](double) { return 2.0; }});
  std::vector<ConstraintSpec> dup;
  dup.push_back(linear_constraint("a", 0, {0, 1}, Eigen::Vector2d(1, 1), 0));
  dup.push_back(linear_constraint("b", 0, {0, 1}, Eigen::Vector2d(1, 1), 0));
  const Problem twice("dup", obj, dup, {}, DomainBox::cube(2, -1, 1));
  CHECK_FALSE(check_licq(twice, Eigen::Vector2d(0, 0)).holds);
}

TEST_CASE("finite_diff_check") {
  const Instance ce = preset_counterexample();
  CHECK(finite_diff_check(ce.problem, Eigen::Vector2d(0.3, -0.2), 1e-5) <= 1e-6);

  const Instance ring = preset_num_ring();
  Rng rng(2);
  CHECK(finite_diff_check(ring.problem, rng.uniform_vector(50, 0.5, 3.0), 1e-5) <= 1e-5);

  const Instance circle = preset_circle();
  CHECK(finite_diff_check(circle.problem, Eigen::Vector2d(0.4, 0.7), 1e-5) <= 1e-6);
}

TEST_CASE("problem validation") {
  std::vector<ScalarFunction> obj(2, ScalarFunction{[](double x) { return x; },
                                                    [](double) { return 1.0; },
                                                    [](double) { return 0.0; }});
  std::vector<ConstraintSpec> ineq;
  ineq.push_back(linear_constraint("c", 1, {0}, Vector::Ones(1), 0));
  CHECK_THROWS_AS(Problem("x", obj, ineq, {}, DomainBox::cube(2, -1, 1)), InvalidArgument);
  CHECK_THROWS_AS(make_preset("nope"), InvalidArgument);
}
