#include "doctest.h"

#include <Eigen/Dense>

#include "dpen/distgrad.hpp"
#include "dpen/rng.hpp"
#include "oracles.hpp"

using namespace dpen;

namespace {

const PenaltyParams kParams{1e-2, 1.0};

Vector random_point(const Instance& inst, Rng& rng) {
  if (inst.problem.name() == "num_ring") return rng.uniform_vector(inst.problem.n(), 0.5, 3.0);
  return rng.uniform_vector(inst.problem.n(), -2.0, 2.0);
}

std::vector<Instance> all_presets() {
  std::vector<Instance> out;
  for (const auto& name : preset_names()) out.push_back(make_preset(name));
  return out;
}

}  // namespace

TEST_CASE("local_share_gh") {
  SUBCASE("footprint of size 3 splits the value evenly") {
    const Graph g = path_graph(4);
    std::vector<ConstraintSpec> ineq{
        linear_constraint("c", 1, {0, 1, 2}, Eigen::Vector3d(1, 1, 1), 0.0)};
    const Problem pr("toy", std::vector<ScalarFunction>(4, {[](double v) { return v * v; },
                                                            [](double v) { return 2 * v; },
                                                            [](double) { return 2.0; }}),
                     ineq, {}, DomainBox::cube(4, -10, 10));
    const Network net(pr, g);
    const Vector x = (Vector(4) << 1, 2, 3, 7).finished();
    for (AgentId i = 0; i < 3; ++i) {
      const LocalShares s = local_share_gh(AgentView(net, i, x), Vector::Zero(1), kParams);
      CHECK(s.g(0) == 2.0);
    }
    CHECK(local_share_gh(AgentView(net, 3, x), Vector::Zero(1), kParams).g(0) == 0.0);
  }
  SUBCASE("agent outside every equality footprint has zero h share") {
    const Instance ce = preset_counterexample();
    const Network net(ce.problem, ce.graph);
    const LocalShares s = local_share_gh(AgentView(net, 0, ce.x0), Vector::Zero(2), kParams);
    CHECK(s.h.size() == 0);
    const Instance circle = preset_circle();
    const Network net2(circle.problem, circle.graph);
    const LocalShares s2 =
        local_share_gh(AgentView(net2, 0, Eigen::Vector2d(0.5, 0.5)), Vector(0), kParams);
    CHECK(s2.h(0) == doctest::Approx(-0.25));
  }
}

TEST_CASE("decomposition sums match the centralized quantities") {
  Rng rng(101);
  for (const Instance& inst : all_presets()) {
    const Problem& pr = inst.problem;
    const Network net(pr, inst.graph);
    CAPTURE(pr.name());
    for (int trial = 0; trial < 20; ++trial) {
      const Vector x = random_point(inst, rng);
      const Vector lambda_hat = rng.uniform_vector(pr.m(), -1, 1);
      const auto pieces = all_local_pieces(net, x, lambda_hat, kParams);

      Matrix N = Matrix::Zero(pr.q(), pr.q());
      Vector b_mult = Vector::Zero(pr.q()), b_var = Vector::Zero(pr.q());
      for (const auto& piece : pieces) {
        N += piece.Ni;
        b_mult += piece.bi_mult;
        b_var += piece.bi_varrho;
      }
      // Independent dense assembly from finite-difference-free oracles.
      const ConstraintJacobians jac = constraint_jacobians(pr, x);
      Matrix A(pr.n(), pr.q());
      A << jac.dg, jac.dh;
      const ConstraintValues cv = eval_constraints(pr, x);
      Matrix N_ref = A.transpose() * A;
      for (int j = 0; j < pr.m(); ++j) N_ref(j, j) += cv.g(j) * cv.g(j);
      Vector var_ref(pr.q());
      Vector slack = (-(cv.g + 0.5 * kParams.epsilon * lambda_hat)).cwiseMax(0.0);
      var_ref << cv.g + slack, cv.h;

      CHECK(oracle::max_abs(N - N_ref) <= 1e-12 * std::max(1.0, oracle::max_abs(N_ref)));
      CHECK(oracle::max_abs(N - assemble_N(pr, x, kParams)) <= 1e-12 * std::max(1.0, oracle::max_abs(N_ref)));
      CHECK(oracle::max_abs(b_mult + A.transpose() * pr.objective_gradient(x)) <= 1e-12);
      CHECK(oracle::max_abs(b_var - var_ref) <= 1e-12);
    }
  }
}

TEST_CASE("counterexample decomposition at the origin") {
  const Instance ce = preset_counterexample();
  const Network net(ce.problem, ce.graph);
  const auto pieces = all_local_pieces(net, Vector::Zero(2), Vector::Zero(2), {0.01, 1.0});
  Matrix N = pieces[0].Ni + pieces[1].Ni;
  CHECK(N == (Matrix(2, 2) << 37, -7, -7, 2).finished());
}

TEST_CASE("individual blocks singular on num_ring, aggregate positive definite") {
  const Instance ring = preset_num_ring();
  const Network net(ring.problem, ring.graph);
  const auto pieces = all_local_pieces(net, ring.x0, Vector::Zero(ring.problem.m()), kParams);
  Matrix N = Matrix::Zero(ring.problem.q(), ring.problem.q());
  for (AgentId i = 0; i < net.n(); ++i) {
    Eigen::FullPivLU<Matrix> lu(pieces[i].Ni);
    const int active = int(ring.problem.involved(i).size());
    CHECK(lu.rank() <= 1 + active);
    CHECK(lu.rank() < ring.problem.q());
    N += pieces[i].Ni;
  }
  CHECK(Eigen::SelfAdjointEigenSolver<Matrix>(N).eigenvalues().minCoeff() > 0);
}

TEST_CASE("agent with no constraints and zero derivative has zero pieces") {
  const Graph g = path_graph(3);
  std::vector<ConstraintSpec> ineq{linear_constraint("c", 0, {0, 1}, Eigen::Vector2d(1, 1), 1.0)};
  const Problem pr("toy", std::vector<ScalarFunction>(3, {[](double v) { return v * v; },
                                                          [](double v) { return 2 * v; },
                                                          [](double) { return 2.0; }}),
                   ineq, {}, DomainBox::cube(3, -10, 10));
  const Network net(pr, g);
  const Vector x = Eigen::Vector3d(0.3, -0.2, 0.0);
  const Published pub = publish(net, x);
  const AgentView view(net, 2, x, &pub);
  const LocalPieces pieces = local_Ni_bi(view, kParams);
  CHECK(pieces.Ni.isZero(0));
  CHECK(pieces.bi_mult.isZero(0));
  // Unconstrained agent: the gradient is f_i' plus the varrho term, which vanishes here.
  CHECK(local_gradient(view, Vector::Zero(2), kParams) == 0.0);
}

TEST_CASE("local_ri_si columns equal rs_matrices at exact multipliers") {
  Rng rng(202);
  for (const Instance& inst : all_presets()) {
    const Problem& pr = inst.problem;
    const Network net(pr, inst.graph);
    CAPTURE(pr.name());
    for (int trial = 0; trial < 10; ++trial) {
      const Vector x = random_point(inst, rng);
      const MultiplierPair mult = multipliers(pr, x, kParams);
      const RSMatrices rs = rs_matrices(pr, x, kParams, mult);
      Matrix RS(pr.q(), pr.n());
      RS << rs.R, rs.S;
      const Published pub = publish(net, x);
      Matrix local(pr.q(), pr.n());
      for (AgentId i = 0; i < pr.n(); ++i) {
        local.col(i) = local_ri_si(AgentView(net, i, x, &pub), mult.lambda, mult.mu, kParams);
      }
      CHECK(oracle::max_abs(local - RS) <= 1e-10);
    }
  }
}

TEST_CASE("counterexample r_1 at the origin") {
  const Instance ce = preset_counterexample();
  const Network net(ce.problem, ce.graph);
  const PenaltyParams params{0.1, 1.0};
  const Vector x = Vector::Zero(2);
  const MultiplierPair mult = multipliers(ce.problem, x, params);
  const Published pub = publish(net, x);
  const Vector r1 = local_ri_si(AgentView(net, 0, x, &pub), mult.lambda, mult.mu, params);
  // 2 dg', first column.
  CHECK(r1(0) == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(r1(1) == doctest::Approx(-2.0).epsilon(1e-14));
}

TEST_CASE("stacked local gradients reproduce the centralized gradient") {
  Rng rng(303);
  for (const Instance& inst : all_presets()) {
    const Problem& pr = inst.problem;
    const Network net(pr, inst.graph);
    CAPTURE(pr.name());
    for (int trial = 0; trial < 10; ++trial) {
      const Vector x = random_point(inst, rng);
      const Vector exact = chi(pr, x, kParams);
      CHECK(oracle::max_abs(stacked_local_gradient(net, x, exact, kParams) -
                            penalty_gradient(pr, x, kParams)) <= 1e-9);
      const Vector arbitrary = rng.uniform_vector(exact.size(), -2, 2);
      CHECK(oracle::max_abs(stacked_local_gradient(net, x, arbitrary, kParams) -
                            gradient_with_estimates(pr, x, kParams, arbitrary)) <= 1e-9);
    }
  }
}

TEST_CASE("estimate perturbations move the gradient by a bounded amount") {
  Rng rng(404);
  const Instance ring = preset_num_ring();
  const Network net(ring.problem, ring.graph);
  const Vector x = ring.x0;
  const Vector base = chi(ring.problem, x, kParams);
  const Vector g0 = stacked_local_gradient(net, x, base, kParams);
  // Sampled Lipschitz constant over a small ball, then checked on fresh draws.
  double lip = 0.0;
  for (int k = 0; k < 20; ++k) {
    const Vector d = 1e-3 * rng.unit_vector(base.size());
    lip = std::max(lip, (stacked_local_gradient(net, x, base + d, kParams) - g0).norm() / d.norm());
  }
  CHECK(lip > 0);
  for (int k = 0; k < 20; ++k) {
    const Vector d = 1e-3 * rng.unit_vector(base.size());
    const double change = (stacked_local_gradient(net, x, base + d, kParams) - g0).norm();
    CHECK(change <= 2.0 * lip * d.norm());
  }
}

TEST_CASE("views reject reads beyond two hops") {
  const Instance ring = preset_num_ring();
  const Network net(ring.problem, ring.graph);
  const Published pub = publish(net, ring.x0);
  const AgentView view(net, 10, ring.x0, &pub);
  CHECK_NOTHROW(view.x(12));
  CHECK_NOTHROW(view.jac_row(8));
  CHECK_THROWS_AS(view.x(13), LocalityViolation);
  CHECK_THROWS_WITH(view.fprime(20), doctest::Contains("agent 10 read f' of agent 20"));
}
