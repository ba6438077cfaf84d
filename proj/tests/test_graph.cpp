#include "doctest.h"

#include <Eigen/Dense>

#include "dpen/graph.hpp"
#include "dpen/rng.hpp"

using namespace dpen;

TEST_CASE("build_graph canonicalizes edges") {
  const Graph path = build_graph(2, {{0, 1}, {1, 0}});
  CHECK(path.edges().size() == 1);
  CHECK(path.degree(0) == 1);
  CHECK(path.degree(1) == 1);

  const Graph k3 = build_graph(3, {{0, 1}, {1, 2}, {2, 0}});
  CHECK(k3.degree(0) == 2);
  CHECK(k3.adjacent(2, 0));

  const Graph ring = ring_graph(50);
  CHECK(ring.edges().size() == 50);
  for (int i = 0; i < 50; ++i) CHECK(ring.degree(i) == 2);
}

TEST_CASE("build_graph rejects bad input") {
  CHECK_THROWS_AS(build_graph(3, {{0, 0}, {0, 1}, {1, 2}}), InvalidArgument);
  CHECK_THROWS_AS(build_graph(3, {{0, 3}}), InvalidArgument);
  try {
    build_graph(4, {{0, 1}, {2, 3}});
    FAIL("expected disconnected graph error");
  } catch (const InvalidArgument& e) {
    CHECK(std::string(e.what()).find("{2, 3}") != std::string::npos);
  }
}

TEST_CASE("laplacian matches D - A") {
  Eigen::Matrix2d expected2;
  expected2 << 1, -1, -1, 1;
  CHECK(laplacian(path_graph(2)) == Matrix(expected2));

  Eigen::Matrix3d expected3;
  expected3 << 2, -1, -1, -1, 2, -1, -1, -1, 2;
  CHECK(laplacian(complete_graph(3)) == Matrix(expected3));

  const Matrix L = laplacian(ring_graph(50));
  for (int i = 0; i < 50; ++i) {
    CHECK(L(i, i) == 2);
    CHECK(L(i, (i + 1) % 50) == -1);
    CHECK(L(i, (i + 49) % 50) == -1);
    CHECK(L.row(i).cwiseAbs().sum() == 4);
  }
}

TEST_CASE("laplacian annihilates ones in integer arithmetic") {
  Rng rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 2 + static_cast<int>(rng.uniform() * 15);
    std::vector<std::pair<AgentId, AgentId>> edges;
    for (int i = 0; i + 1 < n; ++i) edges.emplace_back(i, i + 1);
    for (int e = 0; e < n; ++e) {
      const int a = static_cast<int>(rng.uniform() * n), b = static_cast<int>(rng.uniform() * n);
      if (a != b) edges.emplace_back(a, b);
    }
    const Graph g = build_graph(n, edges);
    const auto L = laplacian<long>(g);
    CHECK((L * VectorX<long>::Ones(n)).isZero());

    const double l2 = lambda2(laplacian(g));
    CHECK(l2 > 0);
    for (int i = 0; i < n; ++i) {
      const auto one = k_hop_neighbors(g, i, 1);
      const auto two = k_hop_neighbors(g, i, 2);
      CHECK(std::includes(two.begin(), two.end(), one.begin(), one.end()));
    }
  }
}

TEST_CASE("k_hop_neighbors") {
  const Graph ring = ring_graph(50);
  CHECK(k_hop_neighbors(ring, 0, 1) == std::vector<AgentId>{1, 49});
  CHECK(k_hop_neighbors(ring, 0, 2) == std::vector<AgentId>{1, 2, 48, 49});
  CHECK(k_hop_neighbors(complete_graph(3), 0, 2) == std::vector<AgentId>{1, 2});
  CHECK_THROWS_AS(k_hop_neighbors(ring, 0, 3), InvalidArgument);
}

TEST_CASE("lambda2") {
  CHECK(lambda2(laplacian(complete_graph(3))) == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(lambda2(laplacian(path_graph(2))) == doctest::Approx(2.0).epsilon(1e-12));
  CHECK_THROWS_AS(lambda2(Matrix::Zero(3, 3)), InvalidArgument);

  // Ring Laplacian spectrum is 2 - 2 cos(2 pi k / n).
  const double expected = 2.0 - 2.0 * std::cos(2.0 * M_PI / 50.0);
  CHECK(lambda2(laplacian(ring_graph(50))) == doctest::Approx(expected).epsilon(1e-10));
}
