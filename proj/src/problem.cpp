#include "dpen/problem.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/SVD>

#include "dpen/rng.hpp"

namespace dpen {

ConstraintSpec linear_constraint(std::string name, AgentId corresponding_agent,
                                 std::vector<AgentId> footprint, Vector coefficients,
                                 double bound) {
  if (static_cast<Index>(footprint.size()) != coefficients.size()) {
    throw InvalidArgument("linear_constraint '" + name + "': coefficient count mismatch");
  }
  // Keep footprint sorted so restricted subvectors line up with coefficients.
  std::vector<std::size_t> order(footprint.size());
  for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return footprint[a] < footprint[b]; });
  std::vector<AgentId> sorted(footprint.size());
  Vector a(coefficients.size());
  for (std::size_t k = 0; k < order.size(); ++k) {
    sorted[k] = footprint[order[k]];
    a(static_cast<Index>(k)) = coefficients(static_cast<Index>(order[k]));
  }
  const Index size = a.size();

  ConstraintSpec c;
  c.name = std::move(name);
  c.corresponding_agent = corresponding_agent;
  c.footprint = std::move(sorted);
  c.value = [a, bound](const Vector& xs) { return a.dot(xs) - bound; };
  c.grad = [a](const Vector&) { return a; };
  c.hess = [size](const Vector&) { return Matrix::Zero(size, size).eval(); };
  c.linear = true;
  return c;
}

DomainBox DomainBox::annulus(double inner, double outer) {
  if (!(inner >= 0 && outer > inner)) throw InvalidArgument("domain: need 0 <= inner < outer");
  DomainBox d;
  d.kind = Kind::Annulus;
  d.inner = inner;
  d.outer = outer;
  return d;
}

DomainBox DomainBox::box(Vector lower, Vector upper) {
  if (lower.size() != upper.size() || (upper - lower).minCoeff() <= 0) {
    throw InvalidArgument("domain: box needs lower < upper componentwise");
  }
  DomainBox d;
  d.kind = Kind::Box;
  d.lower = std::move(lower);
  d.upper = std::move(upper);
  return d;
}

DomainBox DomainBox::cube(Index n, double lo, double hi) {
  return box(Vector::Constant(n, lo), Vector::Constant(n, hi));
}

bool DomainBox::contains(const Vector& x, double slack) const {
  if (!x.allFinite()) return false;
  if (kind == Kind::Annulus) {
    const double r = x.lpNorm<Eigen::Infinity>();
    return r >= inner / (1.0 + slack) && r <= outer * (1.0 + slack);
  }
  const Vector margin = slack * (upper - lower);
  return (x.array() >= (lower - margin).array()).all() &&
         (x.array() <= (upper + margin).array()).all();
}

bool DomainBox::interior(const Vector& x) const {
  if (!x.allFinite()) return false;
  if (kind == Kind::Annulus) {
    const double r = x.lpNorm<Eigen::Infinity>();
    return r > inner && r < outer;
  }
  return (x.array() > lower.array()).all() && (x.array() < upper.array()).all();
}

Problem::Problem(std::string name, std::vector<ScalarFunction> objectives,
                 std::vector<ConstraintSpec> inequalities, std::vector<ConstraintSpec> equalities,
                 DomainBox domain, Sense sense)
    : name_(std::move(name)),
      objectives_(std::move(objectives)),
      inequalities_(std::move(inequalities)),
      equalities_(std::move(equalities)),
      domain_(std::move(domain)),
      sense_(sense) {
  const int agents = n();
  if (agents == 0) throw InvalidArgument("problem '" + name_ + "': no agents");
  if (p() > agents) throw InvalidArgument("problem '" + name_ + "': more equalities than agents");
  if (domain_.kind == DomainBox::Kind::Box && domain_.lower.size() != agents) {
    throw InvalidArgument("problem '" + name_ + "': domain box dimension mismatch");
  }
  for (const auto& f : objectives_) {
    if (!f.value || !f.d1 || !f.d2) {
      throw InvalidArgument("problem '" + name_ + "': objective missing a derivative");
    }
  }

  involved_.assign(agents, {});
  for (int c = 0; c < q(); ++c) {
    const ConstraintSpec& spec = constraint(c);
    const auto& fp = spec.footprint;
    if (fp.empty()) throw InvalidArgument("constraint '" + spec.name + "': empty footprint");
    if (!std::is_sorted(fp.begin(), fp.end()) ||
        std::adjacent_find(fp.begin(), fp.end()) != fp.end()) {
      throw InvalidArgument("constraint '" + spec.name + "': footprint must be sorted and unique");
    }
    if (fp.front() < 0 || fp.back() >= agents) {
      throw InvalidArgument("constraint '" + spec.name + "': footprint agent out of range");
    }
    if (!std::binary_search(fp.begin(), fp.end(), spec.corresponding_agent)) {
      throw InvalidArgument("constraint '" + spec.name +
                            "': corresponding agent must belong to the footprint");
    }
    if (!spec.value || !spec.grad || !spec.hess) {
      throw InvalidArgument("constraint '" + spec.name + "': missing callback");
    }
    for (AgentId i : fp) involved_[i].push_back(c);
  }
}

double Problem::objective_value(const Vector& x) const {
  double total = 0.0;
  for (int i = 0; i < n(); ++i) total += objectives_[i].value(x(i));
  return total;
}

Vector Problem::objective_gradient(const Vector& x) const {
  Vector out(n());
  for (int i = 0; i < n(); ++i) out(i) = objectives_[i].d1(x(i));
  return out;
}

Vector Problem::objective_hessian_diagonal(const Vector& x) const {
  Vector out(n());
  for (int i = 0; i < n(); ++i) out(i) = objectives_[i].d2(x(i));
  return out;
}

double Problem::reported_objective(const Vector& x) const {
  const double f = objective_value(x);
  return sense_ == Sense::Maximize ? -f : f;
}

Vector restrict_to(const Vector& x, const std::vector<AgentId>& footprint) {
  Vector out(static_cast<Index>(footprint.size()));
  for (std::size_t k = 0; k < footprint.size(); ++k) out(static_cast<Index>(k)) = x(footprint[k]);
  return out;
}

LocalityReport validate_locality(const Problem& pr, const Graph& g) {
  if (pr.n() != g.n()) throw InvalidArgument("validate_locality: agent count mismatch");
  LocalityReport report;
  for (int c = 0; c < pr.q(); ++c) {
    const ConstraintSpec& spec = pr.constraint(c);
    const AgentId owner = spec.corresponding_agent;
    for (AgentId j : spec.footprint) {
      if (j != owner && !g.adjacent(owner, j)) {
        report.passed = false;
        report.violations.push_back("constraint '" + spec.name + "' reads agent " +
                                    std::to_string(j) + ", not a neighbor of corresponding agent " +
                                    std::to_string(owner));
      }
    }
  }
  return report;
}

namespace {

double checked_value(const ConstraintSpec& c, const Vector& xs) {
  const double v = c.value(xs);
  if (!std::isfinite(v)) throw EvaluationError("constraint '" + c.name + "' is not finite");
  return v;
}

Vector checked_grad(const ConstraintSpec& c, const Vector& xs) {
  Vector g = c.grad(xs);
  if (g.size() != xs.size()) {
    throw InvalidArgument("constraint '" + c.name + "': gradient size does not match footprint");
  }
  if (!g.allFinite()) throw EvaluationError("constraint '" + c.name + "' gradient is not finite");
  return g;
}

}  // namespace

ConstraintValues eval_constraints(const Problem& pr, const Vector& x) {
  if (x.size() != pr.n()) throw InvalidArgument("eval_constraints: x has wrong length");
  ConstraintValues out{Vector(pr.m()), Vector(pr.p())};
  for (int j = 0; j < pr.m(); ++j) {
    const auto& c = pr.inequalities()[j];
    out.g(j) = checked_value(c, restrict_to(x, c.footprint));
  }
  for (int k = 0; k < pr.p(); ++k) {
    const auto& c = pr.equalities()[k];
    out.h(k) = checked_value(c, restrict_to(x, c.footprint));
  }
  return out;
}

ConstraintJacobians constraint_jacobians(const Problem& pr, const Vector& x) {
  if (x.size() != pr.n()) throw InvalidArgument("constraint_jacobians: x has wrong length");
  ConstraintJacobians out{Matrix::Zero(pr.n(), pr.m()), Matrix::Zero(pr.n(), pr.p())};
  auto fill = [&](const ConstraintSpec& c, auto column) {
    const Vector grad = checked_grad(c, restrict_to(x, c.footprint));
    for (std::size_t k = 0; k < c.footprint.size(); ++k) column(c.footprint[k]) = grad(Index(k));
  };
  for (int j = 0; j < pr.m(); ++j) fill(pr.inequalities()[j], out.dg.col(j));
  for (int k = 0; k < pr.p(); ++k) fill(pr.equalities()[k], out.dh.col(k));
  return out;
}

Matrix constraint_hessian(const ConstraintSpec& c, const Vector& x, int n) {
  Matrix out = Matrix::Zero(n, n);
  if (c.linear) return out;
  const Matrix local = c.hess(restrict_to(x, c.footprint));
  const auto& fp = c.footprint;
  if (local.rows() != Index(fp.size()) || local.cols() != Index(fp.size())) {
    throw InvalidArgument("constraint '" + c.name + "': Hessian size does not match footprint");
  }
  if (!local.allFinite()) throw EvaluationError("constraint '" + c.name + "' Hessian is not finite");
  for (std::size_t a = 0; a < fp.size(); ++a)
    for (std::size_t b = 0; b < fp.size(); ++b) out(fp[a], fp[b]) = local(Index(a), Index(b));
  return out;
}

LicqResult check_licq(const Problem& pr, const Vector& x) {
  const ConstraintValues values = eval_constraints(pr, x);
  const ConstraintJacobians jac = constraint_jacobians(pr, x);

  LicqResult out;
  for (int j = 0; j < pr.m(); ++j) {
    const double scale = 1.0 + jac.dg.col(j).lpNorm<Eigen::Infinity>();
    if (std::abs(values.g(j)) <= kActivityTol * scale) out.active.push_back(j);
  }
  const Index cols = static_cast<Index>(out.active.size()) + pr.p();
  if (cols == 0) {
    out.holds = true;
    out.smallest_singular_value = std::numeric_limits<double>::infinity();
    return out;
  }
  if (cols > pr.n()) {
    out.holds = false;
    out.smallest_singular_value = 0.0;
    return out;
  }
  Matrix stacked(pr.n(), cols);
  Index col = 0;
  for (int j : out.active) stacked.col(col++) = jac.dg.col(j);
  for (int k = 0; k < pr.p(); ++k) stacked.col(col++) = jac.dh.col(k);

  Eigen::JacobiSVD<Matrix> svd(stacked);
  const auto& sv = svd.singularValues();
  out.smallest_singular_value = sv(sv.size() - 1);
  out.holds = out.smallest_singular_value > kLicqSingularTol * std::max(1.0, sv(0));
  return out;
}

double finite_diff_check(const Problem& pr, const Vector& x, double h) {
  auto rel = [](double analytic, double numeric) {
    return std::abs(analytic - numeric) / std::max(1.0, std::abs(analytic));
  };
  double worst = 0.0;

  for (int i = 0; i < pr.n(); ++i) {
    const ScalarFunction& f = pr.objective(i);
    const double xi = x(i);
    const double d1 = (f.value(xi + h) - f.value(xi - h)) / (2 * h);
    const double d2 = (f.d1(xi + h) - f.d1(xi - h)) / (2 * h);
    worst = std::max({worst, rel(f.d1(xi), d1), rel(f.d2(xi), d2)});
  }

  for (int c = 0; c < pr.q(); ++c) {
    const ConstraintSpec& spec = pr.constraint(c);
    const Vector xs = restrict_to(x, spec.footprint);
    const Vector grad = spec.grad(xs);
    const Matrix hess = spec.hess(xs);
    for (Index a = 0; a < xs.size(); ++a) {
      Vector plus = xs, minus = xs;
      plus(a) += h;
      minus(a) -= h;
      const double d1 = (spec.value(plus) - spec.value(minus)) / (2 * h);
      worst = std::max(worst, rel(grad(a), d1));
      const Vector d2 = (spec.grad(plus) - spec.grad(minus)) / (2 * h);
      for (Index b = 0; b < xs.size(); ++b) worst = std::max(worst, rel(hess(b, a), d2(b)));
    }
  }
  return worst;
}

namespace {

ScalarFunction weighted_neg_log(double weight) {
  return {[weight](double x) { return -weight * std::log(x); },
          [weight](double x) { return -weight / x; },
          [weight](double x) { return weight / (x * x); }};
}

ScalarFunction shifted_square(double center) {
  return {[center](double x) { return (x - center) * (x - center); },
          [center](double x) { return 2.0 * (x - center); }, [](double) { return 2.0; }};
}

}  // namespace

Instance preset_num_ring(int n, int m, std::uint64_t seed) {
  if (n < 3 || m < 1 || m > n) throw InvalidArgument("preset_num_ring: need n >= 3, 1 <= m <= n");
  Graph graph = ring_graph(n);

  std::vector<ScalarFunction> objectives;
  for (int i = 0; i < n; ++i) objectives.push_back(weighted_neg_log(i + 1.0));

  // Corresponding agents spread evenly; spacing <= 3 whenever n <= 3m so every agent is covered.
  Rng rng(seed);
  std::vector<ConstraintSpec> rows;
  for (int j = 0; j < m; ++j) {
    const AgentId c = static_cast<AgentId>((static_cast<long>(j) * n) / m);
    const std::vector<AgentId> support = {(c + n - 1) % n, c, (c + 1) % n};
    const Vector a = rng.uniform_vector(3, 0.5, 1.5);
    const double bound = a.sum() + rng.uniform(0.5, 1.5);
    rows.push_back(linear_constraint("capacity_" + std::to_string(j), c, support, a, bound));
  }

  Problem problem("num_ring", std::move(objectives), std::move(rows), {},
                  DomainBox::annulus(1e-1, 10.0), Sense::Maximize);
  return {std::move(problem), std::move(graph), Vector::Ones(n)};
}

Instance preset_counterexample() {
  std::vector<ScalarFunction> objectives = {shifted_square(1.0), shifted_square(-1.0)};
  std::vector<ConstraintSpec> ineq;
  ineq.push_back(linear_constraint("g1", 0, {0, 1}, Eigen::Vector2d(1.0, -6.0), 0.0));
  ineq.push_back(linear_constraint("g2", 1, {0, 1}, Eigen::Vector2d(-1.0, 1.0), 0.0));
  Problem problem("counterexample", std::move(objectives), std::move(ineq), {},
                  DomainBox::cube(2, -10.0, 10.0));
  return {std::move(problem), path_graph(2), Vector::Zero(2)};
}

Instance preset_circle() {
  std::vector<ScalarFunction> objectives = {shifted_square(2.0), shifted_square(1.0)};
  ConstraintSpec circle;
  circle.name = "circle";
  circle.corresponding_agent = 0;
  circle.footprint = {0, 1};
  circle.value = [](const Vector& xs) { return xs.squaredNorm() - 1.0; };
  circle.grad = [](const Vector& xs) { return Vector(2.0 * xs); };
  circle.hess = [](const Vector&) { return Matrix(2.0 * Matrix::Identity(2, 2)); };
  std::vector<ConstraintSpec> eq;
  eq.push_back(std::move(circle));
  Problem problem("circle", std::move(objectives), {}, std::move(eq), DomainBox::cube(2, -3.0, 3.0));
  return {std::move(problem), path_graph(2), Eigen::Vector2d(0.0, 1.0)};
}

Instance preset_scalar_equality() {
  std::vector<ScalarFunction> objectives = {shifted_square(0.0)};
  std::vector<ConstraintSpec> eq;
  eq.push_back(linear_constraint("unit", 0, {0}, Vector::Ones(1), 1.0));
  Problem problem("scalar_equality", std::move(objectives), {}, std::move(eq),
                  DomainBox::cube(1, -10.0, 10.0));
  return {std::move(problem), build_graph(1, {}), Vector::Ones(1)};
}

std::vector<std::string> preset_names() {
  return {"num_ring", "counterexample", "circle", "scalar_equality"};
}

Instance make_preset(const std::string& name, std::uint64_t seed) {
  if (name == "num_ring") return preset_num_ring(50, 23, seed);
  if (name == "counterexample") return preset_counterexample();
  if (name == "circle") return preset_circle();
  if (name == "scalar_equality") return preset_scalar_equality();
  std::string known;
  for (const auto& p : preset_names()) known += (known.empty() ? "" : ", ") + p;
  throw InvalidArgument("unknown preset '" + name + "' (known: " + known + ")");
}

}  // namespace dpen
