#include "dpen/linsolve.hpp"

#include <cmath>

#include <Eigen/Dense>

namespace dpen {

SepLinSystem::SepLinSystem(const Graph& g, int block_dim)
    : q(block_dim),
      N(g.n(), Matrix::Zero(block_dim, block_dim)),
      b(g.n(), Vector::Zero(block_dim)),
      graph(&g) {}

void SepLinSystem::validate() const {
  if (q < 0) throw InvalidArgument("SepLinSystem: negative block dimension");
  if (Index(N.size()) != n() || Index(b.size()) != n()) {
    throw InvalidArgument("SepLinSystem: need one (N_i, b_i) pair per agent");
  }
  for (int i = 0; i < n(); ++i) {
    if (N[i].rows() != q || N[i].cols() != q || b[i].size() != q) {
      throw InvalidArgument("SepLinSystem: block of agent " + std::to_string(i) +
                            " has wrong dimension");
    }
  }
}

Vector StackedState::stacked() const {
  Vector z(v.size() + y.size());
  z << v, y;
  return z;
}

StackedState StackedState::from_stacked(const Vector& z) {
  const Index half = z.size() / 2;
  return {z.head(half), z.tail(half)};
}

StackedSystem assemble_P(const SepLinSystem& sys) {
  sys.validate();
  const Index n = sys.n(), q = sys.q, nq = n * q;
  const Matrix L = laplacian(*sys.graph);
  Matrix LI = Matrix::Zero(nq, nq);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j)
      if (L(i, j) != 0) LI.block(i * q, j * q, q, q) = L(i, j) * Matrix::Identity(q, q);

  StackedSystem out{Matrix::Zero(2 * nq, 2 * nq), Vector::Zero(2 * nq)};
  for (Index i = 0; i < n; ++i) {
    out.P.block(i * q, i * q, q, q) = sys.N[i];
    out.q_vec.segment(i * q, q) = sys.b[i];
  }
  out.P.topRightCorner(nq, nq) = -LI;
  out.P.bottomLeftCorner(nq, nq) = LI;
  return out;
}

Vector solve_dense_oracle(const SepLinSystem& sys) {
  sys.validate();
  Matrix total = Matrix::Zero(sys.q, sys.q);
  Vector rhs = Vector::Zero(sys.q);
  for (int i = 0; i < sys.n(); ++i) {
    total += sys.N[i];
    rhs += sys.b[i];
  }
  Eigen::FullPivLU<Matrix> lu(total);
  if (!lu.isInvertible()) throw SingularSystem("solve_dense_oracle: aggregate matrix is singular");
  return lu.solve(rhs);
}

namespace {

/// (L kron I_q) applied to a stacked vector, neighbors in ascending order.
Vector laplacian_apply(const Graph& g, int q, const Vector& w) {
  Vector out = Vector::Zero(w.size());
  for (AgentId k = 0; k < g.n(); ++k) {
    auto acc = out.segment(Index(k) * q, q);
    for (AgentId j : g.neighbors(k)) acc += w.segment(Index(k) * q, q) - w.segment(Index(j) * q, q);
  }
  return out;
}

/// Shared per-agent formula. `v`, `y`, `r` are accessors (j -> q-vector expression).
template <typename VAt, typename YAt, typename RAt>
AgentDerivative agent_formula(const Matrix& Ni, const Graph& g, AgentId i, int q, VAt v, YAt y,
                              RAt r) {
  auto lap = [&](auto at, AgentId k) {
    Vector acc = Vector::Zero(q);
    for (AgentId j : g.neighbors(k)) acc += at(k) - at(j);
    return acc;
  };

  const Vector vL_i = lap(v, i);
  const Vector yL_i = lap(y, i);
  const Vector r_i = r(i);

  Vector v_dot = -(Ni.transpose() * (r_i - yL_i));
  Vector sum_vL = Vector::Zero(q);
  Vector sum_r = Vector::Zero(q);
  Vector sum_yL = Vector::Zero(q);
  for (AgentId j : g.neighbors(i)) {
    sum_vL += vL_i - lap(v, j);
    sum_r += r_i - r(j);
    sum_yL += yL_i - lap(y, j);
  }
  v_dot -= sum_vL;
  return {std::move(v_dot), sum_r - sum_yL};
}

}  // namespace

Vector apply_P(const SepLinSystem& sys, const Vector& z) {
  const Index nq = Index(sys.n()) * sys.q;
  const StackedState s{z.head(nq), z.tail(nq)};
  Vector out(2 * nq);
  out.head(nq) = -laplacian_apply(*sys.graph, sys.q, s.y);
  for (int i = 0; i < sys.n(); ++i) {
    out.segment(Index(i) * sys.q, sys.q) += sys.N[i] * s.v.segment(Index(i) * sys.q, sys.q);
  }
  out.tail(nq) = laplacian_apply(*sys.graph, sys.q, s.v);
  return out;
}

Vector apply_PT(const SepLinSystem& sys, const Vector& w) {
  const Index nq = Index(sys.n()) * sys.q;
  const Vector a = w.head(nq), c = w.tail(nq);
  Vector out(2 * nq);
  out.head(nq) = laplacian_apply(*sys.graph, sys.q, c);
  for (int i = 0; i < sys.n(); ++i) {
    out.segment(Index(i) * sys.q, sys.q) +=
        sys.N[i].transpose() * a.segment(Index(i) * sys.q, sys.q);
  }
  out.tail(nq) = -laplacian_apply(*sys.graph, sys.q, a);
  return out;
}

double stacked_residual(const SepLinSystem& sys, const StackedState& z) {
  Vector r = apply_P(sys, z.stacked());
  r.head(Index(sys.n()) * sys.q) -= [&] {
    Vector b(Index(sys.n()) * sys.q);
    for (int i = 0; i < sys.n(); ++i) b.segment(Index(i) * sys.q, sys.q) = sys.b[i];
    return b;
  }();
  return r.norm();
}

Vector agent_residuals(const SepLinSystem& sys, const StackedState& z) {
  Vector out(Index(sys.n()) * sys.q);
  for (int i = 0; i < sys.n(); ++i) {
    const Index off = Index(i) * sys.q;
    out.segment(off, sys.q) = sys.N[i] * z.v.segment(off, sys.q) - sys.b[i];
  }
  return out;
}

AgentDerivative agent_update(const SepLinSystem& sys, const LinearRoundView& view) {
  const AgentId i = view.owner();
  return agent_formula(
      sys.N[i], *sys.graph, i, sys.q, [&](AgentId j) { return view.v(j); },
      [&](AgentId j) { return view.y(j); }, [&](AgentId j) { return view.residual(j); });
}

StackedState flow_drift(const SepLinSystem& sys, const StackedState& z,
                        const std::vector<Neighborhood>& hoods) {
  const Vector residuals = agent_residuals(sys, z);
  StackedState out{Vector(z.v.size()), Vector(z.y.size())};
  for (int i = 0; i < sys.n(); ++i) {
    const LinearRoundView view(hoods[i], sys, z, residuals);
    AgentDerivative d = agent_update(sys, view);
    out.v.segment(Index(i) * sys.q, sys.q) = d.v_dot;
    out.y.segment(Index(i) * sys.q, sys.q) = d.y_dot;
  }
  return out;
}

StackedState flow_drift(const SepLinSystem& sys, const StackedState& z) {
  return flow_drift(sys, z, two_hop_neighborhoods(*sys.graph));
}

Vector DisturbanceSource::next(const Vector& drift) {
  if (!active()) return Vector::Zero(drift.size());
  switch (model_.kind) {
    case DisturbanceModel::Kind::FixedNorm:
      if (age_ == 0 || held_.size() != drift.size()) {
        held_ = model_.magnitude * rng_.unit_vector(drift.size(), model_.centered);
      }
      age_ = (age_ + 1) % std::max(1, model_.hold_steps);
      return held_;
    case DisturbanceModel::Kind::Relative:
      return model_.magnitude * drift.norm() * rng_.unit_vector(drift.size(), model_.centered);
    case DisturbanceModel::Kind::None:
      break;
  }
  return Vector::Zero(drift.size());
}

StackedState flow_step(const SepLinSystem& sys, const StackedState& z, double dt,
                       const Vector* disturbance) {
  if (!(dt > 0)) throw InvalidArgument("flow_step: dt must be positive");
  const StackedState drift = flow_drift(sys, z);
  StackedState next{z.v + dt * drift.v, z.y + dt * drift.y};
  if (disturbance != nullptr) {
    const Index nq = z.v.size();
    next.v += dt * disturbance->head(nq);
    next.y += dt * disturbance->tail(nq);
  }
  if (!next.all_finite()) throw Divergence("flow_step: divergence (dt too large?)");
  return next;
}

double lambda_max_PtP(const SepLinSystem& sys, int iterations) {
  const Index dim = 2 * Index(sys.n()) * sys.q;
  if (dim == 0) return 0.0;
  Rng rng(0x5eed);
  Vector w = rng.unit_vector(dim);
  double estimate = 0.0;
  for (int it = 0; it < iterations; ++it) {
    Vector next = apply_PT(sys, apply_P(sys, w));
    const double norm = next.norm();
    if (norm == 0.0) return 0.0;
    const double previous = estimate;
    estimate = w.dot(next);
    w = next / norm;
    if (it > 10 && std::abs(estimate - previous) <= 1e-10 * estimate) break;
  }
  return estimate;
}

double stable_step(const SepLinSystem& sys) {
  const double top = lambda_max_PtP(sys);
  return top > 0 ? 0.9 / top : 1.0;
}

double rate_bound(const SepLinSystem& sys) {
  const StackedSystem s = assemble_P(sys);
  return lambda2(Matrix(s.P.transpose() * s.P));
}

StackedState project_to_equilibria(const SepLinSystem& sys, const StackedState& z) {
  const StackedSystem s = assemble_P(sys);
  const Vector zs = z.stacked();
  Eigen::CompleteOrthogonalDecomposition<Matrix> cod(s.P);
  cod.setThreshold(1e-10);
  return StackedState::from_stacked(zs - cod.solve(Vector(s.P * zs - s.q_vec)));
}

double equilibrium_distance(const SepLinSystem& sys, const StackedState& z) {
  return (z.stacked() - project_to_equilibria(sys, z).stacked()).norm();
}

double consensus_error(const StackedState& z, int q) {
  if (q == 0 || z.v.size() == 0) return 0.0;
  const Index n = z.v.size() / q;
  const Eigen::Map<const Matrix> blocks(z.v.data(), q, n);
  const Vector mean = blocks.rowwise().mean();
  return (blocks.colwise() - mean).cwiseAbs().maxCoeff();
}

double fit_decay_rate(const std::vector<double>& values, double dt, double fraction) {
  const std::size_t total = values.size();
  const std::size_t start = total - static_cast<std::size_t>(fraction * double(total));
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  double count = 0;
  for (std::size_t k = start; k < total; ++k) {
    if (!(values[k] > 0)) continue;
    const double t = double(k), ly = std::log(values[k]);
    sx += t;
    sy += ly;
    sxx += t * t;
    sxy += t * ly;
    count += 1;
  }
  if (count < 2) return 0.0;
  const double slope = (count * sxy - sx * sy) / (count * sxx - sx * sx);
  return -slope / dt;
}

SolveReport run_to_tolerance(const SepLinSystem& sys, const StackedState& z0,
                             const SolveOptions& options) {
  sys.validate();
  const double cap = stable_step(sys);
  const double dt = options.dt > 0 ? std::min(options.dt, cap) : cap;
  const auto hoods = two_hop_neighborhoods(*sys.graph);
  DisturbanceSource disturbance(options.disturbance);

  SolveReport report;
  report.dt = dt;
  StackedState z = z0;
  std::vector<double> history;
  double res = stacked_residual(sys, z);
  while (report.steps < options.max_steps) {
    if (!disturbance.active() && res <= options.tol) {
      report.converged = true;
      break;
    }
    const StackedState drift = flow_drift(sys, z, hoods);
    z.v += dt * drift.v;
    z.y += dt * drift.y;
    if (disturbance.active()) {
      const Vector d = disturbance.next(drift.stacked());
      z.v += dt * d.head(z.v.size());
      z.y += dt * d.tail(z.y.size());
    }
    if (!z.all_finite()) throw Divergence("run_to_tolerance: divergence (dt too large?)");
    ++report.steps;
    res = stacked_residual(sys, z);
    history.push_back(res);
  }
  if (!report.converged && !disturbance.active() && res <= options.tol) report.converged = true;

  const int n = sys.n(), q = sys.q;
  const Eigen::Map<const Matrix> blocks(z.v.data(), q, n);
  report.solution = n > 0 ? Vector(blocks.rowwise().mean()) : Vector::Zero(q);
  Matrix total = Matrix::Zero(q, q);
  Vector rhs = Vector::Zero(q);
  for (int i = 0; i < n; ++i) {
    total += sys.N[i];
    rhs += sys.b[i];
  }
  report.residual = (total * report.solution - rhs).norm();
  report.stacked_residual = res;
  report.consensus_error = consensus_error(z, q);
  report.fitted_rate = fit_decay_rate(history, dt);
  report.rate_bound = rate_bound(sys);
  report.final_state = std::move(z);
  if (options.keep_history) report.history = std::move(history);
  return report;
}

}  // namespace dpen
