#include "dpen/dynamics.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include <Eigen/Dense>

#include "dpen/rng.hpp"

namespace dpen {

namespace {

constexpr std::array<std::pair<Algorithm, const char*>, 6> kAlgorithms{{
    {Algorithm::DistributedGd, "distributed-gd"},
    {Algorithm::CentralizedGd, "centralized-gd"},
    {Algorithm::SaddlePoint, "saddle-point"},
    {Algorithm::NesterovCentral, "nesterov-central"},
    {Algorithm::NesterovDistributed, "nesterov-distributed"},
    {Algorithm::LinsolveOnly, "linsolve-only"},
}};

void require_finite(const Vector& x, const char* where) {
  if (!x.allFinite()) throw Divergence(std::string(where) + ": divergence (dt too large?)");
}

}  // namespace

std::string to_string(Algorithm a) {
  for (const auto& [alg, name] : kAlgorithms)
    if (alg == a) return name;
  return "unknown";
}

Algorithm parse_algorithm(const std::string& name) {
  for (const auto& [alg, n] : kAlgorithms)
    if (name == n) return alg;
  std::string known;
  for (const auto& [alg, n] : kAlgorithms) known += (known.empty() ? "" : ", ") + std::string(n);
  throw InvalidArgument("unknown algorithm '" + name + "' (known: " + known + ")");
}

std::vector<std::string> algorithm_names() {
  std::vector<std::string> out;
  for (const auto& entry : kAlgorithms) out.emplace_back(entry.second);
  return out;
}

bool is_distributed(Algorithm a) {
  return a == Algorithm::DistributedGd || a == Algorithm::NesterovDistributed ||
         a == Algorithm::LinsolveOnly;
}

void RunConfig::validate() const {
  penalty.validate();
  if (!(tau > 0)) throw InvalidArgument("tau must be > 0");
  if (!(dt > 0)) throw InvalidArgument("dt must be > 0");
  if (horizon < 0) throw InvalidArgument("horizon must be >= 0");
  if (!(beta >= 0)) throw InvalidArgument("beta must be >= 0");
  if (log_stride < 1) throw InvalidArgument("log stride must be >= 1");
  if (!(domain_slack >= 0)) throw InvalidArgument("domain slack must be >= 0");
}

InterconnectedState InterconnectedState::initial(const Problem& pr, const Vector& x0) {
  if (x0.size() != pr.n()) throw InvalidArgument("initial state has wrong size");
  return {x0, StackedState::zeros(pr.n(), pr.q()), StackedState::zeros(pr.n(), pr.q())};
}

Vector InterconnectedState::chi_hat(AgentId i, int q) const {
  Vector out(2 * q);
  out << mult.v.segment(Index(i) * q, q), varrho.v.segment(Index(i) * q, q);
  return out;
}

double estimate_error(const InterconnectedState& s, const Problem& pr, const Vector& at,
                      const PenaltyParams& params) {
  const Vector exact = chi(pr, at, params);
  double worst = 0.0;
  for (AgentId i = 0; i < pr.n(); ++i) worst = std::max(worst, (s.chi_hat(i, pr.q()) - exact).norm());
  return worst;
}

StepNoise::StepNoise(double beta, std::uint64_t seed, bool centered)
    : estimator(DisturbanceModel::relative(beta, seed, centered)),
      state(DisturbanceModel::relative(beta, seed ^ 0x9e3779b97f4a7c15ULL, centered)) {}

SepLinSystem multiplier_system(const Network& net, const Vector& x, const PenaltyParams& params) {
  const Problem& pr = net.problem();
  const Published pub = publish(net, x);
  SepLinSystem sys(net.graph(), pr.q());
  for (AgentId i = 0; i < net.n(); ++i) {
    LocalPieces pieces = local_Ni_bi(AgentView(net, i, x, &pub), params);
    sys.N[i] = std::move(pieces.Ni);
    sys.b[i] = std::move(pieces.bi_mult);
  }
  return sys;
}

namespace {

void set_varrho_rhs(SepLinSystem& sys, const Network& net, const Vector& x, const Published& pub,
                    const StackedState& mult, const PenaltyParams& params) {
  const int q = net.problem().q(), m = net.problem().m();
  for (AgentId i = 0; i < net.n(); ++i) {
    sys.b[i] = local_bi_varrho(AgentView(net, i, x, &pub), mult.v.segment(Index(i) * q, m), params);
  }
}

}  // namespace

InterconnectedState warm_start(const Network& net, const Vector& x, const PenaltyParams& params) {
  InterconnectedState s = InterconnectedState::initial(net.problem(), x);
  SepLinSystem sys = multiplier_system(net, x, params);
  s.mult = project_to_equilibria(sys, s.mult);
  set_varrho_rhs(sys, net, x, publish(net, x), s.mult, params);
  s.varrho = project_to_equilibria(sys, s.varrho);
  return s;
}

std::pair<double, double> estimator_residuals(const InterconnectedState& s, const Network& net,
                                              const PenaltyParams& params) {
  SepLinSystem sys = multiplier_system(net, s.x, params);
  const double mult = stacked_residual(sys, s.mult);
  set_varrho_rhs(sys, net, s.x, publish(net, s.x), s.mult, params);
  return {mult, stacked_residual(sys, s.varrho)};
}

InterconnectedState interconnected_step(const InterconnectedState& s, const Network& net,
                                        const RunConfig& cfg, StepNoise* noise,
                                        const AgentProbe* probe) {
  const Problem& pr = net.problem();
  const int n = net.n(), q = pr.q(), m = pr.m();
  const double dt = cfg.dt, h = cfg.dt / cfg.tau;
  const Published pub = publish(net, s.x);

  std::vector<AgentView> views;
  views.reserve(n);
  for (AgentId i = 0; i < n; ++i) views.emplace_back(net, i, s.x, &pub);
  if (probe != nullptr)
    for (const AgentView& view : views) (*probe)(view);

  SepLinSystem sys(net.graph(), q);
  for (AgentId i = 0; i < n; ++i) {
    LocalPieces pieces = local_Ni_bi(views[i], cfg.penalty);
    sys.N[i] = std::move(pieces.Ni);
    sys.b[i] = std::move(pieces.bi_mult);
  }

  InterconnectedState next = s;
  const StackedState mult_drift = flow_drift(sys, s.mult, net.hoods());
  next.mult.v += h * mult_drift.v;
  next.mult.y += h * mult_drift.y;

  for (AgentId i = 0; i < n; ++i) {
    sys.b[i] = local_bi_varrho(views[i], next.mult.v.segment(Index(i) * q, m), cfg.penalty);
  }
  const StackedState var_drift = flow_drift(sys, s.varrho, net.hoods());
  next.varrho.v += h * var_drift.v;
  next.varrho.y += h * var_drift.y;

  Vector grad(n);
  for (AgentId i = 0; i < n; ++i) grad(i) = local_gradient(views[i], s.chi_hat(i, q), cfg.penalty);
  next.x -= dt * grad;

  if (noise != nullptr && noise->estimator.active()) {
    const Index nq = Index(n) * q;
    Vector drift(4 * nq);
    drift << mult_drift.stacked(), var_drift.stacked();
    const Vector d = noise->estimator.next(drift);
    next.mult.v += h * d.segment(0, nq);
    next.mult.y += h * d.segment(nq, nq);
    next.varrho.v += h * d.segment(2 * nq, nq);
    next.varrho.y += h * d.segment(3 * nq, nq);
  }
  if (noise != nullptr && noise->state.active()) next.x += dt * noise->state.next(-grad);

  if (!next.all_finite()) throw Divergence("interconnected_step: divergence (dt too large?)");
  return next;
}

Vector centralized_gd_step(const Vector& x, const Problem& pr, const RunConfig& cfg) {
  Vector next = x - cfg.dt * penalty_gradient(pr, x, cfg.penalty);
  require_finite(next, "centralized_gd_step");
  return next;
}

void saddle_point_step(Vector& x, MultiplierPair& duals, const Problem& pr, const RunConfig& cfg) {
  const ConstraintJacobians jac = constraint_jacobians(pr, x);
  const ConstraintValues cv = eval_constraints(pr, x);
  Vector grad = pr.objective_gradient(x);
  grad.noalias() += jac.dg * duals.lambda + jac.dh * duals.mu;
  x -= cfg.dt * grad;
  duals.lambda = (duals.lambda + cfg.dt * cv.g).cwiseMax(0.0);
  duals.mu += cfg.dt * cv.h;
  require_finite(x, "saddle_point_step");
  require_finite(duals.lambda, "saddle_point_step");
  require_finite(duals.mu, "saddle_point_step");
}

NesterovState nesterov_momentum(const NesterovState& s, Vector x_next) {
  const double beta = double(s.k - 1) / double(s.k + 2);
  NesterovState out;
  out.y = x_next + beta * (x_next - s.x);
  out.x = std::move(x_next);
  out.k = s.k + 1;
  require_finite(out.y, "nesterov_step");
  return out;
}

NesterovState nesterov_step(const NesterovState& s, const std::function<Vector(const Vector&)>& grad,
                            double dt) {
  return nesterov_momentum(s, s.y - dt * grad(s.y));
}

LogRow log_row(const Problem& pr, const Vector& x, double t, const PenaltyParams& params) {
  LogRow row;
  row.t = t;
  row.f = pr.reported_objective(x);
  const ConstraintValues cv = eval_constraints(pr, x);
  row.max_g = pr.m() > 0 ? cv.g.maxCoeff() : -std::numeric_limits<double>::infinity();
  row.h_inf = pr.p() > 0 ? cv.h.lpNorm<Eigen::Infinity>() : 0.0;
  try {
    const PenaltyEval eval = evaluate_penalty(pr, x, params);
    row.f_eps = eval.value;
    row.grad_norm = eval.gradient.norm();
  } catch (const SingularSystem&) {
    row.f_eps = row.grad_norm = std::numeric_limits<double>::quiet_NaN();
  }
  row.in_domain = pr.domain().contains(x);
  return row;
}

TrajectoryLog run_experiment(const RunConfig& cfg, const Problem& pr, const Graph& g,
                             const Vector& x0, const AgentProbe* probe) {
  cfg.validate();
  if (x0.size() != pr.n()) throw InvalidArgument("x0 has " + std::to_string(x0.size()) +
                                                 " entries, expected " + std::to_string(pr.n()));
  const Network net(pr, g);
  const Algorithm alg = cfg.algorithm;
  StepNoise noise(cfg.beta, cfg.seed, cfg.disturbance_centered);

  InterconnectedState state = InterconnectedState::initial(pr, x0);
  NesterovState nest{x0, x0, 1};
  MultiplierPair duals{Vector::Zero(pr.m()), Vector::Zero(pr.p())};

  TrajectoryLog log;
  auto current_x = [&]() -> const Vector& {
    return alg == Algorithm::NesterovCentral || alg == Algorithm::NesterovDistributed ? nest.x
                                                                                       : state.x;
  };
  auto record = [&](long k) {
    const Vector& x = current_x();
    LogRow row = log_row(pr, x, double(k) * cfg.dt, cfg.penalty);
    if (alg == Algorithm::SaddlePoint) {
      row.est_err = std::numeric_limits<double>::quiet_NaN();
    } else if (is_distributed(alg)) {
      // The estimator of the Nesterov variant tracks chi at y, where it is evaluated.
      const Vector& at = alg == Algorithm::NesterovDistributed ? nest.y : state.x;
      try {
        row.est_err = estimate_error(state, pr, at, cfg.penalty);
      } catch (const SingularSystem&) {
        row.est_err = std::numeric_limits<double>::quiet_NaN();
      }
    }
    log.rows.push_back(row);
  };
  auto track = [&](long k) -> bool {
    const Vector& x = current_x();
    if (pr.m() > 0) log.max_g_seen = std::max(log.max_g_seen, eval_constraints(pr, x).g.maxCoeff());
    if (!std::isfinite(pr.objective_value(x))) {
      log.halted = true;
      log.halt_reason = "objective not finite at step " + std::to_string(k);
      return false;
    }
    if (!pr.domain().contains(x)) ++log.steps_outside_domain;
    if (!pr.domain().contains(x, cfg.domain_slack)) {
      log.halted = true;
      log.halt_reason = "x left D inflated by " + std::to_string(cfg.domain_slack) +
                        " at step " + std::to_string(k);
      return false;
    }
    return true;
  };

  record(0);
  bool running = track(0);
  long k = 0;
  while (running && k < cfg.horizon) {
    switch (alg) {
      case Algorithm::DistributedGd:
        state = interconnected_step(state, net, cfg, &noise, probe);
        break;
      case Algorithm::LinsolveOnly: {
        const Vector x = state.x;
        state = interconnected_step(state, net, cfg, &noise, probe);
        state.x = x;
        break;
      }
      case Algorithm::CentralizedGd:
        state.x = centralized_gd_step(state.x, pr, cfg);
        if (noise.state.active()) {
          state.x += cfg.dt * noise.state.next(penalty_gradient(pr, state.x, cfg.penalty));
        }
        break;
      case Algorithm::SaddlePoint:
        saddle_point_step(state.x, duals, pr, cfg);
        break;
      case Algorithm::NesterovCentral:
        nest = nesterov_step(nest, [&](const Vector& y) { return penalty_gradient(pr, y, cfg.penalty); },
                             cfg.dt);
        break;
      case Algorithm::NesterovDistributed: {
        state.x = nest.y;
        state = interconnected_step(state, net, cfg, &noise, probe);
        nest = nesterov_momentum(nest, state.x);
        break;
      }
    }
    ++k;
    running = track(k);
    if (k % cfg.log_stride == 0 || k == cfg.horizon || !running) record(k);
  }
  log.steps = k;
  log.x_final = current_x();
  if (is_distributed(alg)) log.final_state = state;
  return log;
}

LocalityAuditReport locality_audit(const RunConfig& cfg, const Problem& pr, const Graph& g,
                                   const Vector& x0, const AgentProbe* probe) {
  if (!is_distributed(cfg.algorithm)) {
    throw InvalidArgument("locality audit not applicable to " + to_string(cfg.algorithm));
  }
  LocalityAuditReport report;
  try {
    run_experiment(cfg, pr, g, x0, probe);
  } catch (const LocalityViolation& e) {
    report.passed = false;
    report.agent = e.agent();
    report.source = e.source();
    report.message = e.what();
  }
  return report;
}

double eta_alpha(double alpha, double L, double K) {
  return (alpha * L + K) * (alpha * L + K) / (4.0 * alpha) + L * K;
}

ConvergenceDiagnostics convergence_diagnostics(const Problem& pr, const Graph& g, const RunConfig& cfg,
                                         const std::vector<Vector>& samples,
                                         const ConvergenceOptions& options) {
  cfg.validate();
  if (samples.empty()) throw InvalidArgument("convergence_diagnostics: no sample points");
  const Network net(pr, g);
  const PenaltyParams& params = cfg.penalty;
  Rng rng(options.seed);
  ConvergenceDiagnostics out;

  for (std::size_t s = 0; s < samples.size(); ++s) {
    const Vector& x = samples[s];
    const Vector exact = chi(pr, x, params);

    double L = 0.0;
    for (int d = 0; d < options.lipschitz_draws; ++d) {
      const Vector a = exact + rng.uniform_vector(exact.size(), -1, 1);
      const Vector b = a + 1e-3 * rng.unit_vector(exact.size());
      const double change =
          (gradient_with_estimates(pr, x, params, a) - gradient_with_estimates(pr, x, params, b)).norm();
      L = std::max(L, change / (a - b).norm());
    }

    Matrix J(exact.size(), x.size());
    for (Index k = 0; k < x.size(); ++k) {
      Vector plus = x, minus = x;
      plus(k) += options.fd_step;
      minus(k) -= options.fd_step;
      J.col(k) = (chi(pr, plus, params) - chi(pr, minus, params)) / (2 * options.fd_step);
    }
    const double K = J.size() == 0 ? 0.0 : Eigen::JacobiSVD<Matrix>(J).singularValues()(0);

    out.lipschitz.push_back(L);
    out.chi_jacobian_norm.push_back(K);
    if (int(s) < options.lambda2_points) out.lambda2.push_back(rate_bound(multiplier_system(net, x, params)));
  }

  out.L_bar = *std::max_element(out.lipschitz.begin(), out.lipschitz.end());
  out.K_bar = *std::max_element(out.chi_jacobian_norm.begin(), out.chi_jacobian_norm.end());
  out.alpha_star = out.L_bar > 0 ? out.K_bar / out.L_bar : 0.0;
  out.eta_bar = 2.0 * out.L_bar * out.K_bar;
  for (std::size_t s = 0; s < samples.size(); ++s) {
    out.eta_samples.push_back(out.alpha_star > 0
                                  ? eta_alpha(out.alpha_star, out.lipschitz[s], out.chi_jacobian_norm[s])
                                  : 0.0);
  }
  out.lambda_min = out.lambda2.empty()
                       ? std::numeric_limits<double>::quiet_NaN()
                       : *std::min_element(out.lambda2.begin(), out.lambda2.end());
  out.tau_star = out.eta_bar > 0 ? out.lambda_min / out.eta_bar
                                 : std::numeric_limits<double>::infinity();
  out.condition_ratio = cfg.tau / out.tau_star;
  return out;
}

std::vector<Vector> sample_domain(const Problem& pr, int count, std::uint64_t seed) {
  Rng rng(seed);
  const DomainBox& D = pr.domain();
  std::vector<Vector> out;
  out.reserve(count);
  while (int(out.size()) < count) {
    Vector x(pr.n());
    if (D.kind == DomainBox::Kind::Annulus) {
      x = rng.uniform_vector(pr.n(), D.inner, D.outer);
    } else {
      for (Index k = 0; k < x.size(); ++k) x(k) = rng.uniform(D.lower(k), D.upper(k));
    }
    if (D.contains(x)) out.push_back(std::move(x));
  }
  return out;
}

}  // namespace dpen
