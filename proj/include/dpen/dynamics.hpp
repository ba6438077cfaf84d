#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "dpen/distgrad.hpp"
#include "dpen/linsolve.hpp"
#include "dpen/penalty.hpp"

namespace dpen {

enum class Algorithm {
  DistributedGd,
  CentralizedGd,
  SaddlePoint,
  NesterovCentral,
  NesterovDistributed,
  LinsolveOnly,
};

std::string to_string(Algorithm a);
/// Accepts the dashed names used in configs ("distributed-gd", ...).
Algorithm parse_algorithm(const std::string& name);
std::vector<std::string> algorithm_names();
/// True for the algorithms that run the per-agent estimator.
bool is_distributed(Algorithm a);

struct RunConfig {
  Algorithm algorithm = Algorithm::DistributedGd;
  PenaltyParams penalty;
  /// Timescale of the estimator: tau * Upsilon' = psi_est.
  double tau = 1.0;
  double dt = 1e-3;
  long horizon = 1000;
  /// Relative disturbance magnitude; 0 disables.
  double beta = 0.0;
  /// Centered ([-0.5, 0.5)) or one-sided ([0, 1)) entries for the disturbance direction.
  bool disturbance_centered = true;
  std::uint64_t seed = 1;
  long log_stride = 1;
  /// The run halts once x leaves D inflated by this relative margin.
  double domain_slack = 0.1;

  void validate() const;
};

/// Decision state plus the per-agent estimator of the two cascaded linear systems:
/// N(x) (lambda; mu) = -[dg'; dh'] grad f and N(x) varrho = [g + Y y; h].
/// Each agent holds (v_i, y_i) for both, 4(m+p) numbers.
struct InterconnectedState {
  Vector x;
  StackedState mult;
  StackedState varrho;

  static InterconnectedState initial(const Problem& pr, const Vector& x0);
  /// Agent i's chi estimate (lambda; mu; varrho), read from its own v blocks.
  Vector chi_hat(AgentId i, int q) const;
  bool all_finite() const { return x.allFinite() && mult.all_finite() && varrho.all_finite(); }
};

/// max_i ||chi_hat_i - chi(at)||.
double estimate_error(const InterconnectedState& s, const Problem& pr, const Vector& at,
                      const PenaltyParams& params);

/// Called once per agent per round with that agent's view; used by the locality audit.
using AgentProbe = std::function<void(const AgentView&)>;

/// Relative disturbances for the estimator and the decision variable, one stream each.
struct StepNoise {
  StepNoise(double beta, std::uint64_t seed, bool centered = true);
  DisturbanceSource estimator;
  DisturbanceSource state;
};

/// The multiplier system at x with agent i holding (N_i, bi_mult), each computed
/// from the agent's own view.
SepLinSystem multiplier_system(const Network& net, const Vector& x, const PenaltyParams& params);

/// State at x with both estimator systems moved to their equilibria (minimum-norm
/// correction from zero), so every agent holds chi(x). Dense; meant for small networks.
InterconnectedState warm_start(const Network& net, const Vector& x, const PenaltyParams& params);

/// ||P z - q|| of the multiplier and varrho systems at s.x (varrho right-hand side from
/// each agent's own lambda estimate).
std::pair<double, double> estimator_residuals(const InterconnectedState& s, const Network& net,
                                              const PenaltyParams& params);

/// One Euler round of the interconnected dynamics. The estimator advances by
/// dt/tau times its drift (multiplier system first, then the varrho system with
/// the fresh lambda estimates); x moves along minus the local gradients computed
/// from the estimates held at the start of the round.
InterconnectedState interconnected_step(const InterconnectedState& s, const Network& net,
                                        const RunConfig& cfg, StepNoise* noise = nullptr,
                                        const AgentProbe* probe = nullptr);

Vector centralized_gd_step(const Vector& x, const Problem& pr, const RunConfig& cfg);

/// Primal descent / dual ascent on the Lagrangian, lambda clamped at zero.
void saddle_point_step(Vector& x, MultiplierPair& duals, const Problem& pr, const RunConfig& cfg);

struct NesterovState {
  Vector x;  // x_k
  Vector y;  // y_k, where the gradient is taken
  long k = 1;
};

/// x_{k+1} = y_k - dt grad(y_k); y_{k+1} = x_{k+1} + (k-1)/(k+2) (x_{k+1} - x_k).
NesterovState nesterov_step(const NesterovState& s, const std::function<Vector(const Vector&)>& grad,
                            double dt);
/// Momentum half of the step given an already computed x_{k+1}.
NesterovState nesterov_momentum(const NesterovState& s, Vector x_next);

struct LogRow {
  double t = 0;
  double f = 0;
  double f_eps = 0;
  double grad_norm = 0;
  double max_g = 0;
  double h_inf = 0;
  /// NaN for saddle-point, 0 for the centralized algorithms.
  double est_err = 0;
  bool in_domain = true;
};

struct TrajectoryLog {
  std::vector<LogRow> rows;
  Vector x_final;
  /// Estimator state at the end, for the distributed algorithms.
  std::optional<InterconnectedState> final_state;
  long steps = 0;
  long steps_outside_domain = 0;
  double max_g_seen = -std::numeric_limits<double>::infinity();
  bool halted = false;
  std::string halt_reason;
};

/// Summary row at x; est_err is filled by the caller.
LogRow log_row(const Problem& pr, const Vector& x, double t, const PenaltyParams& params);

/// Runs cfg.algorithm from x0 for cfg.horizon steps, logging every cfg.log_stride
/// steps and always the last one. Throws Divergence on non-finite states.
TrajectoryLog run_experiment(const RunConfig& cfg, const Problem& pr, const Graph& g,
                             const Vector& x0, const AgentProbe* probe = nullptr);

struct LocalityAuditReport {
  bool passed = true;
  AgentId agent = -1;
  AgentId source = -1;
  std::string message;
};

/// Runs the experiment with every agent read checked; the first out-of-reach read
/// fails the audit. Throws InvalidArgument for centralized algorithms.
LocalityAuditReport locality_audit(const RunConfig& cfg, const Problem& pr, const Graph& g,
                                   const Vector& x0, const AgentProbe* probe = nullptr);

struct ConvergenceOptions {
  double fd_step = 1e-5;
  /// Perturbation pairs per point for the Lipschitz estimate of chi -> gradient.
  int lipschitz_draws = 20;
  /// Points (from the front of the sample) where lambda_2(P'P) is computed densely.
  int lambda2_points = 100;
  std::uint64_t seed = 7;
};

struct ConvergenceDiagnostics {
  std::vector<double> lipschitz;   // L_chi(x) per sample
  std::vector<double> chi_jacobian_norm;  // ||grad chi(x)|| per sample
  std::vector<double> lambda2;     // lambda_2(P'P) of the multiplier system
  double L_bar = 0;
  double K_bar = 0;
  double alpha_star = 0;
  /// eta at alpha_star with the sampled maxima: 2 L_bar K_bar.
  double eta_bar = 0;
  double lambda_min = 0;
  double tau_star = 0;
  /// cfg.tau / tau_star; below 1 means the sampled condition holds.
  double condition_ratio = 0;
  std::vector<double> eta_samples;  // eta_alpha_star(x) per sample
};

/// eta_alpha = (alpha L + K)^2 / (4 alpha) + L K.
double eta_alpha(double alpha, double L, double K);

/// Sampled estimates of the constants in the timescale condition. These are lower
/// bounds on the analytical maxima.
ConvergenceDiagnostics convergence_diagnostics(const Problem& pr, const Graph& g, const RunConfig& cfg,
                                         const std::vector<Vector>& samples,
                                         const ConvergenceOptions& options = {});

/// Seeded points in D (annulus presets sample the positive orthant part).
std::vector<Vector> sample_domain(const Problem& pr, int count, std::uint64_t seed);

}  // namespace dpen
