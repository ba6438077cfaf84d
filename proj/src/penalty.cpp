#include "dpen/penalty.hpp"

#include <cmath>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

namespace dpen {

void PenaltyParams::validate() const {
  if (!(epsilon > 0)) throw InvalidArgument("penalty: epsilon must be positive");
  if (gamma == 0 || !std::isfinite(gamma)) throw InvalidArgument("penalty: gamma must be nonzero");
}

namespace {

/// Constraint values and stacked Jacobian A = [dg, dh] (n x q) at x.
struct Linearization {
  ConstraintValues values;
  Matrix A;
  Vector grad_f;

  Linearization(const Problem& pr, const Vector& x)
      : values(eval_constraints(pr, x)), grad_f(pr.objective_gradient(x)) {
    const ConstraintJacobians jac = constraint_jacobians(pr, x);
    A.resize(pr.n(), pr.q());
    A << jac.dg, jac.dh;
    if (!grad_f.allFinite()) throw EvaluationError("objective gradient is not finite");
  }

  auto dg(int m) const { return A.leftCols(m); }
  auto dh(int p) const { return A.rightCols(p); }
};

Matrix assemble_N_from(const Linearization& lin, int m, double gamma) {
  Matrix N = lin.A.transpose() * lin.A;
  N.diagonal().head(m) += (gamma * lin.values.g).array().square().matrix();
  return N;
}

/// Factorization of N(x) that refuses (near-)singular matrices.
class NSolver {
 public:
  explicit NSolver(const Matrix& N) : llt_(N) {
    if (N.rows() == 0) return;
    Eigen::SelfAdjointEigenSolver<Matrix> eig(N, Eigen::EigenvaluesOnly);
    if (llt_.info() != Eigen::Success || eig.eigenvalues()(0) <= kSingularNTol) {
      throw SingularSystem("N(x) singular: LICQ likely violated at x (min eigenvalue " +
                           std::to_string(eig.eigenvalues()(0)) + ")");
    }
  }
  Vector solve(const Vector& rhs) const { return rhs.size() == 0 ? rhs : Vector(llt_.solve(rhs)); }

 private:
  Eigen::LLT<Matrix> llt_;
};

MultiplierPair split(const Vector& stacked, int m, int p) {
  return {stacked.head(m), stacked.segment(m, p)};
}

/// Hessian of the Lagrangian with the given multipliers frozen.
Matrix lagrangian_hessian(const Problem& pr, const Vector& x, const Vector& lambda,
                          const Vector& mu) {
  Matrix H = pr.objective_hessian_diagonal(x).asDiagonal();
  for (int c = 0; c < pr.q(); ++c) {
    const ConstraintSpec& spec = pr.constraint(c);
    if (spec.linear) continue;
    const double weight = c < pr.m() ? lambda(c) : mu(c - pr.m());
    H += weight * constraint_hessian(spec, x, pr.n());
  }
  return H;
}

RSMatrices rs_from(const Problem& pr, const Vector& x, const Linearization& lin,
                   const PenaltyParams& params, const Vector& lambda, const Vector& mu) {
  const int m = pr.m(), p = pr.p(), n = pr.n();
  const Matrix H = lagrangian_hessian(pr, x, lambda, mu);
  Vector grad_L = lin.grad_f;
  grad_L.noalias() += lin.dg(m) * lambda + lin.dh(p) * mu;

  Matrix RS = lin.A.transpose() * H;  // q x n
  for (int c = 0; c < pr.q(); ++c) {
    const ConstraintSpec& spec = pr.constraint(c);
    if (!spec.linear) RS.row(c) += grad_L.transpose() * constraint_hessian(spec, x, n);
  }
  const double g2 = 2.0 * params.gamma * params.gamma;
  for (int j = 0; j < m; ++j) RS.row(j) += g2 * lambda(j) * lin.values.g(j) * lin.A.col(j).transpose();
  return {RS.topRows(m), RS.bottomRows(p)};
}

}  // namespace

Vector shifted_slack_from_values(const Vector& g, const Vector& lambda, double epsilon) {
  return (-(g + 0.5 * epsilon * lambda)).cwiseMax(0.0);
}

Matrix assemble_N(const Problem& pr, const Vector& x, const PenaltyParams& params) {
  params.validate();
  const Linearization lin(pr, x);
  Matrix N = assemble_N_from(lin, pr.m(), params.gamma);
  NSolver check(N);
  return N;
}

MultiplierPair multipliers(const Problem& pr, const Vector& x, const PenaltyParams& params) {
  params.validate();
  const Linearization lin(pr, x);
  const NSolver solver(assemble_N_from(lin, pr.m(), params.gamma));
  return split(solver.solve(-(lin.A.transpose() * lin.grad_f)), pr.m(), pr.p());
}

Vector shifted_slack(const Problem& pr, const Vector& x, const Vector& lambda,
                     const PenaltyParams& params) {
  return shifted_slack_from_values(eval_constraints(pr, x).g, lambda, params.epsilon);
}

double penalty_value(const Problem& pr, const Vector& x, const PenaltyParams& params) {
  return evaluate_penalty(pr, x, params).value;
}

RSMatrices rs_matrices(const Problem& pr, const Vector& x, const PenaltyParams& params,
                       const MultiplierPair& mult) {
  params.validate();
  const Linearization lin(pr, x);
  return rs_from(pr, x, lin, params, mult.lambda, mult.mu);
}

Vector varrho(const Problem& pr, const Vector& x, const PenaltyParams& params,
              const MultiplierPair& mult) {
  params.validate();
  const Linearization lin(pr, x);
  const NSolver solver(assemble_N_from(lin, pr.m(), params.gamma));
  Vector rhs(pr.q());
  rhs << lin.values.g + shifted_slack_from_values(lin.values.g, mult.lambda, params.epsilon),
      lin.values.h;
  return solver.solve(rhs);
}

PenaltyEval evaluate_penalty(const Problem& pr, const Vector& x, const PenaltyParams& params) {
  params.validate();
  const int m = pr.m(), p = pr.p();
  const Linearization lin(pr, x);
  const NSolver solver(assemble_N_from(lin, m, params.gamma));

  PenaltyEval out;
  out.multipliers = split(solver.solve(-(lin.A.transpose() * lin.grad_f)), m, p);
  const Vector& lambda = out.multipliers.lambda;
  const Vector& mu = out.multipliers.mu;
  const Vector& g = lin.values.g;
  const Vector& h = lin.values.h;
  out.shifted_slack_sq = shifted_slack_from_values(g, lambda, params.epsilon);
  const Vector w = g + out.shifted_slack_sq;

  const double inv_eps = 1.0 / params.epsilon;
  out.value = pr.objective_value(x) + lambda.dot(w) + mu.dot(h) + inv_eps * w.squaredNorm() +
              inv_eps * h.squaredNorm();

  Vector rhs(pr.q());
  rhs << w, h;
  out.varrho = solver.solve(rhs);

  const RSMatrices rs = rs_from(pr, x, lin, params, lambda, mu);
  // rho_i = -varrho' (r_i; s_i), i.e. rho = -[R; S]' varrho.
  Vector rho = -(rs.R.transpose() * out.varrho.head(m));
  rho.noalias() -= rs.S.transpose() * out.varrho.tail(p);

  out.gradient = lin.grad_f;
  out.gradient.noalias() += lin.dg(m) * (lambda + 2.0 * inv_eps * w);
  out.gradient.noalias() += lin.dh(p) * (mu + 2.0 * inv_eps * h);
  out.gradient += rho;
  return out;
}

Vector penalty_gradient(const Problem& pr, const Vector& x, const PenaltyParams& params) {
  return evaluate_penalty(pr, x, params).gradient;
}

Vector chi(const Problem& pr, const Vector& x, const PenaltyParams& params) {
  const PenaltyEval eval = evaluate_penalty(pr, x, params);
  Vector out(2 * pr.q());
  out << eval.multipliers.lambda, eval.multipliers.mu, eval.varrho;
  return out;
}

Vector gradient_with_estimates(const Problem& pr, const Vector& x, const PenaltyParams& params,
                               const Vector& chi_hat) {
  params.validate();
  const int m = pr.m(), p = pr.p(), q = pr.q();
  if (chi_hat.size() != 2 * q) throw InvalidArgument("gradient_with_estimates: chi has wrong size");
  const Linearization lin(pr, x);
  const Vector lambda = chi_hat.head(m);
  const Vector mu = chi_hat.segment(m, p);
  const Vector var = chi_hat.tail(q);
  const Vector w = lin.values.g + shifted_slack_from_values(lin.values.g, lambda, params.epsilon);
  const double inv_eps = 1.0 / params.epsilon;

  const RSMatrices rs = rs_from(pr, x, lin, params, lambda, mu);
  Vector grad = lin.grad_f;
  grad.noalias() += lin.dg(m) * (lambda + 2.0 * inv_eps * w);
  grad.noalias() += lin.dh(p) * (mu + 2.0 * inv_eps * lin.values.h);
  grad.noalias() -= rs.R.transpose() * var.head(m);
  grad.noalias() -= rs.S.transpose() * var.tail(p);
  return grad;
}

double kkt_residual(const Problem& pr, const Vector& x, const MultiplierPair& mult) {
  const Linearization lin(pr, x);
  const int m = pr.m(), p = pr.p();
  const Vector& g = lin.values.g;
  Vector stationarity = lin.grad_f;
  stationarity.noalias() += lin.dg(m) * mult.lambda + lin.dh(p) * mult.mu;

  double r = stationarity.lpNorm<Eigen::Infinity>();
  if (m > 0) {
    r = std::max(r, g.cwiseMax(0.0).lpNorm<Eigen::Infinity>());
    r = std::max(r, std::abs(mult.lambda.dot(g)));
    r = std::max(r, (-mult.lambda).cwiseMax(0.0).lpNorm<Eigen::Infinity>());
  }
  if (p > 0) r = std::max(r, lin.values.h.lpNorm<Eigen::Infinity>());
  return r;
}

}  // namespace dpen
