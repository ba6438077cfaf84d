#pragma once

#include "dpen/problem.hpp"

namespace dpen {

/// Penalty parameter epsilon > 0 and the gamma != 0 weighting G(x)^2 in N(x).
struct PenaltyParams {
  double epsilon = 1e-2;
  double gamma = 1.0;

  void validate() const;
};

struct MultiplierPair {
  Vector lambda;  // m
  Vector mu;      // p
};

/// Everything the exact penalty needs at one point x.
struct PenaltyEval {
  double value = 0.0;
  Vector gradient;
  MultiplierPair multipliers;
  /// (y_j^eps)^2 = -min(0, g_j + eps/2 lambda_j); the square root is never formed.
  Vector shifted_slack_sq;
  Vector varrho;
};

/// Smallest eigenvalue of N(x) at or below which N(x) is treated as singular.
inline constexpr double kSingularNTol = 1e-10;

/// N(x) = [dg'dg + gamma^2 G^2, dg'dh; dh'dg, dh'dh].
Matrix assemble_N(const Problem& pr, const Vector& x, const PenaltyParams& params);

/// Solves N(x) [lambda; mu] = -[dg'; dh'] grad f(x).
MultiplierPair multipliers(const Problem& pr, const Vector& x, const PenaltyParams& params);

Vector shifted_slack(const Problem& pr, const Vector& x, const Vector& lambda,
                     const PenaltyParams& params);

/// Shifted slack from precomputed constraint values.
Vector shifted_slack_from_values(const Vector& g, const Vector& lambda, double epsilon);

double penalty_value(const Problem& pr, const Vector& x, const PenaltyParams& params);

struct RSMatrices {
  Matrix R;  // m x n
  Matrix S;  // p x n
};

/// Jacobian terms with [grad lambda'; grad mu'] = -N^{-1} [R; S], evaluated with
/// the given multipliers frozen in grad L and the Hessian of L.
RSMatrices rs_matrices(const Problem& pr, const Vector& x, const PenaltyParams& params,
                       const MultiplierPair& mult);

/// Solves N(x) varrho = [g + Y y; h].
Vector varrho(const Problem& pr, const Vector& x, const PenaltyParams& params,
              const MultiplierPair& mult);

Vector penalty_gradient(const Problem& pr, const Vector& x, const PenaltyParams& params);

/// Value, gradient and all intermediate quantities in one pass.
PenaltyEval evaluate_penalty(const Problem& pr, const Vector& x, const PenaltyParams& params);

/// chi(x) = (lambda(x); mu(x); varrho(x)), length 2(m+p).
Vector chi(const Problem& pr, const Vector& x, const PenaltyParams& params);

/// The penalty gradient formula evaluated with an arbitrary chi = (lambda; mu; varrho)
/// in place of chi(x). Equals penalty_gradient() when chi_hat == chi(x).
Vector gradient_with_estimates(const Problem& pr, const Vector& x, const PenaltyParams& params,
                               const Vector& chi_hat);

/// max of stationarity, primal infeasibility, complementarity and dual sign violation.
double kkt_residual(const Problem& pr, const Vector& x, const MultiplierPair& mult);

}  // namespace dpen
