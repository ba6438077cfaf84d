#include "dpen/distgrad.hpp"

#include <algorithm>

namespace dpen {

namespace {

Index position_in(const std::vector<AgentId>& footprint, AgentId j) {
  return std::lower_bound(footprint.begin(), footprint.end(), j) - footprint.begin();
}

}  // namespace

Network::Network(const Problem& pr, const Graph& g)
    : pr_(&pr), g_(&g), hoods_(two_hop_neighborhoods(g)) {
  if (pr.n() != g.n()) throw InvalidArgument("Network: problem and graph disagree on agent count");
}

double AgentView::x(AgentId j) const {
  net_->hood(owner_).require(j, "x");
  return (*x_)(j);
}

double AgentView::fprime(AgentId j) const {
  net_->hood(owner_).require(j, "f'");
  if (pub_ == nullptr) throw InvalidArgument("AgentView: no published data in this round");
  return pub_->fprime(j);
}

Eigen::Ref<const Vector> AgentView::jac_row(AgentId j) const {
  net_->hood(owner_).require(j, "Jacobian row");
  if (pub_ == nullptr) throw InvalidArgument("AgentView: no published data in this round");
  return pub_->jac.row(j).transpose();
}

Vector AgentView::footprint_state(int c) const {
  const auto& fp = problem().constraint(c).footprint;
  Vector out(fp.size());
  for (std::size_t k = 0; k < fp.size(); ++k) out(k) = x(fp[k]);
  return out;
}

double AgentView::constraint_value(int c) const {
  const ConstraintSpec& spec = problem().constraint(c);
  const double v = spec.value(footprint_state(c));
  if (!std::isfinite(v)) throw EvaluationError("constraint '" + spec.name + "' is not finite");
  return v;
}

Vector AgentView::constraint_grad(int c) const {
  return problem().constraint(c).grad(footprint_state(c));
}

Matrix AgentView::constraint_hess(int c) const {
  const ConstraintSpec& spec = problem().constraint(c);
  if (spec.linear) return Matrix::Zero(spec.footprint.size(), spec.footprint.size());
  return spec.hess(footprint_state(c));
}

Published publish(const Network& net, const Vector& x) {
  const Problem& pr = net.problem();
  const int n = net.n();
  if (x.size() != n) throw InvalidArgument("publish: state has wrong size");
  Published out{x, Vector(n), Matrix::Zero(n, pr.q())};
  for (AgentId k = 0; k < n; ++k) {
    const AgentView view(net, k, x);
    out.fprime(k) = pr.objective(k).d1(view.x(k));
    for (int c : pr.involved(k)) {
      const Vector grad = view.constraint_grad(c);
      out.jac(k, c) = grad(position_in(pr.constraint(c).footprint, k));
    }
  }
  if (!out.fprime.allFinite() || !out.jac.allFinite()) {
    throw EvaluationError("publish: non-finite derivative");
  }
  return out;
}

LocalShares local_share_gh(const AgentView& view, const Vector& lambda_hat,
                           const PenaltyParams& params) {
  const Problem& pr = view.problem();
  const int m = pr.m();
  LocalShares out{Vector::Zero(m), Vector::Zero(m), Vector::Zero(pr.p())};
  for (int c : pr.involved(view.owner())) {
    const double nj = double(pr.constraint(c).footprint.size());
    const double value = view.constraint_value(c);
    if (c < m) {
      out.g(c) = value / nj;
      out.slack(c) = std::max(0.0, -(value + 0.5 * params.epsilon * lambda_hat(c))) / nj;
    } else {
      out.h(c - m) = value / nj;
    }
  }
  return out;
}

LocalPieces local_Ni_bi(const AgentView& view, const PenaltyParams& params) {
  const Problem& pr = view.problem();
  const AgentId i = view.owner();
  const Vector a = view.jac_row(i);
  LocalPieces out;
  out.Ni = a * a.transpose();
  // gamma^2 g_j^2 / n_j, so the shares sum to gamma^2 G^2 exactly.
  const double gamma2 = params.gamma * params.gamma;
  for (int c : pr.involved(i)) {
    if (c >= pr.m()) continue;
    const double g = view.constraint_value(c);
    out.Ni(c, c) += gamma2 * g * g / double(pr.constraint(c).footprint.size());
  }
  out.bi_mult = -view.fprime(i) * a;
  return out;
}

Vector local_bi_varrho(const AgentView& view, const Vector& lambda_hat,
                       const PenaltyParams& params) {
  const LocalShares s = local_share_gh(view, lambda_hat, params);
  Vector out(s.g.size() + s.h.size());
  out << s.g + s.slack, s.h;
  return out;
}

Vector local_ri_si(const AgentView& view, const Vector& lambda_hat, const Vector& mu_hat,
                   const PenaltyParams& params) {
  const Problem& pr = view.problem();
  const AgentId i = view.owner();
  const int m = pr.m();
  Vector mult(pr.q());
  mult << lambda_hat, mu_hat;

  // Column i of [dg dh]' H_L: diagonal objective part plus nonlinear constraint curvature.
  Vector out = view.jac_row(i) * pr.objective(i).d2(view.x(i));
  for (int d : pr.involved(i)) {
    const ConstraintSpec& spec = pr.constraint(d);
    if (spec.linear) continue;
    const Matrix H = view.constraint_hess(d);
    const Index pi = position_in(spec.footprint, i);
    for (std::size_t k = 0; k < spec.footprint.size(); ++k) {
      const double hki = H(k, pi);
      if (hki == 0.0) continue;
      const AgentId agent = spec.footprint[k];
      out += mult(d) * hki * view.jac_row(agent);
      // grad L' times the Hessian of constraint d, column i.
      out(d) += (view.fprime(agent) + view.jac_row(agent).dot(mult)) * hki;
    }
  }
  const double g2 = 2.0 * params.gamma * params.gamma;
  for (int j : pr.involved(i)) {
    if (j >= m) break;
    out(j) += g2 * lambda_hat(j) * view.constraint_value(j) * view.jac_row(i)(j);
  }
  return out;
}

double local_gradient(const AgentView& view, const Vector& chi_hat, const PenaltyParams& params) {
  const Problem& pr = view.problem();
  const AgentId i = view.owner();
  const int m = pr.m(), p = pr.p(), q = pr.q();
  if (chi_hat.size() != 2 * q) throw InvalidArgument("local_gradient: chi has wrong size");
  const Vector lambda = chi_hat.head(m);
  const Vector mu = chi_hat.segment(m, p);
  const Vector a = view.jac_row(i);
  const double inv_eps = 1.0 / params.epsilon;

  double grad = view.fprime(i);
  for (int c : pr.involved(i)) {
    const double value = view.constraint_value(c);
    if (c < m) {
      const double w = value + std::max(0.0, -(value + 0.5 * params.epsilon * lambda(c)));
      grad += a(c) * (lambda(c) + 2.0 * inv_eps * w);
    } else {
      grad += a(c) * (mu(c - m) + 2.0 * inv_eps * value);
    }
  }
  grad -= chi_hat.tail(q).dot(local_ri_si(view, lambda, mu, params));
  return grad;
}

std::vector<LocalPieces> all_local_pieces(const Network& net, const Vector& x,
                                          const Vector& lambda_hat, const PenaltyParams& params) {
  const Published pub = publish(net, x);
  std::vector<LocalPieces> out;
  out.reserve(net.n());
  for (AgentId i = 0; i < net.n(); ++i) {
    const AgentView view(net, i, x, &pub);
    LocalPieces pieces = local_Ni_bi(view, params);
    pieces.bi_varrho = local_bi_varrho(view, lambda_hat, params);
    out.push_back(std::move(pieces));
  }
  return out;
}

Vector stacked_local_gradient(const Network& net, const Vector& x,
                              const std::vector<Vector>& chi_hats, const PenaltyParams& params) {
  const Published pub = publish(net, x);
  Vector out(net.n());
  for (AgentId i = 0; i < net.n(); ++i) {
    out(i) = local_gradient(AgentView(net, i, x, &pub), chi_hats[i], params);
  }
  return out;
}

Vector stacked_local_gradient(const Network& net, const Vector& x, const Vector& chi_hat,
                              const PenaltyParams& params) {
  return stacked_local_gradient(net, x, std::vector<Vector>(net.n(), chi_hat), params);
}

}  // namespace dpen
