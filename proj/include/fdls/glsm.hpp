#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>

#include "fdls/operators.hpp"

namespace fdls {

struct TikhonovResult {
  Eigen::VectorXcd a;
  double alpha = 0.0;
  double penalty = 0.0;  // (Nsharp a, a) type quadratic form
  double misfit = 0.0;   // ||N a - phi||^2
  double gfun = 0.0;     // penalty + delta ||Nsharp|| ||a||^2
  double grad_norm = 0.0;
};

/// Exact minimizer of J(a) = alpha((S a, a) + delta ||S|| ||a||^2) + ||N a - phi||^2
/// through the Hermitian normal equations.
inline TikhonovResult tikhonov_argmin(const Eigen::MatrixXcd& N, const Eigen::MatrixXcd& Nsharp,
                                      double nsharp_norm, const Eigen::VectorXcd& phi,
                                      double alpha, double delta) {
  if (!(alpha > 0.0)) throw error("tikhonov regularization weight must be positive");
  Eigen::MatrixXcd S = alpha * Nsharp + N.adjoint() * N;
  S.diagonal().array() += alpha * delta * nsharp_norm;
  Eigen::VectorXcd rhs = N.adjoint() * phi;
  Eigen::LDLT<Eigen::MatrixXcd> ldlt(S);
  if (ldlt.info() != Eigen::Success) throw error("tikhonov normal equations are singular");
  TikhonovResult r;
  r.a = ldlt.solve(rhs);
  r.alpha = alpha;
  r.penalty = (r.a.adjoint() * Nsharp * r.a)(0).real();
  r.misfit = (N * r.a - phi).squaredNorm();
  r.gfun = r.penalty + delta * nsharp_norm * r.a.squaredNorm();
  r.grad_norm = (S * r.a - rhs).norm();
  if (r.grad_norm > 1e-8 * (rhs.norm() + 1.0))
    throw error("tikhonov minimizer failed the optimality check");
  return r;
}

/// Single-mode variant: penalty through I_q^* Nsharp I_q, misfit through N_q.
inline TikhonovResult tikhonov_argmin_q(const Eigen::MatrixXcd& N, const Eigen::MatrixXcd& Nsharp,
                                        double nsharp_norm, const Eigen::VectorXcd& phi_q,
                                        double alpha, double delta, const ModeSet& ms, int q) {
  Eigen::MatrixXcd Nq = nq_from_n(N, ms, q);
  Eigen::MatrixXcd Pq = nq_from_n(Nsharp, ms, q);
  return tikhonov_argmin(Nq, Pq, nsharp_norm, phi_q, alpha, delta);
}

/// Per-sign imaging state: data matrix, its sharp part, and the factorized
/// normal equations shared by every sampling point.
class GlsmContext {
 public:
  Eigen::MatrixXcd N;
  Eigen::MatrixXcd Nsharp;
  double nsharp_norm = 0.0;
  double alpha = 0.0, delta = 0.0;
  ModeSet ms;
  int q = 0;
  int sign = +1;

  GlsmContext(Eigen::MatrixXcd data, const WaveParams& wp, int sign_, double alpha_, double delta_)
      : N(std::move(data)), ms(wp), q(wp.q), sign(sign_), delta(delta_) {
    if (N.rows() != ms.size() || N.cols() != ms.size())
      throw error("near-field matrix does not match the mode set");
    SharpMatrix sh = sharp(N);
    Nsharp = sh.m;
    nsharp_norm = sh.norm2;
    if (alpha_ > 0.0) {
      alpha = alpha_;
    } else {
      Eigen::JacobiSVD<Eigen::MatrixXcd> svd(N);
      alpha = std::max(delta, 1e-8) * svd.singularValues()(0);
    }
    Eigen::MatrixXcd S = alpha * Nsharp + N.adjoint() * N;
    S.diagonal().array() += alpha * delta * nsharp_norm;
    full_.compute(S);
    full_mat_ = S;
    Nq_ = nq_from_n(N, ms, q);
    Pq_ = nq_from_n(Nsharp, ms, q);
    Eigen::MatrixXcd Sq = alpha * Pq_ + Nq_.adjoint() * Nq_;
    Sq.diagonal().array() += alpha * delta * nsharp_norm;
    fullq_.compute(Sq);
    fullq_mat_ = Sq;
  }

  TikhonovResult solve_full(const Eigen::VectorXcd& phi) const {
    Eigen::VectorXcd rhs = N.adjoint() * phi;
    TikhonovResult r;
    r.a = full_.solve(rhs);
    r.alpha = alpha;
    r.penalty = (r.a.adjoint() * Nsharp * r.a)(0).real();
    r.misfit = (N * r.a - phi).squaredNorm();
    r.gfun = r.penalty + delta * nsharp_norm * r.a.squaredNorm();
    r.grad_norm = (full_mat_ * r.a - rhs).norm();
    return r;
  }

  TikhonovResult solve_q(const Eigen::VectorXcd& phi_q) const {
    Eigen::VectorXcd rhs = Nq_.adjoint() * phi_q;
    TikhonovResult r;
    r.a = fullq_.solve(rhs);
    r.alpha = alpha;
    r.penalty = (r.a.adjoint() * Pq_ * r.a)(0).real();
    r.misfit = (Nq_ * r.a - phi_q).squaredNorm();
    r.gfun = r.penalty + delta * nsharp_norm * r.a.squaredNorm();
    r.grad_norm = (fullq_mat_ * r.a - rhs).norm();
    return r;
  }

 private:
  Eigen::LDLT<Eigen::MatrixXcd> full_, fullq_;
  Eigen::MatrixXcd full_mat_, fullq_mat_;
  Eigen::MatrixXcd Nq_, Pq_;
};

struct IndicatorValue {
  double value = 0.0;  // the one-sign indicator
  double G = 0.0;      // G(a) for the full point-source data
  double Gq = 0.0;     // G(a_q)
  double D = 0.0;      // single-mode consistency defect
};

/// One-sign differential indicator at z: Tikhonov solves against the
/// point-source Rayleigh data, the single-mode point-source data, and the
/// restricted single-mode system.
inline IndicatorValue indicator_at_sign(double zx, double zd, const GlsmContext& ctx,
                                        const WaveParams& wp) {
  if (std::abs(zd) >= wp.h) throw error("sampling point outside the strip |z| < h");
  RayleighSeq phi = phi_hat(zx, zd, ctx.sign, wp, ctx.ms);
  RayleighSeq phiq = phiq_hat(zx, zd, ctx.sign, wp, ctx.ms);
  TikhonovResult a = ctx.solve_full(phi.v);
  TikhonovResult aq = ctx.solve_full(phiq.v);
  TikhonovResult atq = ctx.solve_q(iq_restrict(phiq.v, ctx.ms, ctx.q));
  Eigen::VectorXcd diff = aq.a - iq_embed(atq.a, ctx.ms, ctx.q);
  double D = (diff.adjoint() * ctx.Nsharp * diff)(0).real();
  IndicatorValue out;
  out.G = a.gfun;
  out.Gq = aq.gfun;
  if (D <= 1e-14 * ctx.nsharp_norm * diff.squaredNorm() || !(D > 0.0)) {
    out.D = 0.0;
    out.value = 0.0;
    return out;
  }
  out.D = D;
  out.value = 1.0 / (out.G * (1.0 + out.G / D));
  return out;
}

struct IndicatorMap {
  std::vector<double> xs, ys;
  Eigen::ArrayXXd Iplus, Iminus, I;             // ny x nx
  Eigen::ArrayXXd Gp, Gqp, Dp, Gm, Gqm, Dm;     // per-z diagnostics
  std::vector<std::string> point_errors;
  double alpha_plus = 0.0, alpha_minus = 0.0, delta = 0.0;
  int q = 0;
};

inline std::pair<std::vector<double>, std::vector<double>> default_sampling_grid(
    const WaveParams& wp, int nx = 120, int ny = 60) {
  std::vector<double> xs(static_cast<std::size_t>(nx)), ys(static_cast<std::size_t>(ny));
  double x0 = wp.x_left(), dx = wp.ML() / nx;
  for (int i = 0; i < nx; ++i) xs[static_cast<std::size_t>(i)] = x0 + (i + 0.5) * dx;
  double dy = 2.0 * wp.h / ny;
  for (int i = 0; i < ny; ++i) ys[static_cast<std::size_t>(i)] = -wp.h + (i + 0.5) * dy;
  return {xs, ys};
}

inline IndicatorMap indicator_map(const std::vector<double>& xs, const std::vector<double>& ys,
                                  const GlsmContext& plus, const GlsmContext& minus,
                                  const WaveParams& wp) {
  IndicatorMap m;
  m.xs = xs;
  m.ys = ys;
  m.alpha_plus = plus.alpha;
  m.alpha_minus = minus.alpha;
  m.delta = plus.delta;
  m.q = plus.q;
  long nx = static_cast<long>(xs.size()), ny = static_cast<long>(ys.size());
  for (auto* arr : {&m.Iplus, &m.Iminus, &m.I, &m.Gp, &m.Gqp, &m.Dp, &m.Gm, &m.Gqm, &m.Dm})
    *arr = Eigen::ArrayXXd::Zero(ny, nx);
  std::vector<std::string> errs(static_cast<std::size_t>(nx * ny));
  parallel_for(static_cast<std::size_t>(nx * ny), [&](std::size_t t) {
    long iy = static_cast<long>(t) / nx, ix = static_cast<long>(t) % nx;
    try {
      IndicatorValue p = indicator_at_sign(xs[static_cast<std::size_t>(ix)],
                                           ys[static_cast<std::size_t>(iy)], plus, wp);
      IndicatorValue q = indicator_at_sign(xs[static_cast<std::size_t>(ix)],
                                           ys[static_cast<std::size_t>(iy)], minus, wp);
      m.Iplus(iy, ix) = p.value;
      m.Iminus(iy, ix) = q.value;
      m.I(iy, ix) = p.value + q.value;
      m.Gp(iy, ix) = p.G;
      m.Gqp(iy, ix) = p.Gq;
      m.Dp(iy, ix) = p.D;
      m.Gm(iy, ix) = q.G;
      m.Gqm(iy, ix) = q.Gq;
      m.Dm(iy, ix) = q.D;
    } catch (const std::exception& e) {
      errs[t] = e.what();
    }
  });
  for (auto& e : errs)
    if (!e.empty()) m.point_errors.push_back(e);
  return m;
}

}  // namespace fdls
