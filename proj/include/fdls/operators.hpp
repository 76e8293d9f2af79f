#pragma once

#include <Eigen/Dense>

#include "fdls/forward.hpp"

namespace fdls {

/// |Re F| + |Im F| in the spectral sense; Hermitian positive semidefinite.
struct SharpMatrix {
  Eigen::MatrixXcd m;
  double norm2 = 0.0;  // largest eigenvalue
};

namespace detail {

inline Eigen::MatrixXcd hermitian_abs(const Eigen::MatrixXcd& H, double clamp_scale) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(H);
  if (es.info() != Eigen::Success) throw error("Hermitian eigendecomposition failed");
  Eigen::VectorXd lam = es.eigenvalues();
  double scale = lam.cwiseAbs().maxCoeff();
  for (long i = 0; i < lam.size(); ++i) {
    double a = std::abs(lam(i));
    lam(i) = (a < clamp_scale * scale) ? 0.0 : a;  // suppress sign noise near the kernel
  }
  return es.eigenvectors() * lam.asDiagonal() * es.eigenvectors().adjoint();
}

}  // namespace detail

inline SharpMatrix sharp(const Eigen::MatrixXcd& F) {
  if (F.rows() != F.cols()) throw error("sharp requires a square matrix");
  Eigen::MatrixXcd re = 0.5 * (F + F.adjoint());
  Eigen::MatrixXcd im = (F - F.adjoint()) / (2.0 * iu);
  SharpMatrix out;
  out.m = detail::hermitian_abs(re, 1e-12) + detail::hermitian_abs(im, 1e-12);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(out.m, Eigen::EigenvaluesOnly);
  out.norm2 = es.eigenvalues().size() ? es.eigenvalues().maxCoeff() : 0.0;
  return out;
}

/// Embedding of single-mode coefficients into the full index set (zeros off
/// the class of q) and its adjoint, the restriction.
inline Eigen::VectorXcd iq_embed(const Eigen::VectorXcd& a, const ModeSet& ms, int q) {
  if (q < 0 || q >= ms.M) throw error("mode index q out of range");
  auto rows = ms.class_rows(q);
  if (a.size() != static_cast<long>(rows.size()))
    throw error("single-mode vector length mismatch");
  Eigen::VectorXcd out = Eigen::VectorXcd::Zero(ms.size());
  for (std::size_t i = 0; i < rows.size(); ++i) out(rows[i]) = a(static_cast<long>(i));
  return out;
}

inline Eigen::VectorXcd iq_restrict(const Eigen::VectorXcd& a, const ModeSet& ms, int q) {
  if (q < 0 || q >= ms.M) throw error("mode index q out of range");
  auto rows = ms.class_rows(q);
  if (a.size() != ms.size()) throw error("full vector length mismatch");
  Eigen::VectorXcd out(static_cast<long>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) out(static_cast<long>(i)) = a(rows[i]);
  return out;
}

inline Eigen::MatrixXcd iq_matrix(const ModeSet& ms, int q) {
  auto rows = ms.class_rows(q);
  Eigen::MatrixXcd Iq = Eigen::MatrixXcd::Zero(ms.size(), static_cast<long>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) Iq(rows[i], static_cast<long>(i)) = 1.0;
  return Iq;
}

/// N_q = I_q^* N I_q: the submatrix on indices congruent to q mod M.
inline Eigen::MatrixXcd nq_from_n(const Eigen::MatrixXcd& N, const ModeSet& ms, int q) {
  if (q < 0 || q >= ms.M) throw error("mode index q out of range");
  if (N.rows() != ms.size() || N.cols() != ms.size()) throw error("near-field matrix size mismatch");
  auto rows = ms.class_rows(q);
  Eigen::MatrixXcd out(static_cast<long>(rows.size()), static_cast<long>(rows.size()));
  for (std::size_t a = 0; a < rows.size(); ++a)
    for (std::size_t b = 0; b < rows.size(); ++b)
      out(static_cast<long>(a), static_cast<long>(b)) = N(rows[a], rows[b]);
  return out;
}

/// The alpha_q quasi-periodic component of an ML-periodic grid field: keep the
/// transverse Fourier modes congruent to q mod M.
inline Eigen::MatrixXcd floquet_component(const Eigen::MatrixXcd& w, const SolverGrid& g,
                                          const WaveParams& wp, int q) {
  if (g.nx % wp.M != 0) throw grid_error("nx must be divisible by M");
  if (w.rows() != g.nz || w.cols() != g.nx) throw grid_error("field shape mismatch");
  const int nx = g.nx;
  Eigen::MatrixXcd P(nx, nx), Q(nx, nx);
  for (int m = 0; m < nx; ++m)
    for (int c = 0; c < nx; ++c) {
      double a = 2.0 * pi * (c - nx / 2) / wp.ML();
      P(m, c) = std::exp(-iu * (a * g.xs(m))) / static_cast<double>(nx);
      Q(c, m) = std::exp(iu * (a * g.xs(m)));
    }
  Eigen::MatrixXcd what = w * P;
  for (int c = 0; c < nx; ++c) {
    int j = c - nx / 2;
    if (((j - q) % wp.M + wp.M) % wp.M != 0) what.col(c).setZero();
  }
  return what * Q;
}

}  // namespace fdls
