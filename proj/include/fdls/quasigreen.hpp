#pragma once

#include <Eigen/Dense>
#include <array>
#include <cmath>

#include "fdls/geometry.hpp"

namespace fdls {

/// sqrt with the radiation branch Im >= 0 (real positive on the propagating side).
inline cplx radiation_sqrt(cplx w) {
  cplx s = std::sqrt(w);
  if (s.imag() < 0.0) s = -s;
  return s;
}

inline cplx beta_of(double alpha, cplx k2) { return radiation_sqrt(k2 - alpha * alpha); }

/// alpha_#(j), beta_#(j) for the ML-periodic mode ladder. Rejects Wood anomalies.
inline std::pair<double, cplx> alpha_beta(int j, const WaveParams& wp) {
  double alpha = 2.0 * pi * j / wp.ML();
  cplx beta = beta_of(alpha, cplx(wp.k * wp.k, 0.0));
  if (std::abs(beta) <= 1e-10 * wp.k)
    throw anomaly_error("Rayleigh anomaly: beta_#(" + std::to_string(j) + ") = 0 at this wavenumber");
  return {alpha, beta};
}

struct RayleighSeq {
  int sign = +1;  // +1 = coefficients on Gamma_h, -1 = on Gamma_{-h}
  Eigen::VectorXcd v;
};

/// Rayleigh sequence of the free ML-periodic point source at z, over the mode set.
inline RayleighSeq phi_hat(double zx, double zd, int sign, const WaveParams& wp, const ModeSet& ms) {
  RayleighSeq out;
  out.sign = sign;
  out.v.resize(ms.size());
  for (int r = 0; r < ms.size(); ++r) {
    auto [alpha, beta] = alpha_beta(ms.j_of(r), wp);
    double vert = (sign > 0) ? std::abs(zd - wp.h) : std::abs(zd + wp.h);
    out.v(r) = iu / (2.0 * wp.ML() * beta) * std::exp(-iu * (alpha * zx) + iu * beta * vert);
  }
  return out;
}

/// Rayleigh sequence of the alpha_q quasi-periodic point source at z: nonzero
/// only on the indices congruent to q mod M, with the single-cell prefactor.
inline RayleighSeq phiq_hat(double zx, double zd, int sign, const WaveParams& wp, const ModeSet& ms) {
  RayleighSeq out;
  out.sign = sign;
  out.v = Eigen::VectorXcd::Zero(ms.size());
  for (int r : ms.class_rows(wp.q)) {
    auto [alpha, beta] = alpha_beta(ms.j_of(r), wp);
    double vert = (sign > 0) ? std::abs(zd - wp.h) : std::abs(zd + wp.h);
    out.v(r) = iu / (2.0 * wp.L * beta) * std::exp(-iu * (alpha * zx) + iu * beta * vert);
  }
  return out;
}

// ---------------------------------------------------------------------------
// complex error function machinery (rational approximation of the Faddeeva
// function on the closed upper half plane, Weideman style)
// ---------------------------------------------------------------------------

namespace detail {

struct FaddeevaTable {
  static constexpr int N = 40;
  double L = 0.0;
  std::array<double, N> a{};

  FaddeevaTable() {
    constexpr int M = 2 * N;
    constexpr int M2 = 2 * M;
    L = std::sqrt(N / std::sqrt(2.0));
    std::array<double, M2> f{};
    f[0] = 0.0;
    for (int idx = 1; idx < M2; ++idx) {
      int k = idx - M;  // -M+1 .. M-1
      double theta = k * pi / M;
      double t = L * std::tan(0.5 * theta);
      f[static_cast<std::size_t>(idx)] = std::exp(-t * t) * (L * L + t * t);
    }
    // shifted real DFT, keep coefficients 1..N
    for (int n = 1; n <= N; ++n) {
      double acc = 0.0;
      for (int m = 0; m < M2; ++m) {
        double val = f[static_cast<std::size_t>((m + M) % M2)];
        acc += val * std::cos(2.0 * pi * m * n / M2);
      }
      a[static_cast<std::size_t>(N - n)] = acc / M2;  // highest degree first
    }
  }

  cplx w_upper(cplx z) const {  // requires Im z >= 0
    cplx Z = (L + iu * z) / (L - iu * z);
    cplx p = 0.0;
    for (int i = 0; i < N; ++i) p = p * Z + a[static_cast<std::size_t>(i)];
    cplx den = L - iu * z;
    return 2.0 * p / (den * den) + (1.0 / std::sqrt(pi)) / den;
  }
};

inline const FaddeevaTable& faddeeva_table() {
  static const FaddeevaTable t;
  return t;
}

inline cplx cerfc_q1(cplx z) {  // Re z >= 0, Im z >= 0
  return std::exp(-z * z) * faddeeva_table().w_upper(iu * z);
}

}  // namespace detail

inline cplx cerfc(cplx z) {
  const bool re_neg = z.real() < 0.0;
  const bool im_neg = z.imag() < 0.0;
  if (!re_neg && !im_neg) return detail::cerfc_q1(z);
  if (!re_neg && im_neg) return std::conj(detail::cerfc_q1(std::conj(z)));
  if (re_neg && !im_neg) return 2.0 - std::conj(detail::cerfc_q1(std::conj(-z)));
  return std::conj(2.0 - std::conj(detail::cerfc_q1(-std::conj(z))));
}

/// Exponential integral E_n(x), x > 0, by upward recurrence from E_1.
inline double expint_en(int n, double x) {
  if (x <= 0.0) throw error("expint_en requires x > 0");
  if (x > 700.0) return 0.0;
  double e = -std::expint(-x);  // E_1
  if (n == 1) return e;
  double ex = std::exp(-x);
  for (int m = 1; m < n; ++m) e = (ex - x * e) / m;
  return e;
}

struct GreenEvalParams {
  int truncation = 0;        // spectral terms per side, 0 = automatic
  double ewald_split = 0.0;  // Ewald parameter E, 0 = automatic
  double near_threshold = -1.0;  // |x_d| below which Ewald is used, <0 = 0.1 lambda
};

/// Quasi-periodic 2D Helmholtz Green's function with period d and phase
/// alpha0: G(x + d, y) = e^{i alpha0 d} G(x, y), (Delta + k^2) G = -delta.
/// Spectral (Rayleigh) series away from the source plane, Ewald split near it.
struct QuasiGreen {
  cplx k2{1.0, 0.0};
  double d = 1.0;
  double alpha0 = 0.0;
  double E = 0.2;
  double near_thr = 0.1;
  int max_terms = 100000;

  static QuasiGreen make(cplx k2_, double period, double alpha0_, GreenEvalParams gp = {}) {
    QuasiGreen g;
    g.k2 = k2_;
    g.d = period;
    g.alpha0 = alpha0_;
    double ak = std::sqrt(std::abs(k2_));
    g.E = gp.ewald_split > 0.0 ? gp.ewald_split
                               : std::max(std::sqrt(pi) / period, ak / (2.0 * std::sqrt(6.0)));
    g.near_thr = gp.near_threshold >= 0.0 ? gp.near_threshold : 0.1 * (2.0 * pi / std::max(ak, 1e-300));
    if (gp.truncation > 0) g.max_terms = gp.truncation;
    return g;
  }

  double alpha_j(int j) const { return alpha0 + 2.0 * pi * j / d; }
  cplx beta_j(int j) const { return beta_of(alpha_j(j), k2); }

  cplx spectral(double x, double y) const {
    double a = std::abs(y);
    if (a <= 0.0) throw error("spectral series needs |x_d| > 0");
    cplx sum = 0.0;
    int quiet = 0;
    for (int j = 0; j < max_terms; ++j) {
      bool tiny = true;
      for (int s : {+1, -1}) {
        if (j == 0 && s < 0) continue;
        int jj = s * j;
        cplx b = beta_j(jj);
        if (std::abs(b) < 1e-13 * std::sqrt(std::abs(k2)))
          throw anomaly_error("Rayleigh anomaly in spectral series");
        cplx t = iu / (2.0 * d * b) * std::exp(iu * alpha_j(jj) * x + iu * b * a);
        sum += t;
        if (std::abs(t) > 1e-14 * std::abs(sum) + 1e-300) tiny = false;
      }
      double am = std::max(std::abs(alpha_j(j)), std::abs(alpha_j(-j)));
      if (tiny && am * am > 4.0 * std::abs(k2)) {
        if (++quiet >= 3) break;
      } else {
        quiet = 0;
      }
    }
    return sum;
  }

  cplx ewald_spectral_part(double x, double a) const {
    cplx sum = 0.0;
    int quiet = 0;
    for (int j = 0; j < max_terms; ++j) {
      bool tiny = true;
      for (int s : {+1, -1}) {
        if (j == 0 && s < 0) continue;
        int jj = s * j;
        cplx b = beta_j(jj);
        if (std::abs(b) < 1e-13 * (std::sqrt(std::abs(k2)) + 1e-300))
          throw anomaly_error("Rayleigh anomaly in Ewald spectral part");
        cplx u = -iu * b / (2.0 * E);  // real positive for evanescent modes
        cplx t1 = std::exp(iu * b * a) * cerfc(-a * E + u);
        cplx t2 = std::exp(-iu * b * a) * cerfc(a * E + u);
        cplx t = iu / (4.0 * d * b) * std::exp(iu * alpha_j(jj) * x) * (t1 + t2);
        sum += t;
        if (std::abs(t) > 1e-14 * std::abs(sum) + 1e-300) tiny = false;
      }
      if (tiny) {
        if (++quiet >= 3) break;
      } else {
        quiet = 0;
      }
    }
    return sum;
  }

  cplx ewald_image_series(double r2) const {  // (1/4pi) sum_n c_n E_{n+1}(E^2 r^2)
    double xx = E * E * r2;
    if (xx > 45.0) return 0.0;
    cplx c = 1.0;
    cplx ratio = k2 / (4.0 * E * E);
    double en = expint_en(1, xx);
    double ex = std::exp(-xx);
    cplx acc = en;  // n = 0 term
    for (int n = 1; n <= 80; ++n) {
      en = (ex - xx * en) / n;  // E_{n+1}
      c *= ratio / static_cast<double>(n);
      cplx t = c * en;
      acc += t;
      if (std::abs(t) < 1e-15 * std::abs(acc) && n > 4) break;
    }
    return acc / (4.0 * pi);
  }

  cplx ewald(double x, double y) const {
    double a = std::abs(y);
    cplx sum = ewald_spectral_part(x, a);
    int m0 = static_cast<int>(std::lround(x / d));
    int span = static_cast<int>(std::ceil(std::sqrt(45.0) / (E * d))) + 1;
    for (int m = m0 - span; m <= m0 + span; ++m) {
      double rx = x - m * d;
      double r2 = rx * rx + y * y;
      if (r2 < 1e-24 * d * d)
        throw error("Green's function evaluated at a source lattice point");
      cplx ph = std::exp(iu * (alpha0 * m * d));
      sum += ph * ewald_image_series(r2);
    }
    return sum;
  }

  cplx eval(double x, double y) const {
    if (std::abs(y) >= near_thr) return spectral(x, y);
    return ewald(x, y);
  }

  /// limit of G(x) - (i/4) H0^(1)(k |x|) as x -> 0 (the smooth remainder).
  cplx smooth_at_zero() const {
    constexpr double eulergamma = 0.57721566490153286;
    cplx sum = ewald_spectral_part(0.0, 0.0);
    int span = static_cast<int>(std::ceil(std::sqrt(45.0) / (E * d))) + 1;
    for (int m = -span; m <= span; ++m) {
      if (m == 0) continue;
      double r2 = static_cast<double>(m) * m * d * d;
      sum += std::exp(iu * (alpha0 * m * d)) * ewald_image_series(r2);
    }
    // m = 0 image minus the free-space singularity, plus its n >= 1 tail
    cplx c = 1.0;
    cplx ratio = k2 / (4.0 * E * E);
    cplx tail = 0.0;
    for (int n = 1; n <= 80; ++n) {
      c *= ratio / static_cast<double>(n);
      cplx t = c / static_cast<double>(n);  // E_{n+1}(0) = 1/n
      tail += t;
      if (std::abs(t) < 1e-16 * std::abs(tail) && n > 4) break;
    }
    cplx kk = radiation_sqrt(k2);
    sum += tail / (4.0 * pi) + eulergamma / (4.0 * pi) +
           std::log(kk / (2.0 * E)) / (2.0 * pi) - iu / 4.0;
    return sum;
  }
};

inline cplx eval_phi(double x, double y, const WaveParams& wp, GreenEvalParams gp = {}) {
  auto g = QuasiGreen::make(cplx(wp.k * wp.k, 0.0), wp.ML(), 0.0, gp);
  double xr = std::remainder(x, wp.ML());
  return g.eval(xr, y);
}

inline cplx eval_phi_q(double x, double y, const WaveParams& wp, GreenEvalParams gp = {}) {
  auto g = QuasiGreen::make(cplx(wp.k * wp.k, 0.0), wp.L, wp.alpha_q(), gp);
  // reduce to the base cell and restore the quasi-periodic phase
  double xr = std::remainder(x, wp.L);
  double shift = std::round((x - xr) / wp.L);
  cplx ph = std::exp(iu * (wp.alpha_q() * shift * wp.L));
  return ph * g.eval(xr, y);
}

}  // namespace fdls
