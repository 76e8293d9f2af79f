#pragma once

#include <Eigen/Dense>
#include <random>
#include <vector>

#include "fdls/quasigreen.hpp"

namespace fdls {

/// Scaled incident plane wave u^{i,+/-}(x; j).
inline cplx incident_field(int j, int sign, const WaveParams& wp, double x, double z) {
  auto [alpha, beta] = alpha_beta(j, wp);
  return -iu / (2.0 * beta) * std::exp(iu * (alpha * x) + iu * beta * (sign > 0 ? z : -z));
}

inline Eigen::MatrixXcd incident_grid(int j, int sign, const WaveParams& wp, const SolverGrid& g) {
  auto [alpha, beta] = alpha_beta(j, wp);
  Eigen::MatrixXcd f(g.nz, g.nx);
  Eigen::VectorXcd col(g.nz);
  for (int iz = 0; iz < g.nz; ++iz)
    col(iz) = std::exp(iu * beta * (sign > 0 ? g.zs(iz) : -g.zs(iz)));
  for (int ix = 0; ix < g.nx; ++ix) {
    cplx ph = -iu / (2.0 * beta) * std::exp(iu * (alpha * g.xs(ix)));
    f.col(ix) = ph * col;
  }
  return f;
}

struct ScatterSolution {
  Eigen::MatrixXcd us;        // scattered field on the grid band
  Eigen::VectorXcd ray_up;    // Rayleigh sequence on Gamma_h over the mode set
  Eigen::VectorXcd ray_down;  // on Gamma_{-h}
  int iterations = 0;
  double residual = 0.0;
};

struct GmresResult {
  Eigen::VectorXcd x;
  int iterations = 0;
  double residual = 0.0;
  std::vector<double> history;
};

/// Restarted GMRES with modified Gram-Schmidt. apply must be linear.
template <class Apply>
GmresResult gmres(const Apply& apply, const Eigen::VectorXcd& b, double tol = 1e-8,
                  int restart = 50, int maxit = 500) {
  using Eigen::MatrixXcd;
  using Eigen::VectorXcd;
  GmresResult res;
  const auto n = b.size();
  res.x = VectorXcd::Zero(n);
  double bnorm = b.norm();
  if (bnorm == 0.0) return res;

  VectorXcd r = b;
  int total = 0;
  while (total < maxit) {
    double rnorm = r.norm();
    if (rnorm / bnorm <= tol) break;
    MatrixXcd V(n, restart + 1);
    MatrixXcd H = MatrixXcd::Zero(restart + 1, restart);
    VectorXcd cs(restart), sn(restart), gvec = VectorXcd::Zero(restart + 1);
    V.col(0) = r / rnorm;
    gvec(0) = rnorm;
    int j = 0;
    for (; j < restart && total < maxit; ++j, ++total) {
      VectorXcd w = apply(V.col(j));
      for (int i = 0; i <= j; ++i) {
        H(i, j) = V.col(i).dot(w);
        w -= H(i, j) * V.col(i);
      }
      H(j + 1, j) = w.norm();
      if (std::abs(H(j + 1, j)) > 1e-300) V.col(j + 1) = w / H(j + 1, j);
      for (int i = 0; i < j; ++i) {
        cplx t = cs(i) * H(i, j) + sn(i) * H(i + 1, j);
        H(i + 1, j) = -std::conj(sn(i)) * H(i, j) + std::conj(cs(i)) * H(i + 1, j);
        H(i, j) = t;
      }
      double denom = std::sqrt(std::norm(H(j, j)) + std::norm(H(j + 1, j)));
      if (denom < 1e-300) denom = 1e-300;
      cs(j) = std::conj(H(j, j)) / denom;
      sn(j) = std::conj(H(j + 1, j)) / denom;
      H(j, j) = cs(j) * H(j, j) + sn(j) * H(j + 1, j);
      H(j + 1, j) = 0.0;
      gvec(j + 1) = -std::conj(sn(j)) * gvec(j);
      gvec(j) = cs(j) * gvec(j);
      res.history.push_back(std::abs(gvec(j + 1)) / bnorm);
      if (std::abs(gvec(j + 1)) / bnorm <= tol) {
        ++j;
        break;
      }
    }
    VectorXcd y = H.topLeftCorner(j, j).template triangularView<Eigen::Upper>().solve(gvec.head(j));
    res.x += V.leftCols(j) * y;
    r = b - apply(res.x);
    if (j < restart) break;  // converged or stalled inside the cycle
  }
  res.residual = (b - apply(res.x)).norm() / bnorm;
  res.iterations = total;
  if (res.residual > tol * 10.0 && total >= maxit) {
    std::string hist;
    for (std::size_t i = res.history.size() > 8 ? res.history.size() - 8 : 0;
         i < res.history.size(); ++i)
      hist += " " + std::to_string(res.history[i]);
    throw solver_error("GMRES did not converge: residual " + std::to_string(res.residual) +
                       ", last residuals:" + hist);
  }
  return res;
}

/// Precomputed machinery for the ML-periodic Lippmann-Schwinger solve at a
/// fixed wavenumber: transverse DFT factors and per-mode vertical kernels.
class ForwardContext {
 public:
  WaveParams wp;
  SolverGrid g;
  ModeSet ms;
  cplx k2;
  IndexField field;
  Eigen::ArrayXXcd contrast;  // n - 1
  double tol = 1e-8;
  int restart = 50;
  int maxit = 500;

  ForwardContext(const MediumConfig& cfg, const WaveParams& wparams, const SolverGrid& grid,
                 cplx wavenumber = cplx(0, 0))
      : wp(wparams), g(grid), ms(wparams) {
    validate_config(cfg, wp);
    cplx kk = (wavenumber == cplx(0, 0)) ? cplx(wp.k, 0.0) : wavenumber;
    k2 = kk * kk;
    field = sample_index(cfg, wp, g);
    contrast = field.n.array() - 1.0;
    build_modes();
  }

  int mode_j(int c) const { return c - g.nx / 2; }
  int col_of_j(int j) const { return j + g.nx / 2; }

  /// Volume potential V g = k^2 * int Phi(x-y) g(y) dy applied to a grid
  /// density, exact in the vertical direction for piecewise constant slices.
  Eigen::MatrixXcd apply_V(const Eigen::MatrixXcd& dens) const {
    Eigen::MatrixXcd ghat = dens * P_;
    vertical_all(ghat);
    return ghat * Q_;
  }

  ScatterSolution solve(const Eigen::MatrixXcd& f) const {
    const auto nz = g.nz, nx = g.nx;
    Eigen::MatrixXcd rhs_m = apply_V(contrast.matrix().cwiseProduct(f));
    Eigen::Map<const Eigen::VectorXcd> rhs(rhs_m.data(), nz * static_cast<long>(nx));
    auto apply = [&](const Eigen::VectorXcd& xv) {
      Eigen::Map<const Eigen::MatrixXcd> xm(xv.data(), nz, nx);
      Eigen::MatrixXcd vw = apply_V(contrast.matrix().cwiseProduct(xm));
      Eigen::Map<Eigen::VectorXcd> vv(vw.data(), nz * static_cast<long>(nx));
      return Eigen::VectorXcd(xv - vv);
    };
    GmresResult r = gmres(apply, Eigen::VectorXcd(rhs), tol, restart, maxit);
    ScatterSolution sol;
    sol.us = Eigen::Map<const Eigen::MatrixXcd>(r.x.data(), nz, nx);
    sol.iterations = r.iterations;
    sol.residual = r.residual;
    Eigen::MatrixXcd dens = contrast.matrix().cwiseProduct(f + sol.us);
    Eigen::MatrixXcd ghat = dens * P_;
    sol.ray_up = rayleigh_from_density(ghat, +1);
    sol.ray_down = rayleigh_from_density(ghat, -1);
    return sol;
  }

  /// Rayleigh sequence of V[dens] on Gamma_{+/-h} from the mode transform of
  /// the density (exact vertical integration of the plane-wave factor).
  Eigen::VectorXcd rayleigh_from_density(const Eigen::MatrixXcd& ghat, int sign) const {
    Eigen::VectorXcd out(ms.size());
    for (int r = 0; r < ms.size(); ++r) {
      int j = ms.j_of(r);
      int c = col_of_j(j);
      if (c < 0 || c >= g.nx) throw grid_error("mode set exceeds the grid mode range");
      cplx b = beta_[static_cast<std::size_t>(c)];
      cplx acc = 0.0;
      for (int iz = 0; iz < g.nz; ++iz) {
        double zc = g.zs(iz);
        cplx vert = (sign > 0) ? std::exp(iu * b * (wp.h - zc)) : std::exp(iu * b * (zc + wp.h));
        acc += ghat(iz, c) * vert;
      }
      out(r) = k2 * iu / (2.0 * b) * sb_[static_cast<std::size_t>(c)] * acc;
    }
    return out;
  }

  /// DFT of samples on Gamma_{+/-h} restricted to the mode set (the discrete
  /// Rayleigh coefficients of a measured trace).
  Eigen::VectorXcd rayleigh_of_field(const Eigen::VectorXcd& trace) const {
    if (trace.size() != g.nx) throw grid_error("trace must be sampled on the grid columns");
    if (ms.size() > g.nx) throw grid_error("aliasing: fewer samples than requested indices");
    Eigen::VectorXcd out(ms.size());
    for (int r = 0; r < ms.size(); ++r) {
      double alpha = 2.0 * pi * ms.j_of(r) / wp.ML();
      cplx acc = 0.0;
      for (int ix = 0; ix < g.nx; ++ix) acc += trace(ix) * std::exp(-iu * (alpha * g.xs(ix)));
      out(r) = acc / static_cast<double>(g.nx);
    }
    return out;
  }

  const std::vector<cplx>& mode_betas() const { return beta_; }

 private:
  Eigen::MatrixXcd P_, Q_;
  std::vector<cplx> beta_, sb_, cb_;
  std::vector<double> alpha_;

  void build_modes() {
    const int nx = g.nx, nz = g.nz;
    alpha_.resize(static_cast<std::size_t>(nx));
    beta_.resize(static_cast<std::size_t>(nx));
    sb_.resize(static_cast<std::size_t>(nx));
    cb_.resize(static_cast<std::size_t>(nx));
    for (int c = 0; c < nx; ++c) {
      double a = 2.0 * pi * mode_j(c) / wp.ML();
      cplx b = beta_of(a, k2);
      if (std::abs(b) < 1e-12 * (std::sqrt(std::abs(k2)) + 1.0))
        throw anomaly_error("grid mode hits a Rayleigh anomaly; perturb k or the grid");
      alpha_[static_cast<std::size_t>(c)] = a;
      beta_[static_cast<std::size_t>(c)] = b;
      sb_[static_cast<std::size_t>(c)] = 2.0 * std::sin(b * 0.5 * g.dz) / b;
      cb_[static_cast<std::size_t>(c)] = 2.0 * (std::exp(iu * b * 0.5 * g.dz) - 1.0) / (iu * b);
    }
    P_.resize(nx, nx);
    Q_.resize(nx, nx);
    for (int m = 0; m < nx; ++m)
      for (int c = 0; c < nx; ++c) {
        double ax = alpha_[static_cast<std::size_t>(c)] * g.xs(m);
        P_(m, c) = std::exp(-iu * ax) / static_cast<double>(nx);
        Q_(c, m) = std::exp(iu * ax);
      }
    (void)nz;
  }

  // in-place vertical convolution of every mode column with the outgoing 1D
  // kernel, including the k^2 i/(2 beta) prefactor; the prefix recurrences
  // only ever multiply by e^{i beta dz} whose modulus is <= 1
  void vertical_all(Eigen::MatrixXcd& ghat) const {
    const int nz = g.nz;
    Eigen::VectorXcd up(nz), dn(nz);
    for (int c = 0; c < g.nx; ++c) {
      cplx b = beta_[static_cast<std::size_t>(c)];
      cplx pref = k2 * iu / (2.0 * b);
      cplx e1 = std::exp(iu * b * g.dz);
      cplx run = 0.0;
      for (int i = 0; i < nz; ++i) {  // up(i) = sum_{m<i} g_m e^{i b (z_i - z_m)}
        up(i) = run;
        run = (run + ghat(i, c)) * e1;
      }
      run = 0.0;
      for (int i = nz - 1; i >= 0; --i) {  // dn(i) = sum_{m>i} g_m e^{i b (z_m - z_i)}
        dn(i) = run;
        run = (run + ghat(i, c)) * e1;
      }
      cplx sfac = sb_[static_cast<std::size_t>(c)];
      cplx cfac = cb_[static_cast<std::size_t>(c)];
      for (int i = 0; i < nz; ++i)
        ghat(i, c) = pref * (sfac * (up(i) + dn(i)) + cfac * ghat(i, c));
    }
  }
};

inline ScatterSolution solve_ls(const MediumConfig& cfg, const WaveParams& wp,
                                const SolverGrid& g, const Eigen::MatrixXcd& source) {
  ForwardContext ctx(cfg, wp, g);
  return ctx.solve(source);
}

struct NearFieldPair {
  Eigen::MatrixXcd plus, minus;  // N^+ and N^-
};

/// All four Rayleigh data blocks; up/down coefficients for both incidence signs.
struct ScatterDataSet {
  Eigen::MatrixXcd up_from_plus, down_from_plus, up_from_minus, down_from_minus;
};

inline ScatterDataSet assemble_scatter_data(const ForwardContext& ctx) {
  const int n = ctx.ms.size();
  ScatterDataSet d;
  d.up_from_plus.resize(n, n);
  d.down_from_plus.resize(n, n);
  d.up_from_minus.resize(n, n);
  d.down_from_minus.resize(n, n);
  parallel_for(static_cast<std::size_t>(2 * n), [&](std::size_t task) {
    int sign = task < static_cast<std::size_t>(n) ? +1 : -1;
    int col = static_cast<int>(task % static_cast<std::size_t>(n));
    int j = ctx.ms.j_of(col);
    ScatterSolution sol;
    try {
      sol = ctx.solve(incident_grid(j, sign, ctx.wp, ctx.g));
    } catch (const error& e) {
      throw solver_error("incidence column j=" + std::to_string(j) +
                         (sign > 0 ? " (+)" : " (-)") + ": " + e.what());
    }
    if (sign > 0) {
      d.up_from_plus.col(col) = sol.ray_up;
      d.down_from_plus.col(col) = sol.ray_down;
    } else {
      d.up_from_minus.col(col) = sol.ray_up;
      d.down_from_minus.col(col) = sol.ray_down;
    }
  });
  return d;
}

inline NearFieldPair assemble_near_field(const MediumConfig& cfg, const WaveParams& wp,
                                         const SolverGrid& g) {
  ForwardContext ctx(cfg, wp, g);
  ScatterDataSet d = assemble_scatter_data(ctx);
  return {d.up_from_plus, d.down_from_minus};
}

/// N^delta(j,l) = N(j,l) (1 + delta A(j,l)), A with iid uniform parts in [-1,1].
inline Eigen::MatrixXcd add_noise(const Eigen::MatrixXcd& N, double delta, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Eigen::MatrixXcd out = N;
  for (long c = 0; c < N.cols(); ++c)
    for (long r = 0; r < N.rows(); ++r) {
      double re = uniform_pm1(rng());
      double im = uniform_pm1(rng());
      out(r, c) *= 1.0 + delta * cplx(re, im);
    }
  return out;
}

/// Pixel-subset quadrature on a solver grid (uniform weights).
struct Quad {
  std::vector<int> iz, ix;
  std::vector<double> x, z;
  double w = 0.0;
  int n = 0;
};

inline Quad quad_from_mask(const SolverGrid& g, const BoolGrid& mask) {
  Quad q;
  q.w = g.dx * g.dz;
  for (int ix = 0; ix < g.nx; ++ix)
    for (int iz = 0; iz < g.nz; ++iz)
      if (mask(iz, ix)) {
        q.iz.push_back(iz);
        q.ix.push_back(ix);
        q.x.push_back(g.xs(ix));
        q.z.push_back(g.zs(iz));
      }
  q.n = static_cast<int>(q.x.size());
  return q;
}

inline Quad quad_on_support(const ForwardContext& ctx) {
  BoolGrid m = (ctx.contrast.abs() > 0.0);
  return quad_from_mask(ctx.g, m);
}

/// Herglotz matrix: incident plane waves sampled at the quadrature nodes.
inline Eigen::MatrixXcd assemble_H(const WaveParams& wp, const ModeSet& ms, const Quad& q, int sign) {
  Eigen::MatrixXcd H(q.n, ms.size());
  for (int c = 0; c < ms.size(); ++c) {
    int j = ms.j_of(c);
    for (int m = 0; m < q.n; ++m) H(m, c) = incident_field(j, sign, wp, q.x[m], q.z[m]);
  }
  return H;
}

/// Discrete adjoint of the Herglotz operator: conjugate incident values times
/// quadrature weights.
inline Eigen::VectorXcd herglotz_adjoint(const Eigen::MatrixXcd& H, const Quad& q,
                                         const Eigen::VectorXcd& phi) {
  return H.adjoint() * phi * q.w;
}

/// Radiation pairing: maps a density on the quadrature to the Rayleigh
/// sequence of its volume potential (columns are the point-source sequences,
/// with the vertical factor integrated exactly over the pixel height).
inline Eigen::MatrixXcd radiation_matrix(const WaveParams& wp, const ModeSet& ms, const Quad& q,
                                         int sign, double dz_cell) {
  Eigen::MatrixXcd R(ms.size(), q.n);
  double k2 = wp.k * wp.k;
  for (int r = 0; r < ms.size(); ++r) {
    auto [alpha, beta] = alpha_beta(ms.j_of(r), wp);
    cplx sincf = std::sin(beta * 0.5 * dz_cell) / (beta * 0.5 * dz_cell);
    cplx pref = k2 * iu / (2.0 * wp.ML() * beta) * std::exp(iu * beta * wp.h) * sincf * q.w;
    for (int m = 0; m < q.n; ++m) {
      cplx vert = (sign > 0) ? std::exp(-iu * beta * q.z[m]) : std::exp(iu * beta * q.z[m]);
      R(r, m) = pref * std::exp(-iu * (alpha * q.x[m])) * vert;
    }
  }
  return R;
}

/// Middle operator on the quadrature: column m is k^2 (n-1)(e_m + w|_D) with w
/// the scattered solution for the pixel source e_m.
inline Eigen::MatrixXcd assemble_T(const ForwardContext& ctx, const Quad& q) {
  Eigen::MatrixXcd T(q.n, q.n);
  std::vector<cplx> kc(static_cast<std::size_t>(q.n));
  for (int i = 0; i < q.n; ++i)
    kc[static_cast<std::size_t>(i)] = ctx.k2 * ctx.contrast(q.iz[static_cast<std::size_t>(i)],
                                                            q.ix[static_cast<std::size_t>(i)]);
  parallel_for(static_cast<std::size_t>(q.n), [&](std::size_t m) {
    Eigen::MatrixXcd f = Eigen::MatrixXcd::Zero(ctx.g.nz, ctx.g.nx);
    f(q.iz[m], q.ix[m]) = 1.0;
    ScatterSolution sol = ctx.solve(f);
    for (int i = 0; i < q.n; ++i) {
      cplx wv = sol.us(q.iz[static_cast<std::size_t>(i)], q.ix[static_cast<std::size_t>(i)]);
      T(i, static_cast<long>(m)) =
          kc[static_cast<std::size_t>(i)] * ((static_cast<std::size_t>(i) == m ? 1.0 : 0.0) + wv);
    }
  });
  return T;
}

/// Propagating-mode flux balance of the scattering data; returns the largest
/// relative imbalance over all propagating incidences of both signs.
inline double flux_imbalance(const ForwardContext& ctx, const ScatterDataSet& d) {
  const auto& wp = ctx.wp;
  std::vector<int> prop;
  for (int r = 0; r < ctx.ms.size(); ++r) {
    auto [alpha, beta] = alpha_beta(ctx.ms.j_of(r), wp);
    if (std::abs(alpha) < wp.k) prop.push_back(r);
  }
  double worst = 0.0;
  for (int r : prop) {
    auto [aj, bj] = alpha_beta(ctx.ms.j_of(r), wp);
    double betaj = bj.real();
    double influx = 1.0 / (4.0 * betaj);
    for (int sign : {+1, -1}) {
      double out = 0.0;
      for (int l : prop) {
        auto [al, bl] = alpha_beta(ctx.ms.j_of(l), wp);
        double betal = bl.real();
        cplx up, dn;
        if (sign > 0) {
          up = d.up_from_plus(l, r);
          if (l == r) up += -iu / (2.0 * betaj) * std::exp(iu * bj * wp.h);
          dn = d.down_from_plus(l, r);
        } else {
          dn = d.down_from_minus(l, r);
          if (l == r) dn += -iu / (2.0 * betaj) * std::exp(iu * bj * wp.h);
          up = d.up_from_minus(l, r);
        }
        out += betal * (std::norm(up) + std::norm(dn));
      }
      worst = std::max(worst, std::abs(out - influx) / influx);
    }
  }
  return worst;
}

}  // namespace fdls
