#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <deque>
#include <utility>
#include <vector>

#include "fdls/common.hpp"

namespace fdls {

/// Wave and truncation parameters of the ML-periodic layer problem.
struct WaveParams {
  double k = 1.0;   // wavenumber
  double L = 1.0;   // cell period
  int M = 1;        // number of cells in the periodicity box
  double h = 1.0;   // half height of the layer strip
  int n_min = 0;    // Rayleigh truncation, modes l in [-n_min, n_max]
  int n_max = 0;
  int q = 0;        // Floquet mode index, 0 <= q < M

  double ML() const { return M * L; }
  double lambda() const { return 2.0 * pi / k; }
  double alpha_q() const { return 2.0 * pi * q / ML(); }

  // cell walls follow the floor convention: box = [x_left, x_left + M*L]
  double x_left() const { return (std::floor(-M / 2.0) + 0.5) * L; }
  double x_right() const { return x_left() + ML(); }

  std::vector<std::string> violations() const {
    std::vector<std::string> v;
    if (!(k > 0)) v.push_back("wavenumber k must be positive");
    if (!(L > 0)) v.push_back("period L must be positive");
    if (!(h > 0)) v.push_back("layer half height h must be positive");
    if (M < 1) v.push_back("period count M must be >= 1");
    if (n_min < 0 || n_max < 0) v.push_back("truncation n_min, n_max must be >= 0");
    if (q < 0 || q >= M) v.push_back("mode index q must satisfy 0 <= q < M");
    return v;
  }
};

/// The incidence/measurement index set: all integers j = q' + M*l with
/// q' a cell residue and l in [-n_min, n_max]; a consecutive range.
struct ModeSet {
  int j_lo = 0;
  int j_hi = 0;
  int M = 1;

  explicit ModeSet(const WaveParams& wp) : M(wp.M) {
    int mlo = static_cast<int>(std::floor(-wp.M / 2.0)) + 1;
    int mhi = static_cast<int>(std::floor(wp.M / 2.0));
    j_lo = mlo - wp.M * wp.n_min;
    j_hi = mhi + wp.M * wp.n_max;
  }
  int size() const { return j_hi - j_lo + 1; }
  int j_of(int row) const { return j_lo + row; }
  int row_of(int j) const { return j - j_lo; }
  bool contains(int j) const { return j >= j_lo && j <= j_hi; }

  /// Rows whose index is congruent to q mod M, ascending.
  std::vector<int> class_rows(int q) const {
    std::vector<int> r;
    for (int j = j_lo; j <= j_hi; ++j)
      if (((j - q) % M + M) % M == 0) r.push_back(row_of(j));
    return r;
  }
};

struct Disc {
  double cx = 0.0, cy = 0.0, r = 0.0;
  cplx n{1.0, 0.0};
};

struct MediumConfig {
  std::vector<Disc> background;  // replicated with period L
  std::vector<Disc> defect;      // placed once, inside the reference cell
};

inline std::vector<std::string> config_violations(const MediumConfig& cfg, const WaveParams& wp) {
  std::vector<std::string> v = wp.violations();
  auto check = [&](const Disc& d, const char* kind, std::size_t i) {
    std::string tag = std::string(kind) + " disc #" + std::to_string(i);
    if (!(d.r > 0)) v.push_back(tag + ": radius must be positive");
    if (!(d.n.real() > 0)) v.push_back(tag + ": index real part must be positive");
    if (d.n.imag() < 0) v.push_back(tag + ": index imaginary part must be nonnegative");
    if (std::abs(d.cy) + d.r >= wp.h)
      v.push_back(tag + ": must lie strictly inside the strip |y| < h");
    if (std::abs(d.cx) + d.r >= wp.L / 2.0)
      v.push_back(tag + ": must lie strictly inside the reference cell |x| < L/2");
  };
  for (std::size_t i = 0; i < cfg.background.size(); ++i) check(cfg.background[i], "background", i);
  for (std::size_t i = 0; i < cfg.defect.size(); ++i) check(cfg.defect[i], "defect", i);
  return v;
}

inline const MediumConfig& validate_config(const MediumConfig& cfg, const WaveParams& wp) {
  auto v = config_violations(cfg, wp);
  if (!v.empty()) throw config_error(std::move(v));
  return cfg;
}

/// Uniform pixel grid over the periodicity box times the vertical band
/// [-hd, hd] that bounds the inclusions. nx is a multiple of M so the cell
/// structure is exact on the raster.
struct SolverGrid {
  int nx = 0, nz = 0;
  double x_lo = 0, z_lo = 0;
  double dx = 0, dz = 0;
  int M = 1;

  double xs(int i) const { return x_lo + (i + 0.5) * dx; }
  double zs(int i) const { return z_lo + (i + 0.5) * dz; }
  int cell_cols() const { return nx / M; }
  double hd() const { return -z_lo; }
  int cell_of_zero() const {
    return static_cast<int>(std::floor((0.0 - x_lo) / (dx * cell_cols())));
  }
};

inline double bounding_height(const MediumConfig& cfg) {
  double hd = 0.0;
  for (const auto& d : cfg.background) hd = std::max(hd, std::abs(d.cy) + d.r);
  for (const auto& d : cfg.defect) hd = std::max(hd, std::abs(d.cy) + d.r);
  return hd;
}

inline SolverGrid make_grid(const WaveParams& wp, const MediumConfig& cfg, int nx, int nz) {
  if (nx <= 0 || nz <= 0) throw grid_error("grid dimensions must be positive");
  if (nx % wp.M != 0) throw grid_error("nx must be divisible by M");
  SolverGrid g;
  g.nx = nx;
  g.nz = nz;
  g.M = wp.M;
  g.x_lo = wp.x_left();
  g.dx = wp.ML() / nx;
  double hd = bounding_height(cfg);
  if (hd <= 0.0) hd = 0.25 * wp.h;                 // empty medium still gets a band
  hd = std::min(wp.h * 0.995, hd + 2.0 * (2.0 * hd / nz));
  g.z_lo = -hd;
  g.dz = 2.0 * hd / nz;
  // at least 8 points per wavelength inside the densest inclusion
  double nmax = 1.0;
  for (const auto& d : cfg.background) nmax = std::max(nmax, d.n.real());
  for (const auto& d : cfg.defect) nmax = std::max(nmax, d.n.real());
  double lam_med = wp.lambda() / std::sqrt(nmax);
  if (g.dx > lam_med / 8.0 || g.dz > lam_med / 8.0)
    throw grid_error("grid coarser than 8 points per wavelength inside inclusions");
  return g;
}

inline SolverGrid default_grid(const WaveParams& wp, const MediumConfig& cfg) {
  return make_grid(wp, cfg, 64 * wp.M, 128);
}

using BoolGrid = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>;  // nz x nx

/// Complex index of refraction sampled at pixel centers. n equals n_p outside
/// the defect; n_p is built on one cell and tiled, so it is L-periodic exactly.
struct IndexField {
  Eigen::MatrixXcd n, n_p;  // nz x nx
  BoolGrid in_defect;       // pixels where a defect disc covers the center
};

inline IndexField sample_index(const MediumConfig& cfg, const WaveParams& wp, const SolverGrid& g) {
  IndexField f;
  int nc = g.cell_cols();
  f.n_p = Eigen::MatrixXcd::Ones(g.nz, g.nx);
  f.in_defect = BoolGrid::Constant(g.nz, g.nx, false);
  // one cell of the periodic index, centered on the cell that contains x=0
  int c0 = g.cell_of_zero();
  Eigen::MatrixXcd cell = Eigen::MatrixXcd::Ones(g.nz, nc);
  for (int ix = 0; ix < nc; ++ix) {
    double x = g.xs(c0 * nc + ix);
    for (int iz = 0; iz < g.nz; ++iz) {
      double z = g.zs(iz);
      for (const auto& d : cfg.background) {
        double ddx = x - d.cx, ddz = z - d.cy;
        if (ddx * ddx + ddz * ddz < d.r * d.r) cell(iz, ix) = d.n;
      }
    }
  }
  for (int c = 0; c < g.M; ++c) f.n_p.block(0, c * nc, g.nz, nc) = cell;
  f.n = f.n_p;
  for (int ix = 0; ix < g.nx; ++ix) {
    double x = g.xs(ix);
    for (int iz = 0; iz < g.nz; ++iz) {
      double z = g.zs(iz);
      for (const auto& d : cfg.defect) {
        double ddx = x - d.cx, ddz = z - d.cy;
        if (ddx * ddx + ddz * ddz < d.r * d.r) {
          f.n(iz, ix) = d.n;
          f.in_defect(iz, ix) = true;
        }
      }
    }
  }
  return f;
}

/// Region decomposition of one cell and its periodic copies. Cell-scoped masks
/// (omega, O, Oc, Lambda, Dhat) vanish outside the reference cell.
struct RegionMasks {
  BoolGrid Dp;       // all periodic inclusions
  BoolGrid omega;    // the defect
  BoolGrid O;        // components of Dp in the reference cell that meet omega
  BoolGrid Oc;       // the remaining components of Dp in the reference cell
  BoolGrid Lambda;   // O union omega
  BoolGrid Dhat;     // Lambda union Oc
  BoolGrid O_p, Oc_p, Lambda_p, Dhat_p;  // periodic copies over the whole box
};

namespace detail {

inline void roll_union(const BoolGrid& cellmask, BoolGrid& out, int shift_cols) {
  int nz = static_cast<int>(cellmask.rows()), nx = static_cast<int>(cellmask.cols());
  for (int ix = 0; ix < nx; ++ix) {
    int jx = ((ix - shift_cols) % nx + nx) % nx;
    for (int iz = 0; iz < nz; ++iz)
      if (cellmask(iz, jx)) out(iz, ix) = true;
  }
}

// 8-connected component labeling; label 0 = background.
inline Eigen::ArrayXXi label_components(const BoolGrid& m) {
  int nz = static_cast<int>(m.rows()), nx = static_cast<int>(m.cols());
  Eigen::ArrayXXi lab = Eigen::ArrayXXi::Zero(nz, nx);
  int next = 0;
  std::deque<std::pair<int, int>> queue;
  for (int ix = 0; ix < nx; ++ix)
    for (int iz = 0; iz < nz; ++iz) {
      if (!m(iz, ix) || lab(iz, ix) != 0) continue;
      ++next;
      lab(iz, ix) = next;
      queue.emplace_back(iz, ix);
      while (!queue.empty()) {
        auto [z, x] = queue.front();
        queue.pop_front();
        for (int dz = -1; dz <= 1; ++dz)
          for (int dxs = -1; dxs <= 1; ++dxs) {
            int z2 = z + dz, x2 = x + dxs;
            if (z2 < 0 || z2 >= nz || x2 < 0 || x2 >= nx) continue;
            if (m(z2, x2) && lab(z2, x2) == 0) {
              lab(z2, x2) = next;
              queue.emplace_back(z2, x2);
            }
          }
      }
    }
  return lab;
}

inline void check_separation(const MediumConfig& cfg, const WaveParams& wp, const SolverGrid& g) {
  // analytic gaps between all disc pairs (background replicated) must either
  // overlap or exceed two grid cells, otherwise the raster cannot separate them
  double cell = 2.0 * std::max(g.dx, g.dz);
  std::vector<Disc> all;
  for (int m = 0; m < wp.M; ++m) {
    double shift = g.x_lo + (m + 0.5) * wp.L - 0.0;
    (void)shift;
    for (const auto& d : cfg.background) {
      Disc dd = d;
      dd.cx = d.cx + (m - g.cell_of_zero()) * wp.L;
      all.push_back(dd);
    }
  }
  for (const auto& d : cfg.defect) all.push_back(d);
  for (std::size_t i = 0; i < all.size(); ++i)
    for (std::size_t j = i + 1; j < all.size(); ++j) {
      double c = std::hypot(all[i].cx - all[j].cx, all[i].cy - all[j].cy);
      double gap = c - all[i].r - all[j].r;
      if (gap > 0.0 && gap < cell)
        throw grid_error("grid too coarse: inclusion gap below two grid cells");
    }
  for (const auto& d : cfg.defect) {
    double margin = wp.L / 2.0 - (std::abs(d.cx) + d.r);
    if (margin < std::max(g.dx, g.dz))
      throw grid_error("defect closer than one grid cell to the cell boundary");
  }
}

}  // namespace detail

inline RegionMasks region_masks(const MediumConfig& cfg, const WaveParams& wp, const SolverGrid& g) {
  detail::check_separation(cfg, wp, g);
  IndexField f = sample_index(cfg, wp, g);
  RegionMasks rm;
  rm.Dp = (f.n_p.array() != cplx(1.0, 0.0));
  rm.omega = f.in_defect;

  int nc = g.cell_cols(), c0 = g.cell_of_zero();
  auto cell_only = [&](const BoolGrid& m) {
    BoolGrid out = BoolGrid::Constant(g.nz, g.nx, false);
    out.block(0, c0 * nc, g.nz, nc) = m.block(0, c0 * nc, g.nz, nc);
    return out;
  };
  BoolGrid Dp0 = cell_only(rm.Dp);
  Eigen::ArrayXXi lab = detail::label_components(Dp0);
  int ncomp = lab.maxCoeff();
  std::vector<bool> touches(static_cast<std::size_t>(ncomp) + 1, false);
  for (int ix = 0; ix < g.nx; ++ix)
    for (int iz = 0; iz < g.nz; ++iz)
      if (rm.omega(iz, ix) && lab(iz, ix) > 0) touches[static_cast<std::size_t>(lab(iz, ix))] = true;

  rm.O = BoolGrid::Constant(g.nz, g.nx, false);
  rm.Oc = BoolGrid::Constant(g.nz, g.nx, false);
  for (int ix = 0; ix < g.nx; ++ix)
    for (int iz = 0; iz < g.nz; ++iz)
      if (lab(iz, ix) > 0) {
        if (touches[static_cast<std::size_t>(lab(iz, ix))])
          rm.O(iz, ix) = true;
        else
          rm.Oc(iz, ix) = true;
      }
  rm.Lambda = rm.O || rm.omega;
  rm.Dhat = rm.Lambda || rm.Oc;

  auto periodic = [&](const BoolGrid& cellmask) {
    BoolGrid out = BoolGrid::Constant(g.nz, g.nx, false);
    for (int m = 0; m < g.M; ++m) detail::roll_union(cellmask, out, (m - c0) * nc);
    return out;
  };
  rm.O_p = periodic(rm.O);
  rm.Oc_p = periodic(rm.Oc);
  rm.Lambda_p = periodic(rm.Lambda);
  rm.Dhat_p = periodic(rm.Dhat);
  return rm;
}

/// Analytic counterpart of the raster decomposition for disc configurations,
/// used to classify sampling points exactly. Components are unions of
/// overlapping background discs.
struct DiscRegions {
  const MediumConfig* cfg;
  const WaveParams* wp;
  std::vector<int> comp;            // component id per background disc
  std::vector<bool> comp_meets_defect;

  DiscRegions(const MediumConfig& c, const WaveParams& w) : cfg(&c), wp(&w) {
    std::size_t nb = c.background.size();
    comp.resize(nb);
    for (std::size_t i = 0; i < nb; ++i) comp[i] = static_cast<int>(i);
    auto find = [&](int a) {
      while (comp[static_cast<std::size_t>(a)] != a) a = comp[static_cast<std::size_t>(a)];
      return a;
    };
    for (std::size_t i = 0; i < nb; ++i)
      for (std::size_t j = i + 1; j < nb; ++j) {
        double d = std::hypot(c.background[i].cx - c.background[j].cx,
                              c.background[i].cy - c.background[j].cy);
        if (d < c.background[i].r + c.background[j].r)
          comp[static_cast<std::size_t>(find(static_cast<int>(i)))] = find(static_cast<int>(j));
      }
    for (std::size_t i = 0; i < nb; ++i) comp[i] = find(static_cast<int>(i));
    comp_meets_defect.assign(nb, false);
    for (std::size_t i = 0; i < nb; ++i)
      for (const auto& dd : c.defect) {
        double d = std::hypot(c.background[i].cx - dd.cx, c.background[i].cy - dd.cy);
        if (d < c.background[i].r + dd.r) comp_meets_defect[static_cast<std::size_t>(comp[i])] = true;
      }
    for (std::size_t i = 0; i < nb; ++i)
      comp_meets_defect[i] = comp_meets_defect[static_cast<std::size_t>(comp[i])];
  }

  double wrap_cell(double x) const {
    double Lm = wp->L;
    double t = std::remainder(x, Lm);
    return t;
  }
  bool in_omega(double x, double z) const {
    for (const auto& d : cfg->defect)
      if (std::hypot(x - d.cx, z - d.cy) < d.r) return true;
    return false;
  }
  bool in_Dp(double x, double z) const {  // periodic in x
    for (const auto& d : cfg->background)
      if (std::hypot(wrap_cell(x - d.cx), z - d.cy) < d.r) return true;
    return false;
  }
  bool in_O_p(double x, double z) const {
    for (std::size_t i = 0; i < cfg->background.size(); ++i) {
      const auto& d = cfg->background[i];
      if (comp_meets_defect[i] && std::hypot(wrap_cell(x - d.cx), z - d.cy) < d.r) return true;
    }
    return false;
  }
  bool in_Oc_p(double x, double z) const {
    for (std::size_t i = 0; i < cfg->background.size(); ++i) {
      const auto& d = cfg->background[i];
      if (!comp_meets_defect[i] && std::hypot(wrap_cell(x - d.cx), z - d.cy) < d.r) return true;
    }
    return false;
  }
  bool in_omega_p(double x, double z) const {
    for (const auto& d : cfg->defect)
      if (std::hypot(wrap_cell(x - d.cx), z - d.cy) < d.r) return true;
    return false;
  }
  bool in_Dhat_p(double x, double z) const { return in_Dp(x, z) || in_omega_p(x, z); }
};

}  // namespace fdls
