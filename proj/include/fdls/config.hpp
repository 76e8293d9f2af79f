#pragma once

#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>

#include "fdls/geometry.hpp"

namespace fdls {

struct GlsmParams {
  double alpha = 0.0;  // 0 selects the default delta * ||N||_2
  double delta = 0.01;
  std::uint64_t seed = 1;
};

struct ProjectConfig {
  WaveParams wave;
  MediumConfig medium;
  int nx_per_cell = 64;
  int nz = 128;
  GlsmParams glsm;
  std::uint64_t content_hash = 0;

  SolverGrid grid() const { return make_grid(wave, medium, nx_per_cell * wave.M, nz); }
};

namespace detail {

inline std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

inline double to_num(const std::string& s, const std::string& where) {
  try {
    std::size_t pos = 0;
    double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (...) {
    throw config_error({"cannot parse number '" + s + "' in " + where});
  }
}

// accepts `x` or `[re, im]`
inline cplx to_cplx(const std::string& s, const std::string& where) {
  std::string t = trim(s);
  if (!t.empty() && t.front() == '[') {
    if (t.back() != ']') throw config_error({"unterminated array in " + where});
    std::string body = t.substr(1, t.size() - 2);
    std::size_t comma = body.find(',');
    if (comma == std::string::npos) throw config_error({"expected two entries in " + where});
    return {to_num(trim(body.substr(0, comma)), where),
            to_num(trim(body.substr(comma + 1)), where)};
  }
  return {to_num(t, where), 0.0};
}

inline std::pair<double, double> to_pair(const std::string& s, const std::string& where) {
  cplx c = to_cplx(s, where);
  return {c.real(), c.imag()};
}

}  // namespace detail

/// Minimal TOML reader for the fixed configuration schema: [wave], [grid],
/// [glsm] tables and [[background.disc]] / [[defect.disc]] arrays of tables.
inline ProjectConfig parse_config_text(const std::string& text) {
  ProjectConfig pc;
  pc.content_hash = fnv1a64(text.data(), text.size());
  std::istringstream in(text);
  std::string line, section;
  Disc* current_disc = nullptr;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    std::string where = "line " + std::to_string(lineno);
    if (line.front() == '[') {
      if (line.rfind("[[", 0) == 0) {
        std::string name = detail::trim(line.substr(2, line.size() - 4));
        if (name == "background.disc") {
          pc.medium.background.emplace_back();
          current_disc = &pc.medium.background.back();
        } else if (name == "defect.disc") {
          pc.medium.defect.emplace_back();
          current_disc = &pc.medium.defect.back();
        } else {
          throw config_error({"unknown table array '" + name + "' at " + where});
        }
        section = "disc";
      } else {
        section = detail::trim(line.substr(1, line.size() - 2));
        current_disc = nullptr;
        if (section != "wave" && section != "grid" && section != "glsm")
          throw config_error({"unknown section '" + section + "' at " + where});
      }
      continue;
    }
    std::size_t eq = line.find('=');
    if (eq == std::string::npos) throw config_error({"expected key = value at " + where});
    std::string key = detail::trim(line.substr(0, eq));
    std::string val = detail::trim(line.substr(eq + 1));
    if (section == "wave") {
      if (key == "k") pc.wave.k = detail::to_num(val, where);
      else if (key == "L") pc.wave.L = detail::to_num(val, where);
      else if (key == "M") pc.wave.M = static_cast<int>(detail::to_num(val, where));
      else if (key == "h") pc.wave.h = detail::to_num(val, where);
      else if (key == "n_min") pc.wave.n_min = static_cast<int>(detail::to_num(val, where));
      else if (key == "n_max") pc.wave.n_max = static_cast<int>(detail::to_num(val, where));
      else if (key == "q") pc.wave.q = static_cast<int>(detail::to_num(val, where));
      else throw config_error({"unknown wave key '" + key + "' at " + where});
    } else if (section == "grid") {
      if (key == "nx_per_cell") pc.nx_per_cell = static_cast<int>(detail::to_num(val, where));
      else if (key == "ny") pc.nz = static_cast<int>(detail::to_num(val, where));
      else throw config_error({"unknown grid key '" + key + "' at " + where});
    } else if (section == "glsm") {
      if (key == "alpha") pc.glsm.alpha = detail::to_num(val, where);
      else if (key == "delta") pc.glsm.delta = detail::to_num(val, where);
      else if (key == "seed") pc.glsm.seed = static_cast<std::uint64_t>(detail::to_num(val, where));
      else throw config_error({"unknown glsm key '" + key + "' at " + where});
    } else if (section == "disc" && current_disc) {
      if (key == "center") {
        auto [x, y] = detail::to_pair(val, where);
        current_disc->cx = x;
        current_disc->cy = y;
      } else if (key == "radius") {
        current_disc->r = detail::to_num(val, where);
      } else if (key == "n") {
        current_disc->n = detail::to_cplx(val, where);
      } else {
        throw config_error({"unknown disc key '" + key + "' at " + where});
      }
    } else {
      throw config_error({"key '" + key + "' outside any section at " + where});
    }
  }
  validate_config(pc.medium, pc.wave);
  return pc;
}

inline ProjectConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw io_error("config not found: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

}  // namespace fdls
