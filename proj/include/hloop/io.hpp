#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "hloop/curvature_field.hpp"
#include "hloop/curve.hpp"
#include "hloop/errors.hpp"
#include "hloop/iso_minimizer.hpp"
#include "hloop/ls_immersed.hpp"
#include "hloop/physics.hpp"

namespace hloop::io {

using json = nlohmann::json;

inline std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string read_text(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_text(const std::filesystem::path& p, const std::string& text) {
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + p.string());
  out << text;
  if (!out) throw Error(ErrorKind::Io, "write failed for " + p.string());
}

inline json read_json(const std::filesystem::path& p) {
  const auto text = read_text(p);
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Io, p.string() + ": " + e.what());
  }
}

inline void write_json(const std::filesystem::path& p, const json& j) { write_text(p, j.dump(2) + "\n"); }

// Wraps structural JSON errors so a malformed document reports its origin.
template <class F>
auto parse_document(const std::string& origin, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Io, origin + ": malformed document (" + e.what() + ")");
  }
}

// Curves: {"period": P, "points": [[x, y], ...]}.
inline json curve_to_json(const ClosedCurve& c) {
  json pts = json::array();
  for (const auto& p : c.samples()) pts.push_back({p.x, p.y});
  return {{"period", c.period()}, {"points", pts}};
}

inline ClosedCurve curve_from_json(const json& j, const std::string& origin = "curve") {
  return parse_document(origin, [&] {
    if (!j.is_object() || !j.contains("points")) throw Error(ErrorKind::Io, origin + ": missing points");
    std::vector<Vec2> pts;
    for (const auto& p : j.at("points")) {
      if (!p.is_array() || p.size() != 2) throw Error(ErrorKind::Io, origin + ": points must be [x, y] pairs");
      pts.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
    }
    return ClosedCurve(std::move(pts), j.value("period", 1.0));
  });
}

inline ClosedCurve read_curve(const std::filesystem::path& p) { return curve_from_json(read_json(p), p.string()); }
inline void write_curve(const std::filesystem::path& p, const ClosedCurve& c) { write_json(p, curve_to_json(c)); }

// Cubic Hermite interpolation of tabulated h(r) with centred slopes; zero beyond the table.
inline RadialFn tabulated_radial(std::vector<double> r, std::vector<double> h) {
  if (r.size() < 2 || r.size() != h.size()) throw Error(ErrorKind::InvalidArgument, "radial table needs matching r and h with at least 2 entries");
  for (std::size_t i = 0; i < r.size(); ++i) {
    if (!std::isfinite(r[i]) || !std::isfinite(h[i])) throw Error(ErrorKind::InvalidArgument, "radial table contains non-finite values");
    if (i > 0 && !(r[i] > r[i - 1])) throw Error(ErrorKind::InvalidArgument, "radial table r must be strictly increasing");
  }
  if (r.front() < 0.0) throw Error(ErrorKind::InvalidArgument, "radial table r must be nonnegative");
  std::vector<double> d(r.size());
  for (std::size_t i = 0; i < r.size(); ++i) {
    const std::size_t a = i == 0 ? 0 : i - 1, b = i + 1 == r.size() ? i : i + 1;
    d[i] = (h[b] - h[a]) / (r[b] - r[a]);
  }
  return [r = std::move(r), h = std::move(h), d = std::move(d)](double s) {
    if (s <= r.front()) return h.front();
    if (s >= r.back()) return 0.0;
    const std::size_t i = static_cast<std::size_t>(std::upper_bound(r.begin(), r.end(), s) - r.begin()) - 1;
    const double w = r[i + 1] - r[i], t = (s - r[i]) / w;
    const double t2 = t * t, t3 = t2 * t;
    return (2 * t3 - 3 * t2 + 1) * h[i] + (t3 - 2 * t2 + t) * w * d[i] + (-2 * t3 + 3 * t2) * h[i + 1] +
           (t3 - t2) * w * d[i + 1];
  };
}

inline RadialCurvature radial_params_from_json(const json& j) {
  const double beta = j.contains("beta") && !j.at("beta").is_null() ? j.at("beta").get<double>()
                                                                     : std::numeric_limits<double>::infinity();
  return RadialCurvature(j.at("A").get<double>(), j.at("gamma").get<double>(), beta, {}, j.value("B", 0.0),
                         j.value("s0", 1.0));
}

inline PeriodicGrid periodic_from_json(const json& j) {
  const std::string type = j.value("type", std::string("periodic_grid"));
  if (type == "periodic_grid") {
    const int m = j.at("m").get<int>();
    return PeriodicGrid(m, j.at("values").get<std::vector<double>>());
  }
  if (type == "periodic_modes") {
    // Σ a cos(2π(kx x + ky y) + phase), sampled on an m×m grid.
    const int m = j.value("m", 256);
    if (m < 8) throw Error(ErrorKind::InvalidArgument, "periodic grid size must be at least 8");
    struct Mode { double kx, ky, a, ph; };
    std::vector<Mode> modes;
    for (const auto& t : j.at("modes")) {
      const Mode md{t.at("kx").get<double>(), t.at("ky").get<double>(), t.at("amplitude").get<double>(), t.value("phase", 0.0)};
      if (md.kx != std::round(md.kx) || md.ky != std::round(md.ky))
        throw Error(ErrorKind::InvalidArgument, "periodic mode wave numbers must be integers");
      modes.push_back(md);
    }
    return PeriodicGrid::sample(
        [&](double x, double y) {
          double v = 0.0;
          for (const auto& md : modes) v += md.a * std::cos(kTwoPi * (md.kx * x + md.ky * y) + md.ph);
          return v;
        },
        m);
  }
  throw Error(ErrorKind::InvalidArgument, "unknown periodic field type '" + type + "'");
}

struct FieldDef {
  CurvatureField field;
  std::optional<RadialCurvature> radial_params;
};

// Field documents:
//   {"type": "constant", "value": c}
//   {"type": "periodic_grid", "m": M, "values": [...], "constant": c}
//   {"type": "periodic_modes", "m": M, "modes": [{"kx", "ky", "amplitude", "phase"}], "constant": c}
//   {"type": "radial", "r": [...], "h": [...], "constant": c}
//   {"type": "radial_params", "A": A, "gamma": γ, "beta": β, "B": B, "s0": s0}
//   {"type": "composite", "constant": c, "periodic": {...}, "radial": {"r": [...], "h": [...]}}
inline FieldDef field_from_json(const json& j, const std::string& origin = "field") {
  return parse_document(origin, [&]() -> FieldDef {
    if (!j.is_object()) throw Error(ErrorKind::Io, origin + ": field document must be an object");
    const std::string type = j.value("type", std::string("composite"));
    const double c = j.value("constant", 0.0);
    const double r_max = j.value("r_max", 50.0);
    if (type == "constant") return {CurvatureField(j.at("value").get<double>()), std::nullopt};
    if (type == "periodic_grid" || type == "periodic_modes")
      return {CurvatureField(c, periodic_from_json(j), std::nullopt), std::nullopt};
    if (type == "radial") {
      auto h = tabulated_radial(j.at("r").get<std::vector<double>>(), j.at("h").get<std::vector<double>>());
      return {CurvatureField(c, std::nullopt, RadialSource{h, r_max, 20000, std::nullopt}), std::nullopt};
    }
    if (type == "radial_params") {
      auto p = radial_params_from_json(j);
      return {CurvatureField::from_radial(p, j.value("r_max", 200.0)), p};
    }
    if (type == "composite") {
      std::optional<PeriodicGrid> g;
      std::optional<RadialSource> r;
      if (j.contains("periodic")) g = periodic_from_json(j.at("periodic"));
      if (j.contains("radial")) {
        const auto& t = j.at("radial");
        r = RadialSource{tabulated_radial(t.at("r").get<std::vector<double>>(), t.at("h").get<std::vector<double>>()),
                         t.value("r_max", r_max), 20000, std::nullopt};
      }
      return {CurvatureField(c, g, r), std::nullopt};
    }
    throw Error(ErrorKind::InvalidArgument, origin + ": unknown field type '" + type + "'");
  });
}

inline FieldDef read_field(const std::filesystem::path& p) { return field_from_json(read_json(p), p.string()); }

inline json field_to_json(const CurvatureField& f) {
  if (f.has_radial()) throw Error(ErrorKind::InvalidArgument, "radial fields are written from their source table");
  if (!f.has_periodic()) return {{"type", "constant"}, {"value", f.constant()}};
  return {{"type", "periodic_grid"}, {"constant", f.constant()}, {"m", f.periodic().m}, {"values", f.periodic().values}};
}

inline json minimize_result_to_json(const MinimizeResult& r) {
  return {{"tau", r.tau},
          {"lambda", r.lambda},
          {"energy", r.energy_value},
          {"curvature_residual", r.curvature_residual},
          {"area_error", r.area_error},
          {"gradient_residual", r.gradient_residual},
          {"speed_variation", r.speed_variation},
          {"iterations", r.iterations},
          {"converged", r.converged},
          {"message", r.message},
          {"simple", is_simple(r.curve).simple}};
}

inline json ls_result_to_json(const LSResult& r) {
  return {{"n", r.n},
          {"orientation", r.orientation},
          {"gamma", r.gamma},
          {"R", r.R},
          {"r", r.r},
          {"r0", r.r0},
          {"r1", r.r1},
          {"search_r0", r.search_r0},
          {"search_r1", r.search_r1},
          {"lambda1", r.lambda1},
          {"lambda2", r.lambda2},
          {"residual", r.residual},
          {"gap_sup", r.gap_sup},
          {"phi_sup", r.phi_sup},
          {"min_radius", r.min_radius},
          {"clear_of_core", r.clear_of_core},
          {"iterations", r.iterations},
          {"bisections", r.bisections},
          {"converged", r.converged},
          {"message", r.message},
          {"trace", r.trace},
          {"phi", r.phi.samples()}};
}

inline LSResult ls_result_from_json(const json& j, const std::string& origin = "ls result") {
  return parse_document(origin, [&] {
    LSResult r;
    r.n = j.at("n").get<int>();
    r.orientation = j.value("orientation", 1);
    r.gamma = j.at("gamma").get<double>();
    r.R = j.at("R").get<double>();
    r.r = j.at("r").get<double>();
    r.r0 = j.value("r0", 0.0);
    r.r1 = j.value("r1", 0.0);
    r.search_r0 = j.value("search_r0", r.r0);
    r.search_r1 = j.value("search_r1", r.r1);
    r.lambda1 = j.at("lambda1").get<double>();
    r.lambda2 = j.at("lambda2").get<double>();
    r.residual = j.value("residual", 0.0);
    r.gap_sup = j.value("gap_sup", 0.0);
    r.phi_sup = j.value("phi_sup", 0.0);
    r.min_radius = j.value("min_radius", 0.0);
    r.clear_of_core = j.value("clear_of_core", false);
    r.iterations = j.value("iterations", std::size_t{0});
    r.bisections = j.value("bisections", std::size_t{0});
    r.converged = j.value("converged", false);
    r.message = j.value("message", std::string());
    r.trace = j.value("trace", std::vector<double>{});
    r.phi = PeriodicScalar(j.at("phi").get<std::vector<double>>());
    return r;
  });
}

inline std::string sweep_csv(const std::vector<SweepRow>& rows) {
  std::string s = "tau,S_H,lambda,residual,area_error,simple,converged\n";
  for (const auto& r : rows)
    s += fmt(r.tau) + "," + fmt(r.S) + "," + fmt(r.lambda) + "," + fmt(r.residual) + "," + fmt(r.area_error) + "," +
         (r.simple ? "1" : "0") + "," + (r.converged ? "1" : "0") + "\n";
  return s;
}

// Plot data: τ vs S_H, τ vs λ, √|τ| vs S̃.
inline std::string sweep_plot_energy(const std::vector<SweepRow>& rows) {
  std::string s = "tau,S_H\n";
  for (const auto& r : rows) s += fmt(r.tau) + "," + fmt(r.S) + "\n";
  return s;
}
inline std::string sweep_plot_lambda(const std::vector<SweepRow>& rows) {
  std::string s = "tau,lambda\n";
  for (const auto& r : rows) s += fmt(r.tau) + "," + fmt(r.lambda) + "\n";
  return s;
}
inline std::string sweep_plot_scaled(const std::vector<SweepRow>& rows) {
  std::string s = "sqrt_tau,S_tilde\n";
  for (const auto& r : rows) s += fmt(std::sqrt(std::abs(r.tau))) + "," + fmt(r.S_tilde) + "\n";
  return s;
}

inline std::string trajectory_csv(const std::vector<TrajectorySample>& t) {
  std::string s = "t,x,y,z\n";
  for (const auto& p : t) s += fmt(p.t) + "," + fmt(p.x) + "," + fmt(p.y) + "," + fmt(p.z) + "\n";
  return s;
}

inline std::string points_csv(const ClosedCurve& c) {
  std::string s = "x,y\n";
  for (const auto& p : c.samples()) s += fmt(p.x) + "," + fmt(p.y) + "\n";
  return s;
}

inline void write_obj(const std::filesystem::path& p, const Mesh& m) {
  std::ostringstream os;
  hloop::write_obj(os, m);
  write_text(p, os.str());
}

}  // namespace hloop::io
