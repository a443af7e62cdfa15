#pragma once

#include <array>
#include <cmath>
#include <functional>
#include <ostream>
#include <string>
#include <vector>

#include "hloop/curve.hpp"
#include "hloop/energy.hpp"
#include "hloop/errors.hpp"

namespace hloop {

using PlaneFn = std::function<double(Vec2)>;

struct OdeSample {
  double t = 0.0;
  Vec2 u, du;
};

struct OdeOptions {
  std::size_t steps = 4000;
  bool refine_length = false;  // re-integrate once with the measured length
  double max_speed_drift = 1e-6;
};

struct OdeResult {
  std::vector<OdeSample> trajectory;  // t ∈ [0, 1]
  double length = 0.0;                // length used for the final integration
  double measured_length = 0.0;       // ∫|u̇| along the trajectory
  double closure_defect = 0.0;        // |u(1) − u(0)| + |u̇(1) − u̇(0)|
  double speed_drift = 0.0;           // max | |u̇|/L − 1 |
};

namespace detail {

inline OdeResult integrate_once(const PlaneFn& h, double lambda, Vec2 u0, Vec2 v0, double len, const OdeOptions& o) {
  const std::size_t n = o.steps;
  const double dt = 1.0 / static_cast<double>(n);
  auto rhs = [&](Vec2 u, Vec2 v) { return len * (h(u) - lambda) * rot(v); };
  OdeResult r;
  r.length = len;
  r.trajectory.reserve(n + 1);
  Vec2 u = u0, v = len * v0;
  r.trajectory.push_back({0.0, u, v});
  double ml = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const Vec2 k1u = v, k1v = rhs(u, v);
    const Vec2 k2u = v + 0.5 * dt * k1v, k2v = rhs(u + 0.5 * dt * k1u, k2u);
    const Vec2 k3u = v + 0.5 * dt * k2v, k3v = rhs(u + 0.5 * dt * k2u, k3u);
    const Vec2 k4u = v + dt * k3v, k4v = rhs(u + dt * k3u, k4u);
    const double s0 = norm(v);
    u += dt / 6.0 * (k1u + 2.0 * k2u + 2.0 * k3u + k4u);
    v += dt / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
    ml += 0.5 * dt * (s0 + norm(v));
    r.trajectory.push_back({static_cast<double>(k + 1) * dt, u, v});
    r.speed_drift = std::max(r.speed_drift, std::abs(norm(v) / len - 1.0));
  }
  r.measured_length = ml;
  r.closure_defect = norm(u - u0) + norm(v - len * v0);
  return r;
}

}  // namespace detail

// ü = L (H(u) − λ) iu̇ on t ∈ [0, 1] with u(0) = u₀, u̇(0) = L v₀.
inline OdeResult integrate_curvature_ode(const PlaneFn& h, double lambda, Vec2 u0, Vec2 v0, double length,
                                         const OdeOptions& opts = {}) {
  if (std::abs(norm(v0) - 1.0) > 1e-12) throw Error(ErrorKind::InvalidArgument, "initial direction must be a unit vector");
  if (!(length > 0.0) || !std::isfinite(length)) throw Error(ErrorKind::InvalidArgument, "length must be positive");
  if (opts.steps < 1) throw Error(ErrorKind::InvalidArgument, "step count must be positive");
  auto r = detail::integrate_once(h, lambda, u0, v0, length, opts);
  if (opts.refine_length) r = detail::integrate_once(h, lambda, u0, v0, r.measured_length, opts);
  if (r.speed_drift > opts.max_speed_drift)
    throw Error(ErrorKind::StepTooLarge, "speed drift " + std::to_string(r.speed_drift) + " exceeds tolerance");
  return r;
}

inline OdeResult integrate_curvature_ode(const EnergyContext& ctx, double lambda, Vec2 u0, Vec2 v0, double length,
                                         const OdeOptions& opts = {}) {
  return integrate_curvature_ode([&ctx](Vec2 p) { return ctx.curvature_at(p); }, lambda, u0, v0, length, opts);
}

// Initial data of a closed curve: start point, unit tangent, length.
inline OdeResult integrate_from_curve(const EnergyContext& ctx, const ClosedCurve& c, double lambda,
                                      const OdeOptions& opts = {}) {
  const auto d = derivative(c, 1);
  return integrate_curvature_ode(ctx, lambda, c[0], d[0] / norm(d[0]), length(c), opts);
}

struct MagneticConfig {
  PlaneFn b = [](Vec2) { return 1.0; };
  double charge = 1.0;
  double mass = 1.0;
  double speed = 1.0;        // transverse
  double axial_speed = 0.0;
  Vec2 position{0.0, 0.0};
  Vec2 direction{1.0, 0.0};
  double z0 = 0.0;
  double duration = 1.0;
  std::size_t steps = 4000;

  void validate() const {
    if (!(mass > 0.0)) throw Error(ErrorKind::InvalidArgument, "mass must be positive");
    if (!(speed > 0.0)) throw Error(ErrorKind::InvalidArgument, "transverse speed must be positive");
    if (!(duration > 0.0)) throw Error(ErrorKind::InvalidArgument, "duration must be positive");
    if (std::abs(norm(direction) - 1.0) > 1e-12) throw Error(ErrorKind::InvalidArgument, "direction must be a unit vector");
    if (steps < 1) throw Error(ErrorKind::InvalidArgument, "step count must be positive");
  }
};

struct TrajectorySample {
  double t = 0.0;
  double x = 0.0, y = 0.0, z = 0.0;
};

struct MagneticResult {
  std::vector<TrajectorySample> samples;
  double closure_defect = 0.0;  // transverse, as for the curvature ODE
  double speed_drift = 0.0;
};

// m P̈⊥ = −e b(P⊥) iṖ⊥ is the curvature ODE with H = −e b/(m v); the axial motion is uniform.
inline MagneticResult simulate_magnetic(const MagneticConfig& cfg) {
  cfg.validate();
  const double k = -cfg.charge / (cfg.mass * cfg.speed);
  const PlaneFn h = [&cfg, k](Vec2 p) { return k * cfg.b(p); };
  OdeOptions o;
  o.steps = cfg.steps;
  auto r = integrate_curvature_ode(h, 0.0, cfg.position, cfg.direction, cfg.speed * cfg.duration, o);
  MagneticResult m;
  m.closure_defect = r.closure_defect;
  m.speed_drift = r.speed_drift;
  m.samples.reserve(r.trajectory.size());
  for (const auto& s : r.trajectory) {
    const double t = s.t * cfg.duration;
    m.samples.push_back({t, s.u.x, s.u.y, cfg.z0 + cfg.axial_speed * t});
  }
  return m;
}

inline double gyroradius(double mass, double speed, double charge, double b) {
  return mass * speed / (std::abs(charge) * std::abs(b));
}

// Field b = −m v (H − λ)/e whose orbits are the (H − λ)-loops.
inline PlaneFn magnetic_field_for_loop(const EnergyContext& ctx, double lambda, double mass, double speed, double charge) {
  return [&ctx, lambda, mass, speed, charge](Vec2 p) { return -mass * speed * (ctx.curvature_at(p) - lambda) / charge; };
}

struct Vec3 {
  double x = 0.0, y = 0.0, z = 0.0;
};

inline Vec3 operator-(Vec3 a, Vec3 b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
inline Vec3 operator+(Vec3 a, Vec3 b) { return {a.x + b.x, a.y + b.y, a.z + b.z}; }
inline Vec3 operator*(double s, Vec3 a) { return {s * a.x, s * a.y, s * a.z}; }
inline double dot(Vec3 a, Vec3 b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
inline Vec3 cross(Vec3 a, Vec3 b) { return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x}; }
inline double norm(Vec3 a) { return std::sqrt(dot(a, a)); }

// Vertices are indexed i + j·n_theta, i along the curve, j along r.
struct Mesh {
  std::size_t n_theta = 0, n_r = 0;
  std::vector<Vec3> vertices;
  std::vector<std::array<std::size_t, 3>> faces;

  const Vec3& at(std::size_t i, std::size_t j) const { return vertices[(i % n_theta) + j * n_theta]; }
};

inline void write_obj(std::ostream& os, const Mesh& m) {
  os.precision(17);
  for (const auto& v : m.vertices) os << "v " << v.x << ' ' << v.y << ' ' << v.z << '\n';
  for (const auto& f : m.faces) os << "f " << f[0] + 1 << ' ' << f[1] + 1 << ' ' << f[2] + 1 << '\n';
}

// U(θ, r) = (u₁(θ), u₂(θ), log r) with θ the arclength of the curve.
inline Mesh lift_to_cylinder(const ClosedCurve& curve, double r_min, double r_max, std::size_t n_theta, std::size_t n_r) {
  if (!(r_min > 0.0) || !(r_max > r_min)) throw Error(ErrorKind::InvalidArgument, "radius range must satisfy 0 < r_min < r_max");
  if (n_theta < 16 || n_theta % 2 != 0 || n_r < 2) throw Error(ErrorKind::InvalidArgument, "mesh grid too small");
  require_regular(curve);
  const auto c = reparametrize_constant_speed(curve);
  const auto pts = spectral::resample(c.samples(), n_theta);
  Mesh m;
  m.n_theta = n_theta;
  m.n_r = n_r;
  m.vertices.reserve(n_theta * n_r);
  for (std::size_t j = 0; j < n_r; ++j) {
    const double r = r_min * std::pow(r_max / r_min, static_cast<double>(j) / static_cast<double>(n_r - 1));
    const double z = j + 1 == n_r ? std::log(r_max) : std::log(r);
    for (std::size_t i = 0; i < n_theta; ++i) m.vertices.push_back({pts[i].x, pts[i].y, z});
  }
  for (std::size_t j = 0; j + 1 < n_r; ++j)
    for (std::size_t i = 0; i < n_theta; ++i) {
      const std::size_t a = i + j * n_theta, b = (i + 1) % n_theta + j * n_theta;
      const std::size_t c2 = a + n_theta, d = b + n_theta;
      m.faces.push_back({a, b, d});
      m.faces.push_back({a, d, c2});
    }
  return m;
}

// max |U_r · U_θ| / (|U_r||U_θ|) by central differences at interior rows.
inline double conformality_residual(const Mesh& m) {
  double worst = 0.0;
  for (std::size_t j = 1; j + 1 < m.n_r; ++j)
    for (std::size_t i = 0; i < m.n_theta; ++i) {
      const Vec3 ut = m.at(i + 1, j) - m.at(i + m.n_theta - 1, j);
      const Vec3 ur = m.at(i, j + 1) - m.at(i, j - 1);
      worst = std::max(worst, std::abs(dot(ut, ur)) / (norm(ut) * norm(ur)));
    }
  return worst;
}

// Mean curvature at interior vertices from finite-difference fundamental forms,
// 2𝓗 = (GL − 2FM + EN)/(EG − F²), with the normal U_r × U_θ.
inline std::vector<double> mesh_mean_curvature(const Mesh& m) {
  std::vector<double> out;
  for (std::size_t j = 1; j + 1 < m.n_r; ++j)
    for (std::size_t i = 0; i < m.n_theta; ++i) {
      const std::size_t ip = i + 1, im = i + m.n_theta - 1;
      const Vec3 c = m.at(i, j);
      const Vec3 ut = 0.5 * (m.at(ip, j) - m.at(im, j));
      const Vec3 ur = 0.5 * (m.at(i, j + 1) - m.at(i, j - 1));
      const Vec3 utt = m.at(ip, j) - 2.0 * c + m.at(im, j);
      const Vec3 urr = m.at(i, j + 1) - 2.0 * c + m.at(i, j - 1);
      const Vec3 utr = 0.25 * (m.at(ip, j + 1) - m.at(ip, j - 1) - m.at(im, j + 1) + m.at(im, j - 1));
      Vec3 nn = cross(ur, ut);
      nn = (1.0 / norm(nn)) * nn;
      const double e = dot(ut, ut), f = dot(ut, ur), g = dot(ur, ur);
      const double l = dot(utt, nn), mm = dot(utr, nn), n2 = dot(urr, nn);
      out.push_back(0.5 * (g * l - 2 * f * mm + e * n2) / (e * g - f * f));
    }
  return out;
}

struct SolutionReport {
  double speed_variation = 0.0;
  double curvature_residual = 0.0;  // sup |K − H + λ|
  double ode_residual = 0.0;        // sup |ü − L(H − λ) iu̇| / (L/P)²
  double gradient_norm = 0.0;       // sup |∇(E_H − λA)| / (L/P)
  bool ok(double tol) const {
    return speed_variation <= tol && curvature_residual <= tol && ode_residual <= tol && gradient_norm <= tol;
  }
};

inline SolutionReport verify_solution(const ClosedCurve& c, const EnergyContext& ctx, double lambda) {
  SolutionReport r;
  const auto d1 = derivative(c, 1), d2 = derivative(c, 2);
  const auto k = curvature(c);
  const double len = length(c), p = c.period();
  const double v = len / p;
  r.speed_variation = speed_variation(c);
  auto g = energy_gradient(c, ctx);
  for (std::size_t j = 0; j < c.size(); ++j) {
    const double h = ctx.curvature_at(c[j]);
    r.curvature_residual = std::max(r.curvature_residual, std::abs(k[j] - h + lambda));
    r.ode_residual = std::max(r.ode_residual, norm(d2[j] - len / p * (h - lambda) * rot(d1[j])) / (v * v));
    r.gradient_norm = std::max(r.gradient_norm, norm(g[j] - lambda * rot(d1[j])) / v);
  }
  return r;
}

}  // namespace hloop
