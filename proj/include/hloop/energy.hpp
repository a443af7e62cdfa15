#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <span>
#include <vector>

#include "hloop/curvature_field.hpp"
#include "hloop/curve.hpp"

namespace hloop {

// A field together with its vector potential.
class EnergyContext {
 public:
  EnergyContext() = default;
  explicit EnergyContext(CurvatureField field) : field_(std::move(field)), potential_(field_) {}

  const CurvatureField& field() const { return field_; }
  const VectorPotential& potential() const { return potential_; }

  // H as seen by the energy: divergence of the interpolated potential.
  double curvature_at(Vec2 p) const { return potential_.value_div(p).second; }

 private:
  CurvatureField field_;
  VectorPotential potential_;
};

inline double pairing(std::span<const Vec2> a, std::span<const Vec2> b, double period) {
  double s = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) s += dot(a[j], b[j]);
  return s * period / static_cast<double>(a.size());
}

inline double anisotropic_area(const ClosedCurve& c, const EnergyContext& ctx) {
  auto d = derivative(c, 1);
  double s = 0.0;
  for (std::size_t j = 0; j < d.size(); ++j) s += dot(ctx.potential().value(c[j]), rot(d[j]));
  return s * c.step();
}

// A_{H;τ}(u) = A_H(τu)/τ.
inline double scaled_anisotropic_area(const ClosedCurve& c, const EnergyContext& ctx, double tau) {
  std::vector<Vec2> s(c.samples().begin(), c.samples().end());
  for (auto& p : s) p *= tau;
  return anisotropic_area(ClosedCurve(std::move(s), c.period()), ctx) / tau;
}

inline double energy(const ClosedCurve& c, const EnergyContext& ctx) {
  return length(c) + anisotropic_area(c, ctx);
}

// −∫ ω_u(p) H(p) dp by horizontal scanlines, with ω_u counted positive for counterclockwise
// loops; the sign matches the signed-area convention ½∫u·iu̇.
// Scanlines: the winding number is piecewise constant
// along each line and the field is integrated exactly-in-x with Gauss–Legendre panels.
inline double anisotropic_area_by_winding(const ClosedCurve& c, const CurvatureField& field, std::size_t rows = 4096) {
  const std::size_t fine = std::max<std::size_t>(c.size(), 8192);
  const auto pts = c.size() < fine ? spectral::resample(c.samples(), fine) : std::vector<Vec2>(c.samples().begin(), c.samples().end());
  double ylo = pts[0].y, yhi = pts[0].y, xlo = pts[0].x, xhi = pts[0].x;
  for (const auto& p : pts) {
    ylo = std::min(ylo, p.y); yhi = std::max(yhi, p.y);
    xlo = std::min(xlo, p.x); xhi = std::max(xhi, p.x);
  }
  if (yhi <= ylo || xhi <= xlo) return 0.0;
  static constexpr std::array<double, 4> gx = {-0.8611363115940526, -0.3399810435848563, 0.3399810435848563, 0.8611363115940526};
  static constexpr std::array<double, 4> gw = {0.3478548451374538, 0.6521451548625461, 0.6521451548625461, 0.3478548451374538};
  const double dy = (yhi - ylo) / static_cast<double>(rows);
  const double panel = (xhi - xlo) / 64.0;
  const std::size_t n = pts.size();
  std::vector<std::pair<double, int>> xs;
  double total = 0.0;
  for (std::size_t r = 0; r < rows; ++r) {
    const double y = ylo + (static_cast<double>(r) + 0.5) * dy;
    xs.clear();
    for (std::size_t j = 0; j < n; ++j) {
      const Vec2 a = pts[j], b = pts[(j + 1) % n];
      int s = 0;
      if (a.y <= y && b.y > y) s = 1;
      else if (b.y <= y && a.y > y) s = -1;
      if (s == 0) continue;
      xs.emplace_back(a.x + (y - a.y) * (b.x - a.x) / (b.y - a.y), s);
    }
    std::sort(xs.begin(), xs.end());
    int w = 0;
    for (const auto& x : xs) w += x.second;
    double line = 0.0;
    for (std::size_t k = 0; k + 1 < xs.size(); ++k) {
      w -= xs[k].second;
      if (w == 0) continue;
      const double a = xs[k].first, b = xs[k + 1].first;
      const int pieces = std::max(1, static_cast<int>(std::ceil((b - a) / panel)));
      const double hw = (b - a) / pieces;
      double seg = 0.0;
      for (int q = 0; q < pieces; ++q) {
        const double mid = a + (q + 0.5) * hw;
        for (std::size_t g = 0; g < gx.size(); ++g) seg += gw[g] * field.value({mid + 0.5 * hw * gx[g], y});
      }
      line += w * seg * 0.5 * hw;
    }
    total += line;
  }
  return -total * dy;
}

// L²(0,T) representative of E_H'(u): −d/dt(u̇/|u̇|) + H(u) iu̇.
inline std::vector<Vec2> energy_gradient(const ClosedCurve& c, const EnergyContext& ctx) {
  auto d = derivative(c, 1);
  std::vector<double> s(d.size());
  for (std::size_t j = 0; j < d.size(); ++j) s[j] = norm(d[j]);
  require_regular(c, s);
  std::vector<Vec2> t(d.size());
  for (std::size_t j = 0; j < d.size(); ++j) t[j] = d[j] / s[j];
  auto dt = spectral::derivative(t, c.period(), 1);
  std::vector<Vec2> g(d.size());
  for (std::size_t j = 0; j < d.size(); ++j) g[j] = ctx.curvature_at(c[j]) * rot(d[j]) - dt[j];
  return g;
}

// ∫ (H − K)(V · iu̇) dt.
inline double shape_derivative(const ClosedCurve& c, const EnergyContext& ctx, std::span<const Vec2> v) {
  if (v.size() != c.size()) throw Error(ErrorKind::InvalidArgument, "variation size mismatch");
  auto d = derivative(c, 1);
  auto k = curvature(c);
  double s = 0.0;
  for (std::size_t j = 0; j < d.size(); ++j) s += (ctx.curvature_at(c[j]) - k[j]) * dot(v[j], rot(d[j]));
  return s * c.step();
}

}  // namespace hloop
