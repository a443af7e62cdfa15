#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "hloop/errors.hpp"
#include "hloop/geometry.hpp"
#include "hloop/spectral.hpp"

namespace hloop {

// Uniformly sampled closed planar curve; samples sit at t_j = period·j/N.
class ClosedCurve {
 public:
  ClosedCurve() = default;
  explicit ClosedCurve(std::vector<Vec2> samples, double period = 1.0)
      : period_(period), samples_(std::move(samples)) {
    if (!(period_ > 0.0) || !std::isfinite(period_))
      throw Error(ErrorKind::InvalidArgument, "curve period must be positive");
    if (samples_.size() < 16 || samples_.size() % 2 != 0)
      throw Error(ErrorKind::InvalidArgument,
                  "curve needs an even number of samples >= 16, got " + std::to_string(samples_.size()));
    for (const auto& p : samples_)
      if (!is_finite(p)) throw Error(ErrorKind::InvalidArgument, "curve sample is not finite");
  }

  template <class F>
  static ClosedCurve from_function(F&& f, std::size_t n, double period = 1.0) {
    std::vector<Vec2> s(n);
    for (std::size_t j = 0; j < n; ++j) s[j] = f(period * static_cast<double>(j) / static_cast<double>(n));
    return ClosedCurve(std::move(s), period);
  }

  double period() const { return period_; }
  std::size_t size() const { return samples_.size(); }
  std::span<const Vec2> samples() const { return samples_; }
  const Vec2& operator[](std::size_t j) const { return samples_[j]; }
  double parameter(std::size_t j) const {
    return period_ * static_cast<double>(j) / static_cast<double>(samples_.size());
  }
  double step() const { return period_ / static_cast<double>(samples_.size()); }

 private:
  double period_ = 1.0;
  std::vector<Vec2> samples_;
};

inline std::vector<Vec2> derivative(const ClosedCurve& c, int order) {
  if (order < 1 || order > 3) throw Error(ErrorKind::InvalidArgument, "derivative order must be 1, 2 or 3");
  return spectral::derivative(c.samples(), c.period(), order);
}

inline Vec2 mean_point(const ClosedCurve& c) {
  Vec2 m;
  for (const auto& p : c.samples()) m += p;
  return m / static_cast<double>(c.size());
}

inline std::vector<double> speed(const ClosedCurve& c) {
  auto d = derivative(c, 1);
  std::vector<double> s(d.size());
  for (std::size_t j = 0; j < d.size(); ++j) s[j] = norm(d[j]);
  return s;
}

inline double length(const ClosedCurve& c) {
  double sum = 0.0;
  for (double v : speed(c)) sum += v;
  return sum * c.step();
}

inline double signed_area(const ClosedCurve& c) {
  auto d = derivative(c, 1);
  const Vec2 m = mean_point(c);
  double sum = 0.0;
  for (std::size_t j = 0; j < d.size(); ++j) sum += dot(c[j] - m, rot(d[j]));
  return 0.5 * sum * c.step();
}

inline double dirichlet(const ClosedCurve& c) {
  auto d = derivative(c, 1);
  double sum = 0.0;
  for (const auto& v : d) sum += norm2(v);
  return std::sqrt(c.period() * sum * c.step());
}

inline double regularity_threshold(const ClosedCurve& c) { return 1e-8 * length(c) / c.period(); }

inline void require_regular(const ClosedCurve& c, std::span<const double> spd) {
  double total = 0.0, lo = std::numeric_limits<double>::infinity();
  for (double v : spd) { total += v; lo = std::min(lo, v); }
  const double eps = 1e-8 * total * c.step() / c.period();
  if (!(lo > eps)) throw Error(ErrorKind::DegenerateSpeed, "curve speed vanishes (min |u'| = " + std::to_string(lo) + ")");
}

inline void require_regular(const ClosedCurve& c) {
  auto s = speed(c);
  require_regular(c, s);
}

inline std::vector<double> curvature(const ClosedCurve& c) {
  auto d1 = derivative(c, 1);
  auto d2 = derivative(c, 2);
  std::vector<double> s(d1.size());
  for (std::size_t j = 0; j < d1.size(); ++j) s[j] = norm(d1[j]);
  require_regular(c, s);
  std::vector<double> k(d1.size());
  for (std::size_t j = 0; j < d1.size(); ++j) k[j] = cross(d1[j], d2[j]) / (s[j] * s[j] * s[j]);
  return k;
}

inline double speed_variation(const ClosedCurve& c) {
  auto s = speed(c);
  double lo = *std::min_element(s.begin(), s.end());
  double hi = *std::max_element(s.begin(), s.end());
  double mean = 0.0;
  for (double v : s) mean += v;
  mean /= static_cast<double>(s.size());
  return mean > 0.0 ? (hi - lo) / mean : 0.0;
}

inline double diameter_bound(std::span<const Vec2> pts) {
  Vec2 lo{std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity()};
  Vec2 hi = -lo;
  for (const auto& p : pts) {
    lo = {std::min(lo.x, p.x), std::min(lo.y, p.y)};
    hi = {std::max(hi.x, p.x), std::max(hi.y, p.y)};
  }
  return norm(hi - lo);
}

inline double point_segment_distance(Vec2 p, Vec2 a, Vec2 b) {
  const Vec2 ab = b - a;
  const double l2 = norm2(ab);
  double s = l2 > 0.0 ? std::clamp(dot(p - a, ab) / l2, 0.0, 1.0) : 0.0;
  return norm(p - (a + s * ab));
}

// Signed crossing count of the sample polyline about p.
inline int polyline_winding(std::span<const Vec2> pts, Vec2 p) {
  int w = 0;
  const std::size_t n = pts.size();
  for (std::size_t j = 0; j < n; ++j) {
    const Vec2 a = pts[j], b = pts[(j + 1) % n];
    if (a.y <= p.y) {
      if (b.y > p.y && cross(b - a, p - a) > 0.0) ++w;
    } else {
      if (b.y <= p.y && cross(b - a, p - a) < 0.0) --w;
    }
  }
  return w;
}

inline int winding_number(const ClosedCurve& c, Vec2 p) {
  const auto pts = c.samples();
  const double tol = 1e-10 * std::max(diameter_bound(pts), 1e-300);
  for (std::size_t j = 0; j < pts.size(); ++j)
    if (point_segment_distance(p, pts[j], pts[(j + 1) % pts.size()]) <= tol)
      throw Error(ErrorKind::PointOnCurve, "point lies on the curve");
  return polyline_winding(pts, p);
}

// Number of turns of the tangent vector.
inline int turning_number(const ClosedCurve& c) {
  auto d = derivative(c, 1);
  require_regular(c);
  double total = 0.0;
  for (std::size_t j = 0; j < d.size(); ++j) {
    const Vec2 a = d[j], b = d[(j + 1) % d.size()];
    total += std::atan2(cross(a, b), dot(a, b));
  }
  return static_cast<int>(std::lround(total / kTwoPi));
}

inline ClosedCurve reparametrize_constant_speed(const ClosedCurve& c) {
  ClosedCurve cur = c;
  const std::size_t n = c.size();
  const double period = c.period();
  double prev_var = std::numeric_limits<double>::infinity();
  for (int pass = 0; pass < 4; ++pass) {
    auto spd = speed(cur);
    require_regular(cur, spd);
    double mean = 0.0;
    for (double v : spd) mean += v;
    mean /= static_cast<double>(n);
    const double var = (*std::max_element(spd.begin(), spd.end()) - *std::min_element(spd.begin(), spd.end())) / mean;
    if (var < 1e-13 || var >= prev_var) break;
    prev_var = var;

    // Arclength s(t) = mean·t + periodic part obtained by spectral integration.
    std::vector<spectral::cplx> z(spd.begin(), spd.end());
    fft::forward(z);
    for (std::size_t k = 0; k < n; ++k) {
      const int f = fft::frequency(k, n);
      if (f == 0 || (k == n / 2)) { z[k] = 0.0; continue; }
      z[k] /= spectral::cplx(0.0, kTwoPi * f / period) * static_cast<double>(n);
    }
    fft::inverse(z);
    std::vector<double> periodic(n);
    for (std::size_t j = 0; j < n; ++j) periodic[j] = z[j].real();
    const auto sigma = spectral::TrigSeries::from_scalars(periodic, period);
    const auto rate = spectral::TrigSeries::from_scalars(spd, period);
    const auto shape = spectral::TrigSeries::from_points(cur.samples(), period);

    std::vector<Vec2> out(n);
    const double s0 = sigma.scalar(0.0);
    for (std::size_t j = 0; j < n; ++j) {
      const double tj = period * static_cast<double>(j) / static_cast<double>(n);
      const double target = mean * tj;
      double t = tj;
      for (int it = 0; it < 30; ++it) {
        const double g = mean * t + sigma.scalar(t) - s0 - target;
        const double dg = rate.scalar(t);
        const double dt = g / dg;
        t -= dt;
        if (std::abs(dt) < 1e-15 * period) break;
      }
      out[j] = shape.point(t);
    }
    cur = ClosedCurve(std::move(out), period);
  }
  return cur;
}

struct SimplicityReport {
  bool simple = true;
  std::vector<std::pair<double, double>> intersections;
};

// Self-intersections of the sample polyline, found with a uniform bucket grid.
inline SimplicityReport is_simple(const ClosedCurve& c) {
  const auto pts = c.samples();
  const std::size_t n = pts.size();
  const double diam = diameter_bound(pts);
  const double eps = 1e-10 * diam;
  SimplicityReport rep;
  if (diam == 0.0) return rep;

  double mean_len = 0.0;
  Vec2 lo{std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity()};
  for (std::size_t j = 0; j < n; ++j) {
    mean_len += norm(pts[(j + 1) % n] - pts[j]);
    lo = {std::min(lo.x, pts[j].x), std::min(lo.y, pts[j].y)};
  }
  mean_len /= static_cast<double>(n);
  const double cell = std::max(2.0 * mean_len, diam / 4096.0);

  std::unordered_map<std::int64_t, std::vector<std::uint32_t>> buckets;
  auto key = [](std::int64_t i, std::int64_t k) { return (i << 32) ^ (k & 0xffffffff); };
  for (std::size_t j = 0; j < n; ++j) {
    const Vec2 a = pts[j], b = pts[(j + 1) % n];
    const auto i0 = static_cast<std::int64_t>(std::floor((std::min(a.x, b.x) - eps - lo.x) / cell));
    const auto i1 = static_cast<std::int64_t>(std::floor((std::max(a.x, b.x) + eps - lo.x) / cell));
    const auto k0 = static_cast<std::int64_t>(std::floor((std::min(a.y, b.y) - eps - lo.y) / cell));
    const auto k1 = static_cast<std::int64_t>(std::floor((std::max(a.y, b.y) + eps - lo.y) / cell));
    for (auto i = i0; i <= i1; ++i)
      for (auto k = k0; k <= k1; ++k) buckets[key(i, k)].push_back(static_cast<std::uint32_t>(j));
  }

  std::vector<std::pair<std::uint32_t, std::uint32_t>> candidates;
  for (auto& [_, segs] : buckets)
    for (std::size_t a = 0; a < segs.size(); ++a)
      for (std::size_t b = a + 1; b < segs.size(); ++b) {
        auto i = std::min(segs[a], segs[b]), k = std::max(segs[a], segs[b]);
        const std::size_t gap = k - i;
        if (gap <= 1 || gap == n - 1) continue;
        candidates.emplace_back(i, k);
      }
  std::sort(candidates.begin(), candidates.end());
  candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());

  const double h = c.step();
  std::vector<std::pair<double, double>> hits;
  for (auto [i, k] : candidates) {
    const Vec2 a = pts[i], b = pts[(i + 1) % n], p = pts[k], q = pts[(k + 1) % n];
    const double lab = std::max(norm(b - a), 1e-300), lpq = std::max(norm(q - p), 1e-300);
    const double o1 = cross(b - a, p - a) / lab, o2 = cross(b - a, q - a) / lab;
    const double o3 = cross(q - p, a - p) / lpq, o4 = cross(q - p, b - p) / lpq;
    auto straddles = [eps](double u, double v) {
      return (u <= eps && v >= -eps) || (u >= -eps && v <= eps);
    };
    if (!straddles(o1, o2) || !straddles(o3, o4)) continue;
    // Collinear pieces only count when they actually overlap.
    if (std::abs(o1) <= eps && std::abs(o2) <= eps) {
      const Vec2 d = (b - a) / lab;
      const double s1 = dot(p - a, d), s2 = dot(q - a, d);
      if (std::max(s1, s2) < -eps || std::min(s1, s2) > lab + eps) continue;
    }
    const double sa = (o3 - o4) != 0.0 ? std::clamp(o3 / (o3 - o4), 0.0, 1.0) : 0.0;
    const double sb = (o1 - o2) != 0.0 ? std::clamp(o1 / (o1 - o2), 0.0, 1.0) : 0.0;
    double ta = std::fmod((static_cast<double>(i) + sa) * h, c.period());
    double tb = std::fmod((static_cast<double>(k) + sb) * h, c.period());
    if (ta > tb) std::swap(ta, tb);
    hits.emplace_back(ta, tb);
  }

  // Merge hits belonging to the same crossing (shared vertices produce several).
  auto circ = [&](double x, double y) {
    const double d = std::fmod(std::abs(x - y), c.period());
    return std::min(d, c.period() - d);
  };
  std::sort(hits.begin(), hits.end());
  for (const auto& hit : hits) {
    bool merged = false;
    for (const auto& kept : rep.intersections)
      if ((circ(hit.first, kept.first) <= 2.5 * h && circ(hit.second, kept.second) <= 2.5 * h) ||
          (circ(hit.first, kept.second) <= 2.5 * h && circ(hit.second, kept.first) <= 2.5 * h)) {
        merged = true;
        break;
      }
    if (!merged) rep.intersections.push_back(hit);
  }
  rep.simple = rep.intersections.empty();
  return rep;
}

inline ClosedCurve translate(const ClosedCurve& c, Vec2 shift) {
  std::vector<Vec2> s(c.samples().begin(), c.samples().end());
  for (auto& p : s) p += shift;
  return ClosedCurve(std::move(s), c.period());
}

inline ClosedCurve scale_about_mean(const ClosedCurve& c, double factor) {
  const Vec2 m = mean_point(c);
  std::vector<Vec2> s(c.samples().begin(), c.samples().end());
  for (auto& p : s) p = m + factor * (p - m);
  return ClosedCurve(std::move(s), c.period());
}

// Reverses the orientation (t ↦ −t), keeping sample 0 in place.
inline ClosedCurve reverse(const ClosedCurve& c) {
  const std::size_t n = c.size();
  std::vector<Vec2> s(n);
  for (std::size_t j = 0; j < n; ++j) s[j] = c[(n - j) % n];
  return ClosedCurve(std::move(s), c.period());
}

inline ClosedCurve upsample(const ClosedCurve& c, std::size_t m) {
  return ClosedCurve(spectral::resample(c.samples(), m), c.period());
}

}  // namespace hloop
