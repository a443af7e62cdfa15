#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "hloop/curvature_field.hpp"
#include "hloop/curve.hpp"
#include "hloop/errors.hpp"
#include "hloop/spectral.hpp"

namespace hloop {

// Base family u(t) = R e^{iσt/m} + e^{int/m} with m = n − σ, so that
// u(t) = e^{iσt/m}(R + e^{it}) is a rotated 2π-periodic shape. σ = +1 is the
// standard family, σ = −1 the mirrored one used for negative amplitude.
struct AnsatzParams {
  int n = 32;
  double R = 1.0;
  int orientation = 1;

  int m() const { return n - orientation; }
  static double delta(double gamma) { return 1.0 / (gamma + 2.0); }

  void validate() const {
    if (n < 2) throw Error(ErrorKind::InvalidArgument, "n must be at least 2");
    if (!(R > 0.0) || !std::isfinite(R)) throw Error(ErrorKind::InvalidArgument, "R must be positive");
    if (!(R < n)) throw Error(ErrorKind::InvalidArgument, "R must be smaller than n");
    if (orientation != 1 && orientation != -1) throw Error(ErrorKind::InvalidArgument, "orientation must be +1 or -1");
  }
};

// Samples of a 2π-periodic real function at N uniform nodes.
class PeriodicScalar {
 public:
  PeriodicScalar() = default;
  explicit PeriodicScalar(std::vector<double> s) : s_(std::move(s)) {
    if (s_.size() < 64 || s_.size() % 2 != 0)
      throw Error(ErrorKind::InvalidArgument, "periodic scalar needs an even number of samples >= 64");
    for (double v : s_)
      if (!std::isfinite(v)) throw Error(ErrorKind::InvalidArgument, "non-finite periodic sample");
  }

  static PeriodicScalar zeros(std::size_t n) { return PeriodicScalar(std::vector<double>(n, 0.0)); }
  template <class F>
  static PeriodicScalar from_function(F&& f, std::size_t n) {
    std::vector<double> s(n);
    for (std::size_t j = 0; j < n; ++j) s[j] = f(node(j, n));
    return PeriodicScalar(std::move(s));
  }
  // Normalized coefficients c_k with f(t) = Σ c_k e^{ikt}.
  static PeriodicScalar from_modes(std::vector<fft::cplx> c) {
    fft::inverse(c);
    std::vector<double> s(c.size());
    for (std::size_t j = 0; j < c.size(); ++j) s[j] = c[j].real();
    return PeriodicScalar(std::move(s));
  }

  static double node(std::size_t j, std::size_t n) { return kTwoPi * static_cast<double>(j) / static_cast<double>(n); }
  double node(std::size_t j) const { return node(j, s_.size()); }
  std::size_t size() const { return s_.size(); }
  const std::vector<double>& samples() const { return s_; }
  double operator[](std::size_t j) const { return s_[j]; }

  std::vector<fft::cplx> modes() const {
    std::vector<fft::cplx> c(s_.begin(), s_.end());
    fft::forward(c);
    const double inv = 1.0 / static_cast<double>(c.size());
    for (auto& v : c) v *= inv;
    return c;
  }

  PeriodicScalar derivative(int order) const {
    if (order == 0) return *this;
    return PeriodicScalar(spectral::derivative(std::span<const double>(s_), kTwoPi, order));
  }

  double eval(double t) const { return spectral::TrigSeries::from_scalars(s_, kTwoPi).scalar(t); }

  double sup_norm() const {
    double m = 0.0;
    for (double v : s_) m = std::max(m, std::abs(v));
    return m;
  }

  // (1/π)∫₀^{2π} f ω_i with ω₁ = cos, ω₂ = sin.
  double kernel_coefficient(int i) const {
    double s = 0.0;
    for (std::size_t j = 0; j < s_.size(); ++j) s += s_[j] * (i == 1 ? std::cos(node(j)) : std::sin(node(j)));
    return 2.0 * s / static_cast<double>(s_.size());
  }

  PeriodicScalar& operator+=(const PeriodicScalar& o) {
    for (std::size_t j = 0; j < s_.size(); ++j) s_[j] += o.s_[j];
    return *this;
  }
  PeriodicScalar& operator-=(const PeriodicScalar& o) {
    for (std::size_t j = 0; j < s_.size(); ++j) s_[j] -= o.s_[j];
    return *this;
  }
  PeriodicScalar& operator*=(double a) {
    for (double& v : s_) v *= a;
    return *this;
  }
  friend PeriodicScalar operator+(PeriodicScalar a, const PeriodicScalar& b) { return a += b; }
  friend PeriodicScalar operator-(PeriodicScalar a, const PeriodicScalar& b) { return a -= b; }
  friend PeriodicScalar operator*(double a, PeriodicScalar b) { return b *= a; }

 private:
  std::vector<double> s_;
};

struct AnsatzSample {
  std::vector<double> t;
  std::vector<Vec2> u, du, ddu, dddu;
  std::vector<Vec2> nrm, dn, ddn;
};

namespace detail {

// k-th derivative of the base family at a single parameter value.
inline Vec2 ansatz_derivative(const AnsatzParams& p, double t, int k) {
  using C = std::complex<double>;
  const double m = p.m();
  const double w1 = p.orientation / m, w2 = p.n / m;
  const C f1 = std::pow(C(0.0, w1), k), f2 = std::pow(C(0.0, w2), k);
  const C z = p.R * f1 * std::polar(1.0, w1 * t) + f2 * std::polar(1.0, w2 * t);
  return to_vec(z);
}

struct Frame {
  Vec2 u, du, ddu, dddu, nrm, dn, ddn;
};

inline Frame ansatz_frame(const AnsatzParams& p, double t) {
  Frame f;
  f.u = ansatz_derivative(p, t, 0);
  f.du = ansatz_derivative(p, t, 1);
  f.ddu = ansatz_derivative(p, t, 2);
  f.dddu = ansatz_derivative(p, t, 3);
  const double s = norm(f.du);
  const double s3 = s * s * s, s5 = s3 * s * s;
  const double a = dot(f.du, f.ddu);
  f.nrm = rot(f.du) / s;
  f.dn = rot(f.ddu) / s - a * rot(f.du) / s3;
  f.ddn = rot(f.dddu) / s - a * rot(f.ddu) / s3 -
          (norm2(f.ddu) * rot(f.du) + dot(f.du, f.dddu) * rot(f.du) + a * rot(f.ddu)) / s3 +
          3.0 * a * a * rot(f.du) / s5;
  return f;
}

}  // namespace detail

inline AnsatzSample ansatz_eval(const AnsatzParams& p, std::size_t samples = 512) {
  p.validate();
  AnsatzSample a;
  a.t.resize(samples);
  for (auto* v : {&a.u, &a.du, &a.ddu, &a.dddu, &a.nrm, &a.dn, &a.ddn}) v->resize(samples);
  for (std::size_t j = 0; j < samples; ++j) {
    const double t = PeriodicScalar::node(j, samples);
    const auto f = detail::ansatz_frame(p, t);
    a.t[j] = t;
    a.u[j] = f.u; a.du[j] = f.du; a.ddu[j] = f.ddu; a.dddu[j] = f.dddu;
    a.nrm[j] = f.nrm; a.dn[j] = f.dn; a.ddn[j] = f.ddn;
  }
  return a;
}

// L∞φ = φ'' + φ, applied as the multiplier 1 − k².
inline PeriodicScalar linf_apply(const PeriodicScalar& phi) {
  auto c = phi.modes();
  const std::size_t n = c.size();
  for (std::size_t k = 0; k < n; ++k) {
    const double q = fft::frequency(k, n);
    c[k] *= 1.0 - q * q;
  }
  return PeriodicScalar::from_modes(std::move(c));
}

inline PeriodicScalar project_perp(const PeriodicScalar& f) {
  auto c = f.modes();
  const std::size_t n = c.size();
  c[1] = 0.0;
  c[n - 1] = 0.0;
  return PeriodicScalar::from_modes(std::move(c));
}

// Solves L∞φ = P⊥f with φ ⊥ cos, sin.
inline PeriodicScalar linf_invert_perp(const PeriodicScalar& f) {
  auto c = f.modes();
  const std::size_t n = c.size();
  for (std::size_t k = 0; k < n; ++k) {
    const int q = fft::frequency(k, n);
    if (q == 1 || q == -1) {
      c[k] = 0.0;
      continue;
    }
    const double kk = (k == n / 2) ? static_cast<double>(n / 2) : static_cast<double>(q);
    c[k] /= (1.0 - kk * kk);
  }
  return PeriodicScalar::from_modes(std::move(c));
}

struct PerturbedCurve {
  std::vector<Vec2> y, dy, ddy;
};

inline PerturbedCurve perturbed_curve(const AnsatzParams& p, const PeriodicScalar& phi) {
  const std::size_t n = phi.size();
  const auto a = ansatz_eval(p, n);
  const auto d1 = phi.derivative(1), d2 = phi.derivative(2);
  PerturbedCurve c;
  c.y.resize(n); c.dy.resize(n); c.ddy.resize(n);
  for (std::size_t j = 0; j < n; ++j) {
    c.y[j] = a.u[j] + phi[j] * a.nrm[j];
    c.dy[j] = a.du[j] + d1[j] * a.nrm[j] + phi[j] * a.dn[j];
    c.ddy[j] = a.ddu[j] + d2[j] * a.nrm[j] + 2.0 * d1[j] * a.dn[j] + phi[j] * a.ddn[j];
  }
  return c;
}

// G(φ) = K(u + φn) − h(|u + φn|).
inline PeriodicScalar curvature_gap(const AnsatzParams& p, const PeriodicScalar& phi, const RadialFn& h) {
  const auto c = perturbed_curve(p, phi);
  double smax = 0.0, smin = std::numeric_limits<double>::infinity();
  for (const auto& v : c.dy) {
    smax = std::max(smax, norm(v));
    smin = std::min(smin, norm(v));
  }
  if (!(smin > 1e-8 * smax)) throw Error(ErrorKind::DegenerateSpeed, "perturbed ansatz is not regular");
  std::vector<double> g(phi.size());
  for (std::size_t j = 0; j < g.size(); ++j) {
    const double s = norm(c.dy[j]);
    g[j] = cross(c.dy[j], c.ddy[j]) / (s * s * s) - h(norm(c.y[j]));
  }
  return PeriodicScalar(std::move(g));
}

struct FixedPointOptions {
  std::size_t samples = 512;
  double tolerance = 1e-10;
  std::size_t max_iterations = 200;
};

struct FixedPointResult {
  PeriodicScalar phi;
  PeriodicScalar gap;
  double lambda1 = 0.0;
  double lambda2 = 0.0;
  double residual = 0.0;  // sup |G − λ₁ cos − λ₂ sin|
  std::size_t iterations = 0;
  std::vector<double> trace;  // sup-norm change per iteration
};

// φ ← L∞⁻¹ P⊥ (L∞φ − G(φ)), starting from φ₀ (zero by default).
inline FixedPointResult fixed_point_solve(const AnsatzParams& p, const RadialFn& h, const FixedPointOptions& opts = {},
                                          const std::optional<PeriodicScalar>& initial = std::nullopt) {
  p.validate();
  FixedPointResult r;
  r.phi = initial ? project_perp(*initial) : PeriodicScalar::zeros(opts.samples);
  std::size_t growth = 0;
  double prev = std::numeric_limits<double>::infinity();
  bool done = false;
  for (std::size_t it = 1; it <= opts.max_iterations; ++it) {
    const auto g = curvature_gap(p, r.phi, h);
    auto next = linf_invert_perp(linf_apply(r.phi) - g);
    const double change = (next - r.phi).sup_norm();
    r.trace.push_back(change);
    r.phi = std::move(next);
    r.iterations = it;
    if (!std::isfinite(change)) throw Error(ErrorKind::NotContracting, "fixed point iteration diverged");
    if (change <= opts.tolerance) {
      done = true;
      break;
    }
    growth = change > prev ? growth + 1 : 0;
    if (growth >= 5) throw Error(ErrorKind::NotContracting, "sup-change grew for 5 consecutive iterations");
    prev = change;
  }
  if (!done)
    throw Error(ErrorKind::MaxIterations, "fixed point not reached in " + std::to_string(opts.max_iterations) + " iterations");
  r.gap = curvature_gap(p, r.phi, h);
  r.lambda1 = r.gap.kernel_coefficient(1);
  r.lambda2 = r.gap.kernel_coefficient(2);
  double res = 0.0;
  for (std::size_t j = 0; j < r.gap.size(); ++j) {
    const double t = r.gap.node(j);
    res = std::max(res, std::abs(r.gap[j] - r.lambda1 * std::cos(t) - r.lambda2 * std::sin(t)));
  }
  r.residual = res;
  return r;
}

struct RadiusOptions {
  std::optional<double> r0, r1;  // default bracket from the amplitude and exponent
  double root_tolerance = 1e-8;
  std::size_t max_bisections = 200;
  FixedPointOptions fixed_point;
};

struct LSResult {
  int n = 0;
  int orientation = 1;
  double gamma = 0.0;
  double R = 0.0;
  double r = 0.0;
  double r0 = 0.0, r1 = 0.0;                // bracket
  double search_r0 = 0.0, search_r1 = 0.0;  // evaluable part of the bracket
  PeriodicScalar phi;
  double lambda1 = 0.0;
  double lambda2 = 0.0;
  double residual = 0.0;   // sup |K − H − λ₂ sin|
  double gap_sup = 0.0;    // ‖G‖∞
  double phi_sup = 0.0;
  double min_radius = 0.0; // min |u + φn|
  bool clear_of_core = false;  // min |u + φn| > s₀
  std::size_t iterations = 0;  // fixed point iterations from φ₀ = 0 at the root
  std::size_t bisections = 0;
  std::vector<double> trace;
  bool converged = false;
  std::string message;
};

inline std::pair<double, double> default_radius_bracket(const RadialCurvature& h) {
  const double a = std::abs(h.tilde_amplitude()) * h.gamma;
  return {(a / 2.0) / std::pow(2.0, (h.gamma + 2.0) / 2.0) * 0.9, a * 1.1};
}

inline AnsatzParams ansatz_for(int n, double r, const RadialCurvature& h) {
  AnsatzParams p;
  p.n = n;
  p.orientation = h.tilde_amplitude() > 0 ? 1 : -1;
  p.R = std::pow(r * n, AnsatzParams::delta(h.gamma));
  return p;
}

// Bisection on r ↦ λ₁(n, (rn)^{1/(γ+2)}).
inline LSResult find_radius(int n, const RadialCurvature& h, const RadiusOptions& opts = {}) {
  h.validate();
  if (n < 2) throw Error(ErrorKind::InvalidArgument, "n must be at least 2");
  const auto def = default_radius_bracket(h);
  double lo = opts.r0.value_or(def.first), hi = opts.r1.value_or(def.second);
  if (!(lo > 0.0) || !(hi > lo)) throw Error(ErrorKind::InvalidArgument, "invalid radius bracket");
  const RadialFn hf = [&h](double s) { return h(s); };

  auto solve = [&](double r, const std::optional<PeriodicScalar>& warm) {
    return fixed_point_solve(ansatz_for(n, r, h), hf, opts.fixed_point, warm);
  };
  // Endpoints where the iteration does not contract are pulled inward along a
  // geometric grid; the root is still sought inside the original bracket.
  const double blo = lo, bhi = hi;
  auto evaluable = [&](bool lower) -> std::pair<double, FixedPointResult> {
    constexpr int steps = 16;
    for (int k = 0; k < steps; ++k) {
      const double f = static_cast<double>(k) / steps;
      const double r = lower ? blo * std::pow(bhi / blo, f) : bhi * std::pow(blo / bhi, f);
      try {
        return {r, solve(r, std::nullopt)};
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::NotContracting && e.kind() != ErrorKind::MaxIterations &&
            e.kind() != ErrorKind::DegenerateSpeed)
          throw;
      }
    }
    throw Error(ErrorKind::NotContracting, "fixed point fails across the radius bracket");
  };
  auto [elo, flo] = evaluable(true);
  auto [ehi, fhi] = evaluable(false);
  lo = elo;
  hi = ehi;
  if (!(hi > lo) || flo.lambda1 * fhi.lambda1 > 0.0)
    throw Error(ErrorKind::NoSignChange, "lambda1 has the same sign at r0 = " + std::to_string(lo) + " and r1 = " +
                                             std::to_string(hi));

  LSResult res;
  res.n = n;
  res.gamma = h.gamma;
  res.orientation = h.tilde_amplitude() > 0 ? 1 : -1;
  res.r0 = blo;
  res.r1 = bhi;
  res.search_r0 = lo;
  res.search_r1 = hi;

  double root = std::abs(flo.lambda1) < std::abs(fhi.lambda1) ? lo : hi;
  FixedPointResult best = std::abs(flo.lambda1) < std::abs(fhi.lambda1) ? flo : fhi;
  const double slo = flo.lambda1 > 0 ? 1.0 : -1.0;
  std::size_t k = 0;
  while (std::abs(best.lambda1) > opts.root_tolerance && k < opts.max_bisections && hi - lo > 1e-15 * hi) {
    ++k;
    const double mid = 0.5 * (lo + hi);
    auto fm = solve(mid, best.phi);
    if ((fm.lambda1 > 0 ? 1.0 : -1.0) == slo)
      lo = mid;
    else
      hi = mid;
    root = mid;
    best = std::move(fm);
  }
  res.bisections = k;

  // Report the iteration count from φ₀ = 0, as the contraction statement refers to it.
  const auto p = ansatz_for(n, root, h);
  auto cold = fixed_point_solve(p, hf, opts.fixed_point);
  res.r = root;
  res.R = p.R;
  res.phi = cold.phi;
  res.lambda1 = cold.lambda1;
  res.lambda2 = cold.lambda2;
  res.iterations = cold.iterations;
  res.trace = cold.trace;
  res.gap_sup = cold.gap.sup_norm();
  res.phi_sup = cold.phi.sup_norm();
  double rs = 0.0;
  for (std::size_t j = 0; j < cold.gap.size(); ++j)
    rs = std::max(rs, std::abs(cold.gap[j] - cold.lambda2 * std::sin(cold.gap.node(j))));
  res.residual = rs;
  const auto c = perturbed_curve(p, cold.phi);
  res.min_radius = std::numeric_limits<double>::infinity();
  for (const auto& y : c.y) res.min_radius = std::min(res.min_radius, norm(y));
  res.clear_of_core = res.min_radius > h.s0;
  res.converged = std::abs(res.lambda1) <= opts.root_tolerance && cold.trace.back() <= opts.fixed_point.tolerance;
  res.message = res.converged ? "converged" : "root tolerance not reached";
  return res;
}

struct SecondMultiplierCheck {
  double lambda2 = 0.0;              // |λ₂|
  double relative = 0.0;             // |λ₂| / ‖G‖∞
  double rotational_identity = 0.0;  // ∫₀^{2π} (H − K)(Y·Ẏ) dt
};

inline SecondMultiplierCheck verify_second_multiplier(const LSResult& r, const RadialCurvature& h) {
  const auto p = ansatz_for(r.n, r.r, h);
  const RadialFn hf = [&h](double s) { return h(s); };
  const auto g = curvature_gap(p, r.phi, hf);
  const auto c = perturbed_curve(p, r.phi);
  SecondMultiplierCheck out;
  out.lambda2 = std::abs(g.kernel_coefficient(2));
  out.relative = out.lambda2 / std::max(g.sup_norm(), 1e-300);
  double s = 0.0;
  for (std::size_t j = 0; j < g.size(); ++j) s += -g[j] * dot(c.y[j], c.dy[j]);
  out.rotational_identity = s * kTwoPi / static_cast<double>(g.size());
  return out;
}

struct ImmersedOptions {
  RadiusOptions radius;
  std::size_t samples_per_loop = 256;
};

struct ImmersedLoop {
  ClosedCurve curve;      // U + φN on t ∈ [0, 2πn)
  LSResult result;
  double curvature_residual = 0.0;  // sup |K − H| on the assembled curve
  bool regular = false;
  SimplicityReport simplicity;
  int winding_about_origin = 0;
  int turning = 0;
};

// Y(t) = U(t) + φ(mt/n) N(t), the long-period loop of the base family.
inline ClosedCurve assemble_loop(const LSResult& r, const RadialCurvature& h, std::size_t samples_per_loop = 256) {
  const auto p = ansatz_for(r.n, r.r, h);
  const auto phi = spectral::TrigSeries::from_scalars(r.phi.samples(), kTwoPi);
  const std::size_t total = static_cast<std::size_t>(r.n) * samples_per_loop;
  const double period = kTwoPi * r.n;
  std::vector<Vec2> pts(total);
  for (std::size_t j = 0; j < total; ++j) {
    const double t = period * static_cast<double>(j) / static_cast<double>(total);
    const double s = static_cast<double>(p.m()) * t / r.n;
    const auto f = detail::ansatz_frame(p, s);
    pts[j] = f.u + phi.scalar(std::fmod(s, kTwoPi)) * f.nrm;
  }
  return ClosedCurve(std::move(pts), period);
}

inline ImmersedLoop build_immersed_loop(int n, const RadialCurvature& h, const ImmersedOptions& opts = {}) {
  if (opts.samples_per_loop < 16 || opts.samples_per_loop % 2 != 0)
    throw Error(ErrorKind::InvalidArgument, "samples per loop must be even and at least 16");
  ImmersedLoop out;
  out.result = find_radius(n, h, opts.radius);
  out.curve = assemble_loop(out.result, h, opts.samples_per_loop);
  try {
    require_regular(out.curve);
    out.regular = true;
  } catch (const Error&) {
    out.regular = false;
  }
  const auto k = curvature(out.curve);
  double res = 0.0;
  for (std::size_t j = 0; j < k.size(); ++j) res = std::max(res, std::abs(k[j] - h(norm(out.curve[j]))));
  out.curvature_residual = res;
  out.simplicity = is_simple(out.curve);
  out.winding_about_origin = winding_number(out.curve, Vec2{0.0, 0.0});
  out.turning = turning_number(out.curve);
  return out;
}

struct LinearizedCoefficients {
  std::vector<double> a, b, c;
};

inline LinearizedCoefficients linearized_coeffs(const AnsatzParams& p, std::size_t samples = 512) {
  const auto s = ansatz_eval(p, samples);
  LinearizedCoefficients l;
  l.a.resize(samples); l.b.resize(samples); l.c.resize(samples);
  for (std::size_t j = 0; j < samples; ++j) {
    const double v2 = norm2(s.du[j]);
    const double d = dot(s.du[j], s.ddu[j]);
    const double w = dot(rot(s.du[j]), s.ddu[j]);
    l.a[j] = 1.0 / v2;
    l.b[j] = -d / (v2 * v2);
    l.c[j] = (2 * d * d - 2 * norm2(s.ddu[j]) * v2 + 3 * w * w) / (v2 * v2 * v2);
  }
  return l;
}

}  // namespace hloop
