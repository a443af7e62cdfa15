#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "hloop/errors.hpp"
#include "hloop/fft.hpp"
#include "hloop/geometry.hpp"
#include "hloop/spectral.hpp"

namespace hloop {

using RadialFn = std::function<double(double)>;

// M×M samples on the unit cell; value(i, j) sits at (i/M, j/M), stored row-major by y.
struct PeriodicGrid {
  int m = 0;
  std::vector<double> values;

  PeriodicGrid() = default;
  PeriodicGrid(int m_, std::vector<double> v) : m(m_), values(std::move(v)) {
    if (m <= 0 || values.size() != static_cast<std::size_t>(m) * static_cast<std::size_t>(m))
      throw Error(ErrorKind::InvalidArgument, "periodic grid must be square and nonempty");
  }
  template <class F>
  static PeriodicGrid sample(F&& f, int m) {
    std::vector<double> v(static_cast<std::size_t>(m) * m);
    for (int j = 0; j < m; ++j)
      for (int i = 0; i < m; ++i) v[static_cast<std::size_t>(j) * m + i] = f(double(i) / m, double(j) / m);
    return PeriodicGrid(m, std::move(v));
  }
  double operator()(int i, int j) const { return values[static_cast<std::size_t>(j) * m + i]; }
  double sup_abs() const {
    double s = 0.0;
    for (double v : values) s = std::max(s, std::abs(v));
    return s;
  }
  double oscillation() const {
    if (values.empty()) return 0.0;
    auto [lo, hi] = std::minmax_element(values.begin(), values.end());
    return *hi - *lo;
  }
};

inline double mean_unit_cell(const PeriodicGrid& g) {
  if (g.values.empty()) throw Error(ErrorKind::InvalidArgument, "empty grid");
  double s = 0.0;
  for (double v : g.values) s += v;
  return s / static_cast<double>(g.values.size());
}

namespace detail {

inline std::array<double, 4> hermite_basis(double a) {
  const double a2 = a * a, a3 = a2 * a;
  return {2 * a3 - 3 * a2 + 1, a3 - 2 * a2 + a, -2 * a3 + 3 * a2, a3 - a2};
}
inline std::array<double, 4> hermite_basis_deriv(double a) {
  const double a2 = a * a;
  return {6 * a2 - 6 * a, 3 * a2 - 4 * a + 1, -6 * a2 + 6 * a, 3 * a2 - 2 * a};
}

inline std::vector<double> inverse_real(std::vector<fft::cplx> s, int m) {
  fft::inverse2d(s, m, m);
  std::vector<double> out(s.size());
  const double inv = 1.0 / (static_cast<double>(m) * m);
  for (std::size_t k = 0; k < s.size(); ++k) out[k] = s[k].real() * inv;
  return out;
}

// Spectrum multiplied by ∂x^ox ∂y^oy.
inline std::vector<fft::cplx> apply_derivative(const std::vector<fft::cplx>& s, int m, int ox, int oy) {
  std::vector<fft::cplx> out(s.size());
  const std::size_t mm = static_cast<std::size_t>(m);
  for (std::size_t j = 0; j < mm; ++j) {
    const auto fy = spectral::derivative_factor(j, mm, 1.0, oy);
    for (std::size_t i = 0; i < mm; ++i)
      out[j * mm + i] = s[j * mm + i] * fy * spectral::derivative_factor(i, mm, 1.0, ox);
  }
  return out;
}

}  // namespace detail

struct ValueGrad {
  double f = 0.0, fx = 0.0, fy = 0.0;
};

// Periodic bicubic Hermite interpolant with spectrally computed nodal derivatives.
class PeriodicHermite {
 public:
  PeriodicHermite() = default;
  // spectrum: unnormalized 2D forward transform of the node values.
  PeriodicHermite(const std::vector<fft::cplx>& spectrum, int m) : m_(m) {
    f_ = detail::inverse_real(spectrum, m);
    fx_ = detail::inverse_real(detail::apply_derivative(spectrum, m, 1, 0), m);
    fy_ = detail::inverse_real(detail::apply_derivative(spectrum, m, 0, 1), m);
    fxy_ = detail::inverse_real(detail::apply_derivative(spectrum, m, 1, 1), m);
  }
  static PeriodicHermite from_grid(const PeriodicGrid& g) {
    std::vector<fft::cplx> s(g.values.begin(), g.values.end());
    fft::forward2d(s, g.m, g.m);
    return PeriodicHermite(s, g.m);
  }

  int size() const { return m_; }
  bool empty() const { return m_ == 0; }
  const std::vector<double>& nodes() const { return f_; }

  ValueGrad eval(Vec2 p) const {
    if (m_ == 0) return {};
    const double x = (p.x - std::floor(p.x)) * m_;
    const double y = (p.y - std::floor(p.y)) * m_;
    int i = static_cast<int>(std::floor(x)), j = static_cast<int>(std::floor(y));
    const double a = x - i, b = y - j;
    i %= m_;
    j %= m_;
    const int i1 = (i + 1) % m_, j1 = (j + 1) % m_;
    const double h = 1.0 / m_;
    const auto ba = detail::hermite_basis(a), bb = detail::hermite_basis(b);
    const auto da = detail::hermite_basis_deriv(a), db = detail::hermite_basis_deriv(b);
    const int ii[2] = {i, i1}, jj[2] = {j, j1};
    ValueGrad r;
    for (int q = 0; q < 2; ++q)
      for (int pp = 0; pp < 2; ++pp) {
        const std::size_t k = static_cast<std::size_t>(jj[q]) * m_ + ii[pp];
        // Basis index: value basis at corner c is 2c, slope basis is 2c+1.
        const double v0a = ba[2 * pp], v1a = ba[2 * pp + 1], d0a = da[2 * pp], d1a = da[2 * pp + 1];
        const double v0b = bb[2 * q], v1b = bb[2 * q + 1], d0b = db[2 * q], d1b = db[2 * q + 1];
        const double F = f_[k], Fx = h * fx_[k], Fy = h * fy_[k], Fxy = h * h * fxy_[k];
        r.f += F * v0a * v0b + Fx * v1a * v0b + Fy * v0a * v1b + Fxy * v1a * v1b;
        r.fx += F * d0a * v0b + Fx * d1a * v0b + Fy * d0a * v1b + Fxy * d1a * v1b;
        r.fy += F * v0a * d0b + Fx * v1a * d0b + Fy * v0a * d1b + Fxy * v1a * d1b;
      }
    r.fx *= m_;
    r.fy *= m_;
    return r;
  }

 private:
  int m_ = 0;
  std::vector<double> f_, fx_, fy_, fxy_;
};

// Q = −∇v with −Δv = H on the unit torus; div Q = H.
class TorusPotential {
 public:
  TorusPotential() = default;
  TorusPotential(PeriodicHermite qx, PeriodicHermite qy) : qx_(std::move(qx)), qy_(std::move(qy)) {}

  int size() const { return qx_.size(); }
  Vec2 value(Vec2 p) const { return {qx_.eval(p).f, qy_.eval(p).f}; }
  // Q and the divergence of its interpolant.
  std::pair<Vec2, double> value_div(Vec2 p) const {
    const auto a = qx_.eval(p), b = qy_.eval(p);
    return {{a.f, b.f}, a.fx + b.fy};
  }
  Vec2 node(int i, int j) const {
    const std::size_t k = static_cast<std::size_t>(j) * qx_.size() + i;
    return {qx_.nodes()[k], qy_.nodes()[k]};
  }
  double sup_norm() const {
    double s = 0.0;
    for (std::size_t k = 0; k < qx_.nodes().size(); ++k)
      s = std::max(s, std::hypot(qx_.nodes()[k], qy_.nodes()[k]));
    return s;
  }
  const PeriodicHermite& qx() const { return qx_; }
  const PeriodicHermite& qy() const { return qy_; }

 private:
  PeriodicHermite qx_, qy_;
};

inline TorusPotential solve_torus_poisson(const PeriodicGrid& h) {
  const int m = h.m;
  const double sup = h.sup_abs();
  const double mean = mean_unit_cell(h);
  if (std::abs(mean) > 1e-10 * sup)
    throw Error(ErrorKind::NonZeroMean, "periodic datum has mean " + std::to_string(mean));
  std::vector<fft::cplx> s(h.values.begin(), h.values.end());
  fft::forward2d(s, m, m);
  const std::size_t mm = static_cast<std::size_t>(m);
  for (std::size_t j = 0; j < mm; ++j)
    for (std::size_t i = 0; i < mm; ++i) {
      const double kx = fft::frequency(i, mm), ky = fft::frequency(j, mm);
      const double k2 = kx * kx + ky * ky;
      s[j * mm + i] = k2 == 0.0 ? fft::cplx(0.0) : s[j * mm + i] / (4.0 * kPi * kPi * k2);
    }
  auto sx = detail::apply_derivative(s, m, 1, 0);
  auto sy = detail::apply_derivative(s, m, 0, 1);
  for (auto& v : sx) v = -v;
  for (auto& v : sy) v = -v;
  return TorusPotential(PeriodicHermite(sx, m), PeriodicHermite(sy, m));
}

// C² radial curvature: 1 + A/s^γ + h̃(s)/s^{γ+β} for s ≥ s₀, even quartic below s₀.
struct RadialCurvature {
  double A = 1.0;
  double gamma = 2.0;
  double beta = std::numeric_limits<double>::infinity();
  RadialFn htilde;  // empty means h̃ ≡ 0
  double B = 0.0;   // limit of h̃ at infinity, used when β = 0
  double s0 = 1.0;

  RadialCurvature() { build(); }
  RadialCurvature(double A_, double gamma_, double beta_ = std::numeric_limits<double>::infinity(),
                  RadialFn ht = {}, double B_ = 0.0, double s0_ = 1.0)
      : A(A_), gamma(gamma_), beta(beta_), htilde(std::move(ht)), B(B_), s0(s0_) {
    validate();
    build();
  }

  void validate() const {
    if (!(gamma > 1.0)) throw Error(ErrorKind::InvalidArgument, "gamma must exceed 1");
    if (A == 0.0 || !std::isfinite(A)) throw Error(ErrorKind::InvalidArgument, "A must be nonzero");
    if (!(beta >= 0.0)) throw Error(ErrorKind::InvalidArgument, "beta must be nonnegative");
    if (!(s0 > 0.0)) throw Error(ErrorKind::InvalidArgument, "mollification radius must be positive");
  }

  double tilde_amplitude() const { return beta == 0.0 ? A + B : A; }

  double outer(double s) const {
    double v = 1.0 + A * std::pow(s, -gamma);
    if (htilde && std::isfinite(beta)) v += htilde(s) * std::pow(s, -(gamma + beta));
    return v;
  }

  double operator()(double s) const {
    s = std::abs(s);
    if (s >= s0) return outer(s);
    const double s2 = s * s;
    return c0_ + c2_ * s2 + c4_ * s2 * s2;
  }

 private:
  void build() {
    double h0 = outer(s0), h1 = 0.0, h2 = 0.0;
    if (htilde && std::isfinite(beta)) {
      const double d = 1e-3 * s0;
      const double hp = outer(s0 + d), hm = outer(s0 - d);
      h1 = (hp - hm) / (2 * d);
      h2 = (hp - 2 * h0 + hm) / (d * d);
    } else {
      h1 = -A * gamma * std::pow(s0, -gamma - 1);
      h2 = A * gamma * (gamma + 1) * std::pow(s0, -gamma - 2);
    }
    c4_ = (h2 * s0 - h1) / (8 * s0 * s0 * s0);
    c2_ = (h1 - 4 * c4_ * s0 * s0 * s0) / (2 * s0);
    c0_ = h0 - c2_ * s0 * s0 - c4_ * s0 * s0 * s0 * s0;
  }

  double c0_ = 0.0, c2_ = 0.0, c4_ = 0.0;
};

// Radial field Q(p) = g(|p|) p/|p| with g(r) = (1/r)∫₀^r s h(s) ds, tabulated and
// interpolated by cubic Hermite with g' = h − g/r.
class RadialPotential {
 public:
  RadialPotential() = default;
  RadialPotential(RadialFn h, double r_max, std::size_t intervals = 20000)
      : h_(std::move(h)), r_max_(r_max), dr_(r_max / static_cast<double>(intervals)) {
    if (!(r_max > 0.0) || intervals < 2) throw Error(ErrorKind::InvalidArgument, "radial table needs r_max > 0");
    static constexpr std::array<double, 8> x = {-0.9602898564975363, -0.7966664774136267, -0.5255324099163290,
                                                -0.1834346424956498, 0.1834346424956498,  0.5255324099163290,
                                                0.7966664774136267,  0.9602898564975363};
    static constexpr std::array<double, 8> w = {0.1012285362903763, 0.2223810344533745, 0.3137066458778873,
                                                0.3626837833783620, 0.3626837833783620, 0.3137066458778873,
                                                0.2223810344533745, 0.1012285362903763};
    const std::size_t k = intervals;
    g_.assign(k + 1, 0.0);
    gp_.assign(k + 1, 0.0);
    hv_.assign(k + 1, 0.0);
    double integral = 0.0;
    for (std::size_t i = 0; i <= k; ++i) {
      const double r = dr_ * static_cast<double>(i);
      if (i > 0) {
        const double a = r - dr_;
        double seg = 0.0;
        for (std::size_t q = 0; q < x.size(); ++q) {
          const double s = a + 0.5 * dr_ * (x[q] + 1.0);
          seg += w[q] * s * h_(s);
        }
        integral += 0.5 * dr_ * seg;
      }
      hv_[i] = h_(r);
      if (!std::isfinite(hv_[i]) || !std::isfinite(integral))
        throw Error(ErrorKind::NonIntegrable, "radial datum is not finite at r = " + std::to_string(r));
      g_[i] = i == 0 ? 0.0 : integral / r;
      gp_[i] = i == 0 ? 0.5 * hv_[0] : hv_[i] - g_[i] / r;
      sup_h_ = std::max(sup_h_, std::abs(hv_[i]));
      sup_g_ = std::max(sup_g_, std::abs(g_[i]));
    }
    total_ = integral;
    const double tail_h = std::abs(hv_[k]);
    if (tail_h > 1e-3 * sup_h_ && std::abs(g_[k]) > std::abs(g_[k / 2]))
      throw Error(ErrorKind::NonIntegrable, "radial datum does not decay within the table range");
  }

  bool empty() const { return !h_; }
  double range() const { return r_max_; }
  double source(double r) const { return h_ ? h_(r) : 0.0; }
  double sup_source() const { return sup_h_; }
  double sup_norm() const { return sup_g_; }
  double enclosed(double r) const { return r * magnitude(r); }

  // g(r) and g'(r) from the interpolant.
  std::pair<double, double> magnitude_deriv(double r) const {
    if (!h_) return {0.0, 0.0};
    if (r >= r_max_) return {total_ / r, -total_ / (r * r)};
    const double t = r / dr_;
    std::size_t i = static_cast<std::size_t>(t);
    if (i >= g_.size() - 1) i = g_.size() - 2;
    const double a = t - static_cast<double>(i);
    const auto b = detail::hermite_basis(a), d = detail::hermite_basis_deriv(a);
    const double g = g_[i] * b[0] + dr_ * gp_[i] * b[1] + g_[i + 1] * b[2] + dr_ * gp_[i + 1] * b[3];
    const double gd = (g_[i] * d[0] + g_[i + 1] * d[2]) / dr_ + gp_[i] * d[1] + gp_[i + 1] * d[3];
    return {g, gd};
  }
  double magnitude(double r) const { return magnitude_deriv(r).first; }

  Vec2 value(Vec2 p) const {
    const double r = norm(p);
    if (r == 0.0 || !h_) return {};
    return magnitude(r) / r * p;
  }
  std::pair<Vec2, double> value_div(Vec2 p) const {
    if (!h_) return {{}, 0.0};
    const double r = norm(p);
    if (r < 1e-12 * dr_) return {{}, 2.0 * gp_[0]};
    const auto [g, gd] = magnitude_deriv(r);
    return {g / r * p, gd + g / r};
  }

 private:
  RadialFn h_;
  double r_max_ = 0.0, dr_ = 0.0, total_ = 0.0, sup_h_ = 0.0, sup_g_ = 0.0;
  std::vector<double> g_, gp_, hv_;
};

inline RadialPotential solve_plane_poisson_decaying(RadialFn h2, double r_max, std::size_t intervals = 20000) {
  return RadialPotential(std::move(h2), r_max, intervals);
}

// Lorentz (2,1) norm of a radial function: the decreasing rearrangement is built by
// sorting annulus values against their areas.
inline double lorentz_norm_21(const RadialFn& h2, double r_max, std::size_t annuli = 200000) {
  std::vector<std::pair<double, double>> vm(annuli);
  const double dr = r_max / static_cast<double>(annuli);
  for (std::size_t i = 0; i < annuli; ++i) {
    const double a = dr * i, b = a + dr;
    vm[i] = {std::abs(h2(0.5 * (a + b))), kPi * (b * b - a * a)};
  }
  return [&] {
    std::sort(vm.begin(), vm.end(), [](const auto& l, const auto& r) { return l.first > r.first; });
    double t = 0.0, sum = 0.0;
    for (const auto& [v, m] : vm) {
      sum += v * 2.0 * (std::sqrt(t + m) - std::sqrt(t));
      t += m;
    }
    return sum;
  }();
}

// Same rearrangement integral for arbitrary (value, measure) samples.
inline double lorentz_norm_21(std::vector<std::pair<double, double>> value_measure) {
  for (auto& vm : value_measure) vm.first = std::abs(vm.first);
  std::sort(value_measure.begin(), value_measure.end(), [](const auto& l, const auto& r) { return l.first > r.first; });
  double t = 0.0, sum = 0.0;
  for (const auto& [v, m] : value_measure) {
    sum += v * 2.0 * (std::sqrt(t + m) - std::sqrt(t));
    t += m;
  }
  return sum;
}

struct RadialSource {
  RadialFn h;
  double r_max = 50.0;
  std::size_t intervals = 20000;
  std::optional<RadialCurvature> params;  // set when the datum is h − 1 of a RadialCurvature
};

// Composite prescribed curvature H = c + H₁ + H₂ with [H₁] = 0 and H₂ radial decaying.
class CurvatureField {
 public:
  CurvatureField() = default;
  explicit CurvatureField(double c) : constant_(c) {}
  CurvatureField(double c, std::optional<PeriodicGrid> periodic, std::optional<RadialSource> radial)
      : constant_(c) {
    if (!std::isfinite(c)) throw Error(ErrorKind::InvalidArgument, "constant part must be finite");
    if (periodic) {
      for (double v : periodic->values)
        if (!std::isfinite(v)) throw Error(ErrorKind::InvalidArgument, "periodic grid contains non-finite values");
      const double mean = mean_unit_cell(*periodic);
      constant_ += mean;
      for (auto& v : periodic->values) v -= mean;
      periodic_ = std::move(*periodic);
      periodic_interp_ = PeriodicHermite::from_grid(periodic_);
    }
    if (radial && radial->h) {
      radial_ = std::move(*radial);
      const double range = radial_.r_max;
      lorentz_ = lorentz_norm_21(radial_.h, range);
      const std::size_t probe = 4096;
      for (std::size_t i = 0; i <= probe; ++i)
        sup_radial_ = std::max(sup_radial_, std::abs(radial_.h(range * i / double(probe))));
    }
  }

  static CurvatureField from_radial(const RadialCurvature& h, double r_max = 200.0, std::size_t intervals = 40000) {
    RadialSource src{[h](double s) { return h(s) - 1.0; }, r_max, intervals, h};
    return CurvatureField(1.0, std::nullopt, src);
  }

  double constant() const { return constant_; }
  bool has_periodic() const { return !periodic_.values.empty(); }
  bool has_radial() const { return static_cast<bool>(radial_.h); }
  const PeriodicGrid& periodic() const { return periodic_; }
  const RadialSource& radial() const { return radial_; }

  double value(Vec2 p) const {
    double v = constant_;
    if (has_periodic()) v += periodic_interp_.eval(p).f;
    if (has_radial()) v += radial_.h(norm(p));
    return v;
  }

  // Metadata.
  double periodic_sup() const { return periodic_.sup_abs(); }
  double periodic_oscillation() const { return periodic_.oscillation(); }
  double radial_sup() const { return sup_radial_; }
  double radial_lorentz() const { return lorentz_; }
  // Upper bound on |H − c|∞.
  double reduced_sup() const { return periodic_sup() + sup_radial_; }

  CurvatureField negated() const {
    CurvatureField f = *this;
    f.constant_ = -constant_;
    if (has_periodic()) {
      for (auto& v : f.periodic_.values) v = -v;
      f.periodic_interp_ = PeriodicHermite::from_grid(f.periodic_);
    }
    if (has_radial()) {
      auto h = radial_.h;
      f.radial_.h = [h](double r) { return -h(r); };
      f.radial_.params.reset();
    }
    return f;
  }

 private:
  double constant_ = 0.0;
  PeriodicGrid periodic_;
  PeriodicHermite periodic_interp_;
  RadialSource radial_;
  double lorentz_ = 0.0, sup_radial_ = 0.0;
};

struct HypothesisCheck {
  bool periodic_ok = true;   // |H₁ − [H₁]|∞ < 2√2
  bool decaying_ok = true;   // |H₂|₍₂,₁₎ < (2/π)^{3/2}
  bool mixed_ok = true;      // (√2/4)|H₁ − [H₁]|∞ + (π/2)^{3/2}|H₂|₍₂,₁₎ < 1
  double mixed_value = 0.0;
  bool all() const { return periodic_ok && decaying_ok && mixed_ok; }
};

inline HypothesisCheck check_hypotheses(const CurvatureField& f) {
  HypothesisCheck h;
  const double per = f.periodic_sup();
  const double lor = f.radial_lorentz();
  h.periodic_ok = per < 2.0 * std::sqrt(2.0);
  h.decaying_ok = lor < std::pow(2.0 / kPi, 1.5);
  h.mixed_value = std::sqrt(2.0) / 4.0 * per + std::pow(kPi / 2.0, 1.5) * lor;
  h.mixed_ok = h.mixed_value < 1.0;
  return h;
}

// Q = Q_periodic + Q_decaying + (c/2)·p, with div Q = H.
class VectorPotential {
 public:
  VectorPotential() = default;
  explicit VectorPotential(const CurvatureField& f) : linear_(f.constant()) {
    if (f.has_periodic()) periodic_ = solve_torus_poisson(f.periodic());
    if (f.has_radial()) radial_ = RadialPotential(f.radial().h, f.radial().r_max, f.radial().intervals);
  }

  double linear_coefficient() const { return linear_; }
  const TorusPotential& periodic() const { return periodic_; }
  const RadialPotential& radial() const { return radial_; }
  bool has_periodic() const { return periodic_.size() > 0; }
  bool has_radial() const { return !radial_.empty(); }

  Vec2 value(Vec2 p) const {
    Vec2 q = 0.5 * linear_ * p;
    if (has_periodic()) q += periodic_.value(p);
    if (has_radial()) q += radial_.value(p);
    return q;
  }

  // Q(p) together with the divergence of the interpolated field.
  std::pair<Vec2, double> value_div(Vec2 p) const {
    Vec2 q = 0.5 * linear_ * p;
    double d = linear_;
    if (has_periodic()) {
      auto [qp, dp] = periodic_.value_div(p);
      q += qp;
      d += dp;
    }
    if (has_radial()) {
      auto [qr, dr] = radial_.value_div(p);
      q += qr;
      d += dr;
    }
    return {q, d};
  }

  // |Q − (c/2)p|∞ from the tabulated grids.
  double reduced_sup() const {
    return (has_periodic() ? periodic_.sup_norm() : 0.0) + (has_radial() ? radial_.sup_norm() : 0.0);
  }

 private:
  double linear_ = 0.0;
  TorusPotential periodic_;
  RadialPotential radial_;
};

inline Vec2 q_eval(const VectorPotential& q, Vec2 p) { return q.value(p); }

// Q(p) = ((1/|p|)∫₀^|p| s h(s) ds) p/|p|, split as p/2 plus the potential of h − 1.
inline VectorPotential radial_potential(const RadialCurvature& h, double r_max = 200.0, std::size_t intervals = 40000) {
  return VectorPotential(CurvatureField::from_radial(h, r_max, intervals));
}

}  // namespace hloop
