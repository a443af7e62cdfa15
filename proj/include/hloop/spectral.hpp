#pragma once

#include <cmath>
#include <complex>
#include <span>
#include <vector>

#include "hloop/fft.hpp"
#include "hloop/geometry.hpp"

namespace hloop::spectral {

using fft::cplx;

// Multiplier (iω)^order applied to mode k of an n-point signal of the given period.
// The Nyquist mode is treated as a cosine, so odd derivatives annihilate it.
inline cplx derivative_factor(std::size_t k, std::size_t n, double period, int order) {
  if (order == 0) return 1.0;
  if (n % 2 == 0 && k == n / 2 && (order % 2 == 1)) return 0.0;
  const double w = kTwoPi * fft::frequency(k, n) / period;
  cplx f = 1.0;
  for (int i = 0; i < order; ++i) f *= cplx(0.0, w);
  return f;
}

inline std::vector<cplx> differentiate(std::vector<cplx> z, double period, int order) {
  const std::size_t n = z.size();
  if (n == 0) return z;
  fft::forward(z);
  const double inv = 1.0 / static_cast<double>(n);
  for (std::size_t k = 0; k < n; ++k) z[k] *= derivative_factor(k, n, period, order) * inv;
  fft::inverse(z);
  return z;
}

inline std::vector<Vec2> derivative(std::span<const Vec2> u, double period, int order) {
  std::vector<cplx> z(u.size());
  for (std::size_t j = 0; j < u.size(); ++j) z[j] = to_complex(u[j]);
  z = differentiate(std::move(z), period, order);
  std::vector<Vec2> out(u.size());
  for (std::size_t j = 0; j < u.size(); ++j) out[j] = to_vec(z[j]);
  return out;
}

inline std::vector<double> derivative(std::span<const double> f, double period, int order) {
  std::vector<cplx> z(f.begin(), f.end());
  z = differentiate(std::move(z), period, order);
  std::vector<double> out(f.size());
  for (std::size_t j = 0; j < f.size(); ++j) out[j] = z[j].real();
  return out;
}

// Trigonometric interpolant of uniformly sampled complex data, evaluable anywhere.
class TrigSeries {
 public:
  TrigSeries() = default;
  TrigSeries(std::vector<cplx> samples, double period) : period_(period), c_(std::move(samples)) {
    fft::forward(c_);
    const double inv = 1.0 / static_cast<double>(c_.size());
    for (auto& c : c_) c *= inv;
  }

  static TrigSeries from_points(std::span<const Vec2> u, double period) {
    std::vector<cplx> z(u.size());
    for (std::size_t j = 0; j < u.size(); ++j) z[j] = to_complex(u[j]);
    return TrigSeries(std::move(z), period);
  }
  static TrigSeries from_scalars(std::span<const double> f, double period) {
    return TrigSeries(std::vector<cplx>(f.begin(), f.end()), period);
  }

  std::size_t size() const { return c_.size(); }
  double period() const { return period_; }
  const std::vector<cplx>& coefficients() const { return c_; }

  cplx eval(double t, int order = 0) const {
    const std::size_t n = c_.size();
    const double theta = kTwoPi * t / period_;
    const cplx step = std::polar(1.0, theta);
    cplx pos = 1.0;  // e^{ikθ} for k ≥ 0
    cplx sum = c_[0] * derivative_factor(0, n, period_, order);
    const std::size_t half = n / 2;
    for (std::size_t k = 1; k < half; ++k) {
      pos *= step;
      sum += c_[k] * derivative_factor(k, n, period_, order) * pos;
      sum += c_[n - k] * derivative_factor(n - k, n, period_, order) * std::conj(pos);
    }
    if (n % 2 == 0 && n >= 2) {
      // Real cosine representation of the Nyquist mode.
      const double w = kTwoPi * static_cast<double>(half) / period_;
      const double a = w * t;
      double d = 0.0;
      switch (order % 4) {
        case 0: d = std::cos(a); break;
        case 1: d = -std::sin(a); break;
        case 2: d = -std::cos(a); break;
        default: d = std::sin(a); break;
      }
      sum += c_[half] * d * std::pow(w, order);
    }
    return sum;
  }

  Vec2 point(double t, int order = 0) const { return to_vec(eval(t, order)); }
  double scalar(double t, int order = 0) const { return eval(t, order).real(); }

 private:
  double period_ = 1.0;
  std::vector<cplx> c_;
};

// Zero-padded resampling of a band-limited periodic signal to m points.
inline std::vector<cplx> resample(std::vector<cplx> z, std::size_t m) {
  const std::size_t n = z.size();
  if (m == n || n == 0) return z;
  fft::forward(z);
  std::vector<cplx> w(m, 0.0);
  const std::size_t keep = std::min(n, m) / 2;
  for (std::size_t k = 0; k < keep; ++k) w[k] = z[k];
  for (std::size_t k = 1; k < keep; ++k) w[m - k] = z[n - k];
  if (m > n && n % 2 == 0) {
    // Split the Nyquist coefficient evenly between ±n/2.
    w[n / 2] = 0.5 * z[n / 2];
    w[m - n / 2] = 0.5 * z[n / 2];
  } else if (m < n) {
    w[keep] = z[keep] + z[n - keep];
  }
  fft::inverse(w);
  const double inv = 1.0 / static_cast<double>(n);
  for (auto& v : w) v *= inv;
  return w;
}

inline std::vector<Vec2> resample(std::span<const Vec2> u, std::size_t m) {
  std::vector<cplx> z(u.size());
  for (std::size_t j = 0; j < u.size(); ++j) z[j] = to_complex(u[j]);
  z = resample(std::move(z), m);
  std::vector<Vec2> out(m);
  for (std::size_t j = 0; j < m; ++j) out[j] = to_vec(z[j]);
  return out;
}

}  // namespace hloop::spectral
