#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <deque>
#include <optional>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "hloop/energy.hpp"

namespace hloop {

struct MinimizeOptions {
  std::size_t n = 256;
  std::size_t max_iterations = 4000;
  std::size_t history = 12;
  double gradient_tol = 1e-9;   // Euler–Lagrange residual relative to the circle curvature 2π/L
  double residual_tol = 1e-4;   // sup |K − H + λ|
  double area_tol = 1e-8;       // relative
  bool recenter = true;
  std::size_t recenter_every = 10;
  std::optional<ClosedCurve> initial_curve;
  std::optional<Vec2> initial_center;
  double initial_perturbation = 0.0;  // relative amplitude of random low modes added to the guess
  unsigned long long seed = 0;
};

struct MinimizeResult {
  ClosedCurve curve;
  double tau = 0.0;
  double lambda = 0.0;
  double energy_value = 0.0;
  double curvature_residual = 0.0;
  double area_error = 0.0;
  double gradient_residual = 0.0;
  double speed_variation = 0.0;
  std::size_t iterations = 0;
  bool converged = false;
  std::string message;
};

// Scales about the mean so that the signed area equals τ. Tiny wrong-sign areas are
// repaired by reversing the parametrization.
inline ClosedCurve project_to_area(const ClosedCurve& c, double tau) {
  double a = signed_area(c);
  ClosedCurve cur = c;
  if (a * tau <= 0.0) {
    if (std::abs(a) > 0.1 * std::abs(tau) || a == 0.0)
      throw Error(ErrorKind::SignIncompatible, "curve area " + std::to_string(a) + " incompatible with tau " + std::to_string(tau));
    cur = reverse(c);
    a = -a;
  }
  return scale_about_mean(cur, std::sqrt(tau / a));
}

// ω_p(t) = p + √(|τ|/π) e^{−2πi sign(τ) t}.
inline ClosedCurve circle_family(Vec2 p, double tau, std::size_t n) {
  const double r = std::sqrt(std::abs(tau) / kPi);
  const double s = tau > 0 ? -1.0 : 1.0;
  return ClosedCurve::from_function(
      [&](double t) { return p + r * Vec2{std::cos(kTwoPi * t), s * std::sin(kTwoPi * t)}; }, n);
}

inline double extract_lagrange_multiplier(const ClosedCurve& c, const EnergyContext& ctx) {
  auto k = curvature(c);
  auto s = speed(c);
  double num = 0.0, den = 0.0;
  for (std::size_t j = 0; j < c.size(); ++j) {
    num += (ctx.curvature_at(c[j]) - k[j]) * s[j];
    den += s[j];
  }
  return num / den;
}

inline double curvature_residual(const ClosedCurve& c, const EnergyContext& ctx, double lambda) {
  auto k = curvature(c);
  double r = 0.0;
  for (std::size_t j = 0; j < c.size(); ++j) r = std::max(r, std::abs(k[j] - ctx.curvature_at(c[j]) + lambda));
  return r;
}

namespace detail {

struct Evaluation {
  double value = 0.0;
  double dirichlet = 0.0;
  double area = 0.0;
  double mean_speed = 0.0;
  std::vector<Vec2> grad;      // projected gradient
  double residual = 0.0;       // sup of the Euler–Lagrange residual in curvature units
};

inline double inner(const std::vector<Vec2>& a, const std::vector<Vec2>& b) {
  double s = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) s += dot(a[j], b[j]);
  return s / static_cast<double>(a.size());
}

// f = D + A_H on the area-τ slice; gradient of f∘P where P rescales about the mean.
inline Evaluation evaluate(const std::vector<Vec2>& v, const EnergyContext& ctx) {
  const std::size_t n = v.size();
  Evaluation e;
  auto d1 = spectral::derivative(v, 1.0, 1);
  auto d2 = spectral::derivative(v, 1.0, 2);
  Vec2 m;
  for (const auto& p : v) m += p;
  m /= static_cast<double>(n);
  double dsum = 0.0, ah = 0.0, area = 0.0, spd = 0.0;
  std::vector<double> h(n);
  for (std::size_t j = 0; j < n; ++j) {
    dsum += norm2(d1[j]);
    spd += norm(d1[j]);
    auto [q, div] = ctx.potential().value_div(v[j]);
    h[j] = div;
    ah += dot(q, rot(d1[j]));
    area += dot(v[j] - m, rot(d1[j]));
  }
  const double inv = 1.0 / static_cast<double>(n);
  e.dirichlet = std::sqrt(dsum * inv);
  e.area = 0.5 * area * inv;
  e.mean_speed = spd * inv;
  e.value = e.dirichlet + ah * inv;
  std::vector<Vec2> g(n), w(n);
  for (std::size_t j = 0; j < n; ++j) {
    g[j] = -d2[j] / e.dirichlet + h[j] * rot(d1[j]);
    w[j] = v[j] - m;
  }
  const double mu = inner(g, w) / (2.0 * e.area);
  e.grad.resize(n);
  for (std::size_t j = 0; j < n; ++j) e.grad[j] = g[j] - mu * rot(d1[j]);
  // Residual with the least-squares multiplier along iu̇.
  double num = 0.0, den = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    num += dot(g[j], rot(d1[j]));
    den += norm2(d1[j]);
  }
  const double lam = num / den;
  double r = 0.0;
  for (std::size_t j = 0; j < n; ++j) r = std::max(r, norm(g[j] - lam * rot(d1[j])));
  e.residual = r / (e.mean_speed * e.mean_speed) * e.dirichlet;
  return e;
}

// Approximate inverse Hessian of D: mode k scaled by D/((2πk)² + (2π)²).
inline std::vector<Vec2> precondition(const std::vector<Vec2>& r, double dirichlet) {
  const std::size_t n = r.size();
  std::vector<fft::cplx> z(n);
  for (std::size_t j = 0; j < n; ++j) z[j] = to_complex(r[j]);
  fft::forward(z);
  for (std::size_t k = 0; k < n; ++k) {
    const double f = kTwoPi * fft::frequency(k, n);
    z[k] *= dirichlet / ((f * f + kTwoPi * kTwoPi) * static_cast<double>(n));
  }
  fft::inverse(z);
  std::vector<Vec2> out(n);
  for (std::size_t j = 0; j < n; ++j) out[j] = to_vec(z[j]);
  return out;
}

inline bool project(std::vector<Vec2>& v, double tau) {
  const std::size_t n = v.size();
  auto d1 = spectral::derivative(v, 1.0, 1);
  Vec2 m;
  for (const auto& p : v) m += p;
  m /= static_cast<double>(n);
  double a = 0.0;
  for (std::size_t j = 0; j < n; ++j) a += dot(v[j] - m, rot(d1[j]));
  a *= 0.5 / static_cast<double>(n);
  if (!(a * tau > 0.0) || !std::isfinite(a)) return false;
  const double s = std::sqrt(tau / a);
  for (auto& p : v) p = m + s * (p - m);
  return true;
}

inline Vec2 best_circle_center(const EnergyContext& ctx, double tau) {
  const auto& f = ctx.field();
  std::vector<Vec2> candidates;
  if (f.has_radial()) {
    const double r = std::sqrt(std::abs(tau) / kPi);
    const double b = std::min(f.radial().r_max * 0.5, 2.0 * (r + 1.0));
    for (int i = -6; i <= 6; ++i)
      for (int j = -6; j <= 6; ++j) candidates.push_back({b * i / 6.0, b * j / 6.0});
  } else if (f.has_periodic()) {
    for (int i = 0; i < 12; ++i)
      for (int j = 0; j < 12; ++j) candidates.push_back({i / 12.0, j / 12.0});
  } else {
    return {};
  }
  Vec2 best;
  double best_e = std::numeric_limits<double>::infinity();
  for (const auto& p : candidates) {
    const double e = anisotropic_area(circle_family(p, tau, 128), ctx);
    if (e < best_e - 1e-14) {
      best_e = e;
      best = p;
    }
  }
  return best;
}

}  // namespace detail

inline MinimizeResult minimize_area_constrained(const EnergyContext& ctx, double tau, const MinimizeOptions& opts = {}) {
  if (tau == 0.0 || !std::isfinite(tau)) throw Error(ErrorKind::InvalidArgument, "tau must be a nonzero finite number");
  if (opts.n < 16 || opts.n % 2 != 0) throw Error(ErrorKind::InvalidArgument, "sample count must be even and >= 16");
  if (!(opts.gradient_tol > 0 && opts.residual_tol > 0 && opts.area_tol > 0))
    throw Error(ErrorKind::InvalidArgument, "tolerances must be positive");

  ClosedCurve guess = opts.initial_curve
                          ? (opts.initial_curve->size() == opts.n ? *opts.initial_curve
                                                                  : upsample(*opts.initial_curve, opts.n))
                          : circle_family(opts.initial_center ? *opts.initial_center : detail::best_circle_center(ctx, tau), tau, opts.n);
  if (opts.initial_perturbation > 0.0) {
    std::mt19937_64 rng(opts.seed);
    std::normal_distribution<double> g(0.0, 1.0);
    const double r = std::sqrt(std::abs(tau) / kPi) * opts.initial_perturbation;
    std::vector<Vec2> s(guess.samples().begin(), guess.samples().end());
    for (int k = 2; k <= 4; ++k) {
      const double a = g(rng) * r / k, b = g(rng) * r / k, c = g(rng) * r / k, d = g(rng) * r / k;
      for (std::size_t j = 0; j < s.size(); ++j) {
        const double t = kTwoPi * k * guess.parameter(j);
        s[j] += Vec2{a * std::cos(t) + b * std::sin(t), c * std::cos(t) + d * std::sin(t)};
      }
    }
    guess = ClosedCurve(std::move(s), 1.0);
  }
  guess = project_to_area(ClosedCurve(std::vector<Vec2>(guess.samples().begin(), guess.samples().end()), 1.0), tau);

  const bool periodic_only = ctx.field().has_periodic() && !ctx.field().has_radial();
  std::vector<Vec2> v(guess.samples().begin(), guess.samples().end());
  auto cur = detail::evaluate(v, ctx);
  std::deque<std::pair<std::vector<Vec2>, std::vector<Vec2>>> hist;
  const std::size_t n = v.size();
  std::size_t it = 0;
  bool grad_ok = false;
  std::string message;
  auto target = [&](const detail::Evaluation& e) { return opts.gradient_tol * kTwoPi / (e.mean_speed); };

  for (; it < opts.max_iterations; ++it) {
    // mean_speed = L for period 1, so target is gtol·(2π/L).
    if (cur.residual <= target(cur)) {
      grad_ok = true;
      break;
    }
    // Two-loop recursion with the Fourier preconditioner as initial inverse Hessian.
    std::vector<Vec2> q = cur.grad;
    std::vector<double> alpha(hist.size()), rho(hist.size());
    for (std::size_t i = hist.size(); i-- > 0;) {
      rho[i] = 1.0 / detail::inner(hist[i].second, hist[i].first);
      alpha[i] = rho[i] * detail::inner(hist[i].first, q);
      for (std::size_t j = 0; j < n; ++j) q[j] -= alpha[i] * hist[i].second[j];
    }
    auto r = detail::precondition(q, cur.dirichlet);
    if (!hist.empty()) {
      const auto& [s, y] = hist.back();
      const double gamma = detail::inner(s, y) / detail::inner(y, detail::precondition(y, cur.dirichlet));
      for (auto& p : r) p *= gamma;
    }
    for (std::size_t i = 0; i < hist.size(); ++i) {
      const double beta = rho[i] * detail::inner(hist[i].second, r);
      for (std::size_t j = 0; j < n; ++j) r[j] += (alpha[i] - beta) * hist[i].first[j];
    }
    std::vector<Vec2> dir(n);
    for (std::size_t j = 0; j < n; ++j) dir[j] = -r[j];
    double slope = detail::inner(cur.grad, dir);
    if (!(slope < 0.0)) {
      hist.clear();
      dir = detail::precondition(cur.grad, cur.dirichlet);
      for (auto& p : dir) p = -p;
      slope = detail::inner(cur.grad, dir);
    }

    // Keep the first steps of a fresh history small relative to the curve size.
    double step = 1.0;
    if (hist.empty()) {
      double dmax = 0.0;
      for (const auto& p : dir) dmax = std::max(dmax, norm(p));
      const double size = cur.mean_speed / kTwoPi;
      if (dmax * step > 0.05 * size) step = 0.05 * size / dmax;
    }
    bool accepted = false;
    std::vector<Vec2> trial(n);
    detail::Evaluation next;
    for (int ls = 0; ls < 50; ++ls) {
      for (std::size_t j = 0; j < n; ++j) trial[j] = v[j] + step * dir[j];
      if (detail::project(trial, tau)) {
        next = detail::evaluate(trial, ctx);
        if (std::isfinite(next.value) && next.value <= cur.value + 1e-4 * step * slope + 1e-14 * std::abs(cur.value)) {
          accepted = true;
          break;
        }
      }
      step *= 0.5;
    }
    if (!accepted) {
      if (!hist.empty()) {
        hist.clear();
        continue;
      }
      message = "line search stalled";
      break;
    }
    std::vector<Vec2> s(n), y(n);
    for (std::size_t j = 0; j < n; ++j) {
      s[j] = trial[j] - v[j];
      y[j] = next.grad[j] - cur.grad[j];
    }
    const double sy = detail::inner(s, y);
    if (sy > 1e-12 * std::sqrt(detail::inner(s, s) * detail::inner(y, y))) {
      hist.emplace_back(std::move(s), std::move(y));
      if (hist.size() > opts.history) hist.pop_front();
    }
    v = std::move(trial);
    cur = std::move(next);

    if (periodic_only && opts.recenter && (it + 1) % opts.recenter_every == 0) {
      Vec2 m;
      for (const auto& p : v) m += p;
      m /= static_cast<double>(n);
      const Vec2 shift{-std::floor(m.x), -std::floor(m.y)};
      if (shift.x != 0.0 || shift.y != 0.0) {
        for (auto& p : v) p += shift;
        cur = detail::evaluate(v, ctx);
      }
    }
  }
  if (!grad_ok && message.empty()) message = it >= opts.max_iterations ? "maximum iterations reached" : message;

  MinimizeResult res;
  res.tau = tau;
  res.iterations = it;
  res.gradient_residual = cur.residual;
  res.curve = reparametrize_constant_speed(ClosedCurve(v, 1.0));
  res.lambda = extract_lagrange_multiplier(res.curve, ctx);
  res.energy_value = energy(res.curve, ctx);
  res.curvature_residual = curvature_residual(res.curve, ctx, res.lambda);
  res.area_error = std::abs(signed_area(res.curve) - tau) / std::abs(tau);
  res.speed_variation = speed_variation(res.curve);
  res.converged = grad_ok && res.curvature_residual <= opts.residual_tol && res.area_error <= opts.area_tol;
  if (!res.converged && message.empty()) message = "tolerances not met";
  res.message = res.converged ? "converged" : message;
  return res;
}

struct MultiplierBounds {
  bool ok = false;
  double value = 0.0;  // sign(τ)(λ − c)
  double lower = 0.0;
  double upper = 0.0;
};

// Bounds for the reduced field H − c, whose multiplier is λ − c.
inline MultiplierBounds check_multiplier_bounds(double tau, double lambda, const EnergyContext& ctx) {
  const double q = ctx.potential().reduced_sup();
  if (q >= 1.0) throw Error(ErrorKind::FieldTooLarge, "|Q|_inf = " + std::to_string(q) + " >= 1");
  const double ratio = (1 + q) / (1 - q);
  const double c1 = ratio * kIsoConst / 2.0;
  const double c2 = ratio * ratio * ctx.field().reduced_sup();
  MultiplierBounds b;
  const double rt = std::sqrt(std::abs(tau));
  b.value = (tau > 0 ? 1.0 : -1.0) * (lambda - ctx.field().constant());
  b.lower = kIsoConst / (2.0 * rt) - c2;
  b.upper = c1 / rt + c2;
  const double slack = 1e-9 * std::max(1.0, std::abs(b.upper));
  b.ok = b.value >= b.lower - slack && b.value <= b.upper + slack;
  return b;
}

struct SweepRow {
  double tau = 0.0;
  double S = 0.0;
  double lambda = 0.0;
  double residual = 0.0;
  double area_error = 0.0;
  bool simple = false;
  bool converged = false;
  double S_tilde = 0.0;        // S/√|τ|
  double energy_lower = 0.0;   // (1 − |Q̃|∞) S √|τ| + cτ
  double energy_upper = 0.0;   // (1 + |Q̃|∞) S √|τ| + cτ
  bool energy_bounds_ok = false;
  bool multiplier_bounds_ok = false;
  std::optional<double> dS_dtau;  // derivative estimate on interior rows
  bool smooth = false;
  std::string message;
  ClosedCurve curve;
};

struct SweepOptions {
  MinimizeOptions minimize;
  bool warm_start = true;
  bool compare_cold_start = true;  // with warm starts, also try the default circle and keep the lower energy
  unsigned jobs = 1;
};

namespace detail {

inline void fill_sweep_row(SweepRow& row, const MinimizeResult& r, const EnergyContext& ctx) {
  row.S = r.energy_value;
  row.lambda = r.lambda;
  row.residual = r.curvature_residual;
  row.area_error = r.area_error;
  row.converged = r.converged;
  row.message = r.message;
  row.curve = r.curve;
  row.simple = is_simple(r.curve).simple;
  const double rt = std::sqrt(std::abs(row.tau));
  row.S_tilde = row.S / rt;
  const double q = ctx.potential().reduced_sup();
  const double c = ctx.field().constant();
  row.energy_lower = (1 - q) * kIsoConst * rt + c * row.tau;
  row.energy_upper = (1 + q) * kIsoConst * rt + c * row.tau;
  const double margin = 1e-6 * std::max(1.0, kIsoConst * rt);
  row.energy_bounds_ok = row.S >= row.energy_lower - margin && row.S <= row.energy_upper + margin;
  try {
    row.multiplier_bounds_ok = check_multiplier_bounds(row.tau, row.lambda, ctx).ok;
  } catch (const Error&) {
    row.multiplier_bounds_ok = false;
  }
}

// dS/dτ via S = √|τ| S̃ with S̃ differenced in x = log|τ|; S̃ varies slowly so the
// difference quotient carries little of the derivative.
inline void estimate_derivatives(std::vector<SweepRow>& rows) {
  auto deriv = [](const SweepRow& a, const SweepRow& b) {
    return (b.S_tilde - a.S_tilde) / (std::log(std::abs(b.tau)) - std::log(std::abs(a.tau)));
  };
  for (std::size_t i = 1; i + 1 < rows.size(); ++i) {
    const auto &l = rows[i - 1], &m = rows[i], &r = rows[i + 1];
    if (!(l.converged && m.converged && r.converged)) continue;
    if (l.tau * m.tau <= 0 || m.tau * r.tau <= 0) continue;
    const double hl = std::log(std::abs(m.tau)) - std::log(std::abs(l.tau));
    const double hr = std::log(std::abs(r.tau)) - std::log(std::abs(m.tau));
    const double dl = deriv(l, m), dr = deriv(m, r);
    const double dc = (hl * hl * dr * hr + hr * hr * dl * hl) / (hl * hr * (hl + hr)) ;
    const double rt = std::sqrt(std::abs(m.tau));
    const double sgn = m.tau > 0 ? 1.0 : -1.0;
    auto to_ds = [&](double dx) { return sgn * m.S_tilde / (2 * rt) + rt * dx / m.tau; };
    rows[i].dS_dtau = to_ds(dc);
    const double dsl = to_ds(dl), dsr = to_ds(dr);
    rows[i].smooth = std::abs(dsl - dsr) <= 0.1 * std::abs(*rows[i].dS_dtau);
  }
}

}  // namespace detail

inline std::vector<SweepRow> sweep_isoperimetric(const EnergyContext& ctx, const std::vector<double>& taus,
                                                 const SweepOptions& opts = {}) {
  if (taus.empty()) throw Error(ErrorKind::InvalidArgument, "empty tau grid");
  for (std::size_t i = 0; i < taus.size(); ++i) {
    if (taus[i] == 0.0 || !std::isfinite(taus[i])) throw Error(ErrorKind::InvalidArgument, "tau grid contains zero");
    if (i > 0 && !(taus[i] > taus[i - 1])) throw Error(ErrorKind::InvalidArgument, "tau grid must be strictly increasing");
  }
  std::vector<SweepRow> rows(taus.size());
  for (std::size_t i = 0; i < taus.size(); ++i) rows[i].tau = taus[i];

  auto run_row = [&](std::size_t i, const std::optional<ClosedCurve>& warm) {
    MinimizeOptions mo = opts.minimize;
    if (warm) mo.initial_curve = *warm;
    auto r = minimize_area_constrained(ctx, taus[i], mo);
    if (warm && opts.compare_cold_start) {
      MinimizeOptions cold = opts.minimize;
      cold.initial_curve.reset();
      auto rc = minimize_area_constrained(ctx, taus[i], cold);
      if ((rc.converged && !r.converged) || (rc.converged == r.converged && rc.energy_value < r.energy_value)) r = std::move(rc);
    }
    detail::fill_sweep_row(rows[i], r, ctx);
  };

  if (opts.warm_start) {
    // Start from the τ closest to zero on each side, moving outwards.
    std::vector<std::size_t> order;
    std::size_t first_pos = 0;
    while (first_pos < taus.size() && taus[first_pos] < 0) ++first_pos;
    for (std::size_t i = first_pos; i-- > 0;) order.push_back(i);
    for (std::size_t i = first_pos; i < taus.size(); ++i) order.push_back(i);
    std::optional<ClosedCurve> prev;
    double prev_tau = 0.0;
    for (std::size_t i : order) {
      std::optional<ClosedCurve> warm;
      if (prev && prev_tau * taus[i] > 0) warm = scale_about_mean(*prev, std::sqrt(taus[i] / prev_tau));
      run_row(i, warm);
      prev = rows[i].curve;
      prev_tau = taus[i];
    }
  } else {
    const unsigned jobs = std::max(1u, opts.jobs);
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(taus.size());
    for (unsigned w = 0; w < jobs; ++w)
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < taus.size(); i = next++) {
          try {
            run_row(i, std::nullopt);
          } catch (...) {
            errors[i] = std::current_exception();
          }
        }
      });
    for (auto& t : pool) t.join();
    for (std::size_t i = 0; i < taus.size(); ++i)
      if (errors[i]) std::rethrow_exception(errors[i]);
  }
  detail::estimate_derivatives(rows);
  return rows;
}

}  // namespace hloop
