#include <gtest/gtest.h>

#include <random>

#include "hloop/curvature_field.hpp"
#include "test_support.hpp"

using namespace hloop;
using namespace hloop::testing;

namespace {

// H = Σ a_k cos(2π k·p) + b_k sin(2π k·p) with analytic Q = −∇v, −Δv = H.
struct FourierField {
  struct Mode { int kx, ky; double a, b; };
  std::vector<Mode> modes;

  double h(Vec2 p) const {
    double s = 0.0;
    for (const auto& m : modes) {
      const double ph = kTwoPi * (m.kx * p.x + m.ky * p.y);
      s += m.a * std::cos(ph) + m.b * std::sin(ph);
    }
    return s;
  }
  Vec2 q(Vec2 p) const {
    Vec2 s;
    for (const auto& m : modes) {
      const double k2 = 4 * kPi * kPi * (m.kx * m.kx + m.ky * m.ky);
      const double ph = kTwoPi * (m.kx * p.x + m.ky * p.y);
      // v = (a cos + b sin)/k2, ∇v = 2π k (−a sin + b cos)/k2.
      const double d = kTwoPi * (-m.a * std::sin(ph) + m.b * std::cos(ph)) / k2;
      s -= d * Vec2{double(m.kx), double(m.ky)};
    }
    return s;
  }
  PeriodicGrid grid(int m) const {
    return PeriodicGrid::sample([this](double x, double y) { return h({x, y}); }, m);
  }
};

FourierField random_fourier(std::mt19937_64& rng, double target_sup) {
  std::uniform_int_distribution<int> k(-3, 3);
  std::normal_distribution<double> g(0.0, 1.0);
  FourierField f;
  for (int i = 0; i < 5; ++i) {
    int kx = k(rng), ky = k(rng);
    if (kx == 0 && ky == 0) kx = 1;
    f.modes.push_back({kx, ky, g(rng), g(rng)});
  }
  double sup = 0.0;
  for (int j = 0; j < 64; ++j)
    for (int i = 0; i < 64; ++i) sup = std::max(sup, std::abs(f.h({i / 64.0, j / 64.0})));
  for (auto& m : f.modes) { m.a *= target_sup / sup; m.b *= target_sup / sup; }
  return f;
}

double gaussian(double r) { return std::exp(-r * r); }
double gaussian_g(double r) { return r == 0.0 ? 0.0 : (1 - std::exp(-r * r)) / (2 * r); }

}  // namespace

TEST(FieldMean, Examples) {
  EXPECT_NEAR(mean_unit_cell(PeriodicGrid::sample([](double, double) { return 2.5; }, 16)), 2.5, 1e-15);
  EXPECT_NEAR(mean_unit_cell(PeriodicGrid::sample([](double x, double) { return std::sin(kTwoPi * x); }, 32)), 0.0, 1e-15);
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-1, 1);
  auto g = PeriodicGrid::sample([&](double, double) { return u(rng); }, 24);
  long double s = 0;
  for (int j = 0; j < 24; ++j)
    for (int i = 0; i < 24; ++i) s += g(i, j);
  EXPECT_NEAR(mean_unit_cell(g), double(s / 576.0L), 1e-15);
  EXPECT_THROW(mean_unit_cell(PeriodicGrid{}), Error);
}

TEST(FieldTorusPoisson, AnalyticProductMode) {
  const int m = 64;
  auto g = PeriodicGrid::sample(
      [](double x, double y) { return 8 * kPi * kPi * std::sin(kTwoPi * x) * std::sin(kTwoPi * y); }, m);
  auto q = solve_torus_poisson(g);
  double err = 0.0;
  for (int j = 0; j < m; ++j)
    for (int i = 0; i < m; ++i) {
      const double x = double(i) / m, y = double(j) / m;
      const Vec2 grad{kTwoPi * std::cos(kTwoPi * x) * std::sin(kTwoPi * y), kTwoPi * std::sin(kTwoPi * x) * std::cos(kTwoPi * y)};
      err = std::max(err, norm(q.node(i, j) + grad));
    }
  EXPECT_LE(err, 1e-12);
}

TEST(FieldTorusPoisson, ZeroAndSingleMode) {
  auto z = solve_torus_poisson(PeriodicGrid::sample([](double, double) { return 0.0; }, 16));
  EXPECT_EQ(z.sup_norm(), 0.0);
  const int m = 32;
  auto q = solve_torus_poisson(PeriodicGrid::sample([](double x, double) { return std::cos(kTwoPi * x); }, m));
  for (int i = 0; i < m; ++i) {
    // ∂x v = −sin(2πx)/(2π), Q = −∇v.
    EXPECT_NEAR(q.node(i, 3).x, std::sin(kTwoPi * i / m) / kTwoPi, 1e-14);
    EXPECT_NEAR(q.node(i, 3).y, 0.0, 1e-14);
  }
}

TEST(FieldTorusPoisson, NonZeroMeanRejected) {
  try {
    solve_torus_poisson(PeriodicGrid::sample([](double x, double) { return 1.0 + std::cos(kTwoPi * x); }, 16));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::NonZeroMean);
  }
}

TEST(FieldTorusPoisson, SpectralDivergenceAndBound) {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 5; ++trial) {
    auto f = random_fourier(rng, 1.5);
    auto g = f.grid(128);
    auto q = solve_torus_poisson(g);
    EXPECT_LE(q.sup_norm(), std::sqrt(2.0) / 8 * g.oscillation() + 1e-8);
    double err = 0.0;
    for (int j = 0; j < 128; j += 3)
      for (int i = 0; i < 128; i += 5) {
        auto [v, d] = q.value_div({i / 128.0, j / 128.0});
        err = std::max(err, std::abs(d - g(i, j)));
        err = std::max(err, norm(v - f.q({i / 128.0, j / 128.0})));
      }
    EXPECT_LE(err, 1e-8 * std::max(1.0, g.sup_abs()));
  }
}

TEST(FieldLorentz, DiscIndicatorZeroAndGaussian) {
  for (double r : {0.5, 1.0, 2.0}) {
    const double v = lorentz_norm_21([r](double s) { return s <= r ? 1.0 : 0.0; }, 4.0, 400000);
    EXPECT_NEAR(v, 2 * r * std::sqrt(kPi), 1e-4);
  }
  EXPECT_EQ(lorentz_norm_21([](double) { return 0.0; }, 5.0), 0.0);
  const double radial = lorentz_norm_21(gaussian, 8.0);
  // Brute-force rearrangement of a fine Cartesian grid, independent of the radial code path.
  const int n = 1200;
  const double half = 6.0, h = 2 * half / n;
  std::vector<double> vals;
  vals.reserve(n * n);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      const double x = -half + (i + 0.5) * h, y = -half + (j + 0.5) * h;
      vals.push_back(std::exp(-(x * x + y * y)));
    }
  std::sort(vals.begin(), vals.end(), std::greater<>());
  double t = 0.0, brute = 0.0;
  for (double v : vals) {
    brute += v * 2 * (std::sqrt(t + h * h) - std::sqrt(t));
    t += h * h;
  }
  EXPECT_NEAR(radial / brute, 1.0, 1e-3);
  EXPECT_NEAR(radial, kPi, 1e-3);
}

TEST(FieldPlanePoisson, DiscIndicatorClosedForm) {
  auto q = solve_plane_poisson_decaying([](double s) { return s <= 1.0 ? 1.0 : 0.0; }, 100.0, 20000);
  for (double r : {0.1, 0.25, 0.5, 0.9, 1.0, 1.5, 2.0, 10.0, 99.0, 150.0}) {
    const double expected = r <= 1.0 ? r / 2 : 1.0 / (2 * r);
    EXPECT_NEAR(q.magnitude(r), expected, 1e-9) << r;
    const Vec2 p{r * 0.6, r * 0.8};
    EXPECT_NEAR(norm(q.value(p) - expected / r * p), 0.0, 1e-9);
  }
}

TEST(FieldPlanePoisson, ZeroAndGaussianDivergence) {
  auto z = solve_plane_poisson_decaying([](double) { return 0.0; }, 10.0, 100);
  EXPECT_EQ(norm(z.value({0.3, 0.4})), 0.0);
  auto q = solve_plane_poisson_decaying(gaussian, 40.0, 20000);
  const double e = 1e-4;
  double err = 0.0;
  for (double x = -3.0; x <= 3.0; x += 0.37)
    for (double y = -3.0; y <= 3.0; y += 0.41) {
      const double div = (q.value({x + e, y}).x - q.value({x - e, y}).x + q.value({x, y + e}).y - q.value({x, y - e}).y) / (2 * e);
      err = std::max(err, std::abs(div - gaussian(std::hypot(x, y))));
      EXPECT_NEAR(q.magnitude(std::hypot(x, y)), gaussian_g(std::hypot(x, y)), 1e-10);
    }
  EXPECT_LE(err, 1e-6);
  EXPECT_LE(q.sup_norm(), std::pow(kPi / 2, 1.5) * lorentz_norm_21(gaussian, 40.0) + 1e-6);
}

TEST(FieldPlanePoisson, NonIntegrableRejected) {
  try {
    solve_plane_poisson_decaying([](double) { return 1.0; }, 50.0, 1000);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::NonIntegrable);
  }
  EXPECT_THROW(solve_plane_poisson_decaying([](double s) { return s < 2 ? 1.0 / (s - 1.0) : 0.0; }, 5.0, 1000), Error);
}

TEST(FieldRadialCurvature, MollificationIsC2) {
  RadialCurvature h(1.0, 2.0);
  const double s0 = h.s0, d = 1e-5;
  EXPECT_NEAR(h(s0 - 1e-12), h(s0 + 1e-12), 1e-10);
  const double dl = (h(s0) - h(s0 - d)) / d, dr = (h(s0 + d) - h(s0)) / d;
  EXPECT_NEAR(dl, dr, 1e-4);
  const double d2l = (h(s0) - 2 * h(s0 - d) + h(s0 - 2 * d)) / (d * d);
  const double d2r = (h(s0 + 2 * d) - 2 * h(s0 + d) + h(s0)) / (d * d);
  EXPECT_NEAR(d2l, d2r, 1e-2);
  for (double s : {1.0, 2.0, 5.0}) EXPECT_NEAR(h(s), 1 + 1 / (s * s), 1e-15);
  EXPECT_NEAR(h(0.3), h(-0.3), 0.0);
  EXPECT_TRUE(std::isfinite(h(0.0)));
  EXPECT_THROW(RadialCurvature(1.0, 1.0), Error);
  EXPECT_THROW(RadialCurvature(0.0, 2.0), Error);
  RadialCurvature withb(1.0, 2.0, 0.0, [](double) { return 0.5; }, 0.5);
  EXPECT_DOUBLE_EQ(withb.tilde_amplitude(), 1.5);
  EXPECT_NEAR(withb(2.0), 1 + 0.25 + 0.5 / 4, 1e-15);
}

TEST(FieldRadialPotential, Examples) {
  // h ≡ 1 is carried entirely by the linear part.
  VectorPotential one(CurvatureField(1.0));
  for (Vec2 p : {Vec2{0.3, -0.2}, Vec2{4.0, 1.0}}) EXPECT_NEAR(norm(q_eval(one, p) - 0.5 * p), 0.0, 1e-12);
  RadialPotential zero([](double) { return 0.0; }, 10.0, 1000);
  EXPECT_EQ(norm(zero.value({1, 1})), 0.0);

  RadialCurvature h(1.0, 2.0);
  auto q = radial_potential(h, 50.0, 20000);
  for (double r : {0.2, 0.7, 1.0, 1.3, 3.0, 10.0, 40.0}) {
    const Vec2 p{0.6 * r, -0.8 * r};
    const double oracle = adaptive_simpson([&](double s) { return s * h(s); }, 0.0, std::min(r, 1.0), 1e-15) +
                          (r > 1.0 ? adaptive_simpson([&](double s) { return s * h(s); }, 1.0, r, 1e-15) : 0.0);
    EXPECT_NEAR(norm(q_eval(q, p)) / (oracle / r), 1.0, 1e-8) << r;
    EXPECT_NEAR(dot(q_eval(q, p), p) / (r * norm(q_eval(q, p))), 1.0, 1e-14);
  }
}

TEST(FieldComposite, QEvalExamples) {
  VectorPotential lin(CurvatureField(1.7));
  EXPECT_NEAR(norm(q_eval(lin, {2.0, -3.0}) - 0.85 * Vec2{2.0, -3.0}), 0.0, 1e-15);

  std::mt19937_64 rng(2);
  auto f = random_fourier(rng, 1.0);
  CurvatureField per(0.0, f.grid(64), std::nullopt);
  VectorPotential qp(per);
  for (int i = 0; i < 64; i += 7)
    for (int j = 0; j < 64; j += 9) {
      const Vec2 node = qp.periodic().node(i, j);
      const Vec2 at = q_eval(qp, {i / 64.0, j / 64.0});
      EXPECT_NEAR(norm(at - node), 0.0, 1e-14);
    }

  CurvatureField comp(0.4, f.grid(256), RadialSource{gaussian, 30.0, 20000});
  VectorPotential q(comp);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (int k = 0; k < 50; ++k) {
    const Vec2 p{u(rng), u(rng)};
    const double r = norm(p);
    const Vec2 oracle = f.q(p) + gaussian_g(r) / r * p + 0.2 * p;
    EXPECT_NEAR(norm(q_eval(q, p) - oracle), 0.0, 1e-6);
  }
}

TEST(FieldComposite, DivergenceIdentityPeriodicityAndDecay) {
  std::mt19937_64 rng(4);
  auto f = random_fourier(rng, 1.0);
  std::vector<Vec2> pts;
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (int k = 0; k < 100; ++k) pts.push_back({u(rng), u(rng)});
  auto max_error = [&](int m) {
    CurvatureField comp(-0.3, f.grid(m), RadialSource{gaussian, 30.0, 20000});
    VectorPotential q(comp);
    const double e = 1e-4;
    double err = 0.0;
    for (const auto& p : pts) {
      const double div = (q.value({p.x + e, p.y}).x - q.value({p.x - e, p.y}).x + q.value({p.x, p.y + e}).y -
                          q.value({p.x, p.y - e}).y) / (2 * e);
      err = std::max(err, std::abs(div - f.h(p) + 0.3 - gaussian(norm(p))));
      EXPECT_NEAR(q.value_div(p).second, div, 1e-6);
    }
    return err;
  };
  const double e128 = max_error(128), e256 = max_error(256);
  const double h = 1.0 / 256;
  EXPECT_LE(e256, 1e-6 + 100.0 * h * h);
  EXPECT_GE(e128 / e256, 4.0);  // at least second order in the grid spacing
  VectorPotential per(CurvatureField(0.0, f.grid(64), std::nullopt));
  for (int k = 0; k < 20; ++k) {
    const Vec2 p{u(rng), u(rng)};
    EXPECT_NEAR(norm(per.value(p) - per.value(p + Vec2{3.0, -2.0})), 0.0, 1e-12);
  }
  CurvatureField comp(0.0, std::nullopt, RadialSource{gaussian, 30.0, 20000});
  VectorPotential q(comp);
  const auto& rad = q.radial();
  EXPECT_LE(std::abs(rad.magnitude(rad.range())), 1e-3 * comp.radial_sup() * rad.range());
}

TEST(FieldComposite, MeanFoldedIntoConstantAndMetadata) {
  auto g = PeriodicGrid::sample([](double x, double y) { return 0.7 + 0.5 * std::cos(kTwoPi * x) * std::cos(kTwoPi * y); }, 32);
  CurvatureField f(0.1, g, std::nullopt);
  EXPECT_NEAR(f.constant(), 0.8, 1e-14);
  EXPECT_NEAR(mean_unit_cell(f.periodic()), 0.0, 1e-12);
  EXPECT_NEAR(f.periodic_sup(), 0.5, 1e-12);
  auto hyp = check_hypotheses(f);
  EXPECT_TRUE(hyp.all());
  CurvatureField big(0.0, PeriodicGrid::sample([](double x, double) { return 3.0 * std::cos(kTwoPi * x); }, 32), std::nullopt);
  EXPECT_FALSE(check_hypotheses(big).periodic_ok);
  CurvatureField rad(0.0, std::nullopt, RadialSource{[](double s) { return 2.0 * std::exp(-s * s); }, 20.0, 4000});
  EXPECT_FALSE(check_hypotheses(rad).decaying_ok);
  EXPECT_NEAR(rad.radial_lorentz(), 2 * kPi, 1e-3);
}
