#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "hloop/iso_minimizer.hpp"
#include "hloop/physics.hpp"
#include "test_support.hpp"

using namespace hloop;
using namespace hloop::testing;

namespace {

EnergyContext periodic_ctx() {
  auto g = PeriodicGrid::sample([](double x, double y) { return 0.25 * (std::cos(kTwoPi * x) + std::cos(kTwoPi * y)); }, 256);
  return EnergyContext(CurvatureField(0.0, g, std::nullopt));
}

const MinimizeResult& periodic_minimizer() {
  static const EnergyContext ctx = periodic_ctx();
  static const MinimizeResult r = minimize_area_constrained(ctx, 1.0);
  return r;
}

const EnergyContext& shared_ctx() {
  static const EnergyContext ctx = periodic_ctx();
  return ctx;
}

}  // namespace

TEST(CurvatureOde, UnitCircle) {
  auto r = integrate_curvature_ode([](Vec2) { return 1.0; }, 0.0, {1.0, 0.0}, {0.0, 1.0}, kTwoPi);
  EXPECT_LE(r.closure_defect, 1e-8);
  for (const auto& s : r.trajectory) EXPECT_NEAR(norm(s.u), 1.0, 1e-9);
  EXPECT_NEAR(r.measured_length, kTwoPi, 1e-9);
}

TEST(CurvatureOde, SpeedConserved) {
  const auto& ctx = shared_ctx();
  for (double lam : {0.0, 3.0}) {
    auto r = integrate_curvature_ode(ctx, lam, {0.1, 0.2}, {0.6, 0.8}, 2.0);
    EXPECT_LE(r.speed_drift, 1e-10);
  }
}

TEST(CurvatureOde, ClosesFromMinimizer) {
  const auto& m = periodic_minimizer();
  ASSERT_TRUE(m.converged);
  auto r = integrate_from_curve(shared_ctx(), m.curve, m.lambda);
  EXPECT_LE(r.closure_defect, 1e-3);
  OdeOptions o;
  o.refine_length = true;
  auto rr = integrate_from_curve(shared_ctx(), m.curve, m.lambda, o);
  EXPECT_LE(rr.closure_defect, 1e-3);
  EXPECT_NEAR(rr.length, length(m.curve), 1e-6);
}

TEST(CurvatureOde, Errors) {
  const PlaneFn big = [](Vec2) { return 50.0; };
  OdeOptions o;
  o.steps = 3;
  try {
    integrate_curvature_ode(big, 0.0, {0, 0}, {1, 0}, 10.0, o);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::StepTooLarge);
  }
  EXPECT_THROW(integrate_curvature_ode(big, 0.0, {0, 0}, {2, 0}, 1.0), Error);
  EXPECT_THROW(integrate_curvature_ode(big, 0.0, {0, 0}, {1, 0}, -1.0), Error);
}

TEST(Magnetic, GyroradiusLaw) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.5, 2.0);
  for (int trial = 0; trial < 10; ++trial) {
    MagneticConfig cfg;
    const double b = u(rng);
    cfg.charge = (trial % 2 ? -1.0 : 1.0) * u(rng);
    cfg.speed = u(rng);
    cfg.mass = u(rng);
    cfg.b = [b](Vec2) { return b; };
    cfg.axial_speed = 0.3;
    const double rho = gyroradius(cfg.mass, cfg.speed, cfg.charge, b);
    cfg.duration = kTwoPi * rho / cfg.speed;
    auto m = simulate_magnetic(cfg);
    const double h = -cfg.charge * b / (cfg.mass * cfg.speed);
    const Vec2 center = cfg.position + rot(cfg.direction) / h;
    for (const auto& s : m.samples) EXPECT_NEAR(norm(Vec2{s.x, s.y} - center), rho, 1e-6 * rho);
    EXPECT_LE(m.closure_defect, 1e-8 * std::max(1.0, cfg.speed * cfg.duration));
    EXPECT_NEAR(m.samples.back().z, 0.3 * cfg.duration, 1e-12);
  }
}

TEST(Magnetic, ZeroFieldIsStraight) {
  MagneticConfig cfg;
  cfg.b = [](Vec2) { return 0.0; };
  cfg.direction = {0.6, 0.8};
  cfg.speed = 2.0;
  cfg.axial_speed = 1.0;
  auto m = simulate_magnetic(cfg);
  for (const auto& s : m.samples) {
    EXPECT_NEAR(s.x, 1.2 * s.t, 1e-12);
    EXPECT_NEAR(s.y, 1.6 * s.t, 1e-12);
    EXPECT_NEAR(s.z, s.t, 1e-12);
  }
}

TEST(Magnetic, FieldFromLoopGivesClosedOrbit) {
  const auto& mr = periodic_minimizer();
  ASSERT_TRUE(mr.converged);
  const auto& ctx = shared_ctx();
  MagneticConfig cfg;
  cfg.mass = 2.0;
  cfg.speed = 1.5;
  cfg.charge = -0.7;
  cfg.axial_speed = 0.5;
  cfg.b = magnetic_field_for_loop(ctx, mr.lambda, cfg.mass, cfg.speed, cfg.charge);
  const auto d = derivative(mr.curve, 1);
  cfg.position = mr.curve[0];
  cfg.direction = d[0] / norm(d[0]);
  cfg.duration = length(mr.curve) / cfg.speed;
  auto m = simulate_magnetic(cfg);
  EXPECT_LE(m.closure_defect, 1e-3);
  EXPECT_NEAR(m.samples.back().z - m.samples.front().z, 0.5 * cfg.duration, 1e-12);
}

TEST(Magnetic, Validation) {
  MagneticConfig cfg;
  cfg.mass = 0.0;
  EXPECT_THROW(simulate_magnetic(cfg), Error);
  cfg.mass = 1.0;
  cfg.speed = -1.0;
  EXPECT_THROW(simulate_magnetic(cfg), Error);
}

TEST(Cylinder, UnitCircleLift) {
  auto mesh = lift_to_cylinder(circle(1.0, 128), 0.5, 4.0, 128, 41);
  double zmin = 1e300, zmax = -1e300;
  for (const auto& v : mesh.vertices) {
    EXPECT_NEAR(std::hypot(v.x, v.y), 1.0, 1e-12);
    zmin = std::min(zmin, v.z);
    zmax = std::max(zmax, v.z);
  }
  EXPECT_NEAR(zmin, std::log(0.5), 1e-15);
  EXPECT_NEAR(zmax, std::log(4.0), 1e-15);
  EXPECT_LE(conformality_residual(mesh), 1e-8);
  EXPECT_EQ(mesh.faces.size(), 2u * 128 * 40);
}

TEST(Cylinder, MeanCurvatureIsHalfCurvature) {
  auto mesh = lift_to_cylinder(circle(1.0, 256), 1.0, 3.0, 512, 21);
  for (double h : mesh_mean_curvature(mesh)) EXPECT_NEAR(h, 0.5, 1e-3);
  auto mesh2 = lift_to_cylinder(circle(2.0, 256), 1.0, 3.0, 512, 21);
  for (double h : mesh_mean_curvature(mesh2)) EXPECT_NEAR(h, 0.25, 1e-3);
}

TEST(Cylinder, ObjExport) {
  auto mesh = lift_to_cylinder(circle(1.0, 64), 1.0, 2.0, 32, 3);
  std::ostringstream os;
  write_obj(os, mesh);
  std::istringstream is(os.str());
  std::string line;
  std::size_t v = 0, f = 0;
  while (std::getline(is, line)) {
    if (line.rfind("v ", 0) == 0) ++v;
    if (line.rfind("f ", 0) == 0) ++f;
  }
  EXPECT_EQ(v, 96u);
  EXPECT_EQ(f, 128u);
  EXPECT_THROW(lift_to_cylinder(circle(1.0, 64), 2.0, 1.0, 32, 3), Error);
}

TEST(VerifySolution, ExactCircle) {
  EnergyContext ctx{CurvatureField(1.0)};
  auto rep = verify_solution(circle(1.0), ctx, 0.0);
  EXPECT_TRUE(rep.ok(1e-8));
  EnergyContext flat{CurvatureField(0.0)};
  auto rep2 = verify_solution(circle(2.0), flat, -0.5);
  EXPECT_TRUE(rep2.ok(1e-8));
}

TEST(VerifySolution, GrowsWithPerturbation) {
  EnergyContext ctx{CurvatureField(1.0)};
  double prev[4] = {0, 0, 0, 0};
  for (double eps : {1e-6, 1e-5, 1e-4, 1e-3}) {
    auto c = ClosedCurve::from_function(
        [eps](double t) {
          const double r = 1.0 + eps * std::cos(3 * kTwoPi * t);
          return Vec2{r * std::cos(kTwoPi * t), r * std::sin(kTwoPi * t)};
        },
        256);
    auto rep = verify_solution(c, ctx, 0.0);
    const double cur[4] = {rep.speed_variation, rep.curvature_residual, rep.ode_residual, rep.gradient_norm};
    for (int i = 0; i < 4; ++i) {
      EXPECT_GT(cur[i], prev[i]);
      prev[i] = cur[i];
    }
  }
}

TEST(VerifySolution, ConvergedMinimizer) {
  const auto& m = periodic_minimizer();
  auto rep = verify_solution(m.curve, shared_ctx(), m.lambda);
  EXPECT_TRUE(rep.ok(1e-4));
}
