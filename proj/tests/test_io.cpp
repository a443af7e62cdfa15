#include <gtest/gtest.h>

#include <filesystem>

#include "hloop/io.hpp"
#include "test_support.hpp"

using namespace hloop;
using hloop::testing::circle;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  auto d = fs::temp_directory_path() / "hloop_io_tests";
  fs::create_directories(d);
  return d / name;
}

std::optional<ErrorKind> kind_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  return std::nullopt;
}

}  // namespace

TEST(Io, CurveRoundTripIsExact) {
  auto c = ClosedCurve::from_function([](double t) { return Vec2{std::cos(kTwoPi * t) / 3, 0.1 + std::sin(kTwoPi * t)}; }, 64, 2.5);
  const auto p = scratch("curve.json");
  io::write_curve(p, c);
  auto back = io::read_curve(p);
  ASSERT_EQ(back.size(), c.size());
  EXPECT_EQ(back.period(), 2.5);
  for (std::size_t j = 0; j < c.size(); ++j) {
    EXPECT_EQ(back[j].x, c[j].x);
    EXPECT_EQ(back[j].y, c[j].y);
  }
}

TEST(Io, MissingFileNamesPath) {
  const auto p = scratch("does_not_exist.json");
  fs::remove(p);
  try {
    io::read_curve(p);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Io);
    EXPECT_NE(std::string(e.what()).find(p.string()), std::string::npos);
  }
}

TEST(Io, CorruptedFiles) {
  const auto p = scratch("bad.json");
  io::write_text(p, "{\"points\": [[1, 2], [3");
  EXPECT_EQ(kind_of([&] { io::read_curve(p); }), ErrorKind::Io);
  io::write_text(p, "{\"points\": [[1, 2, 3]]}");
  EXPECT_EQ(kind_of([&] { io::read_curve(p); }), ErrorKind::Io);
  io::write_text(p, "{\"points\": [[\"a\", 2]]}");
  EXPECT_EQ(kind_of([&] { io::read_curve(p); }), ErrorKind::Io);
  io::write_text(p, "{\"type\": \"constant\"}");
  EXPECT_EQ(kind_of([&] { io::read_field(p); }), ErrorKind::Io);
  EXPECT_TRUE(is_validation_error(ErrorKind::Io));
}

TEST(Io, FieldTypes) {
  using io::json;
  auto c = io::field_from_json(json{{"type", "constant"}, {"value", 2.0}});
  EXPECT_EQ(c.field.value({0.3, 0.4}), 2.0);

  std::vector<double> v(16 * 16);
  for (int j = 0; j < 16; ++j)
    for (int i = 0; i < 16; ++i) v[j * 16 + i] = 1.0 + std::cos(kTwoPi * i / 16.0);
  auto g = io::field_from_json(json{{"type", "periodic_grid"}, {"m", 16}, {"values", v}});
  EXPECT_NEAR(g.field.constant(), 1.0, 1e-14);
  EXPECT_NEAR(g.field.value({0.0, 0.3}), 2.0, 1e-10);

  auto modes = io::field_from_json(json::parse(R"({"type":"periodic_modes","m":64,"constant":0.5,
      "modes":[{"kx":1,"ky":0,"amplitude":0.25},{"kx":0,"ky":1,"amplitude":0.25}]})"));
  EXPECT_NEAR(modes.field.value({0.0, 0.0}), 1.0, 1e-10);
  EXPECT_NEAR(modes.field.value({0.5, 0.5}), 0.0, 1e-10);

  auto p = io::field_from_json(json{{"type", "radial_params"}, {"A", 1.0}, {"gamma", 2.0}});
  ASSERT_TRUE(p.radial_params.has_value());
  EXPECT_EQ(p.radial_params->gamma, 2.0);
  EXPECT_NEAR(p.field.value({30.0, 0.0}), (*p.radial_params)(30.0), 1e-12);
}

TEST(Io, FieldValidation) {
  using io::json;
  EXPECT_EQ(kind_of([] { io::field_from_json(json{{"type", "periodic_grid"}, {"m", 0}, {"values", json::array()}}); }),
            ErrorKind::InvalidArgument);
  EXPECT_EQ(kind_of([] { io::field_from_json(json{{"type", "radial_params"}, {"A", 1.0}, {"gamma", 1.0}}); }),
            ErrorKind::InvalidArgument);
  EXPECT_EQ(kind_of([] { io::field_from_json(json{{"type", "radial_params"}, {"A", 0.0}, {"gamma", 2.0}}); }),
            ErrorKind::InvalidArgument);
  EXPECT_EQ(kind_of([] { io::field_from_json(json{{"type", "nonsense"}}); }), ErrorKind::InvalidArgument);
  EXPECT_EQ(kind_of([] { io::tabulated_radial({0.0, 1.0, 0.5}, {1, 2, 3}); }), ErrorKind::InvalidArgument);
}

TEST(Io, TabulatedRadialInterpolates) {
  std::vector<double> r, h;
  for (int i = 0; i <= 200; ++i) {
    r.push_back(i * 0.05);
    h.push_back(std::exp(-r.back()));
  }
  auto f = io::tabulated_radial(r, h);
  for (double s : {0.0, 0.123, 1.7, 5.55, 9.99}) EXPECT_NEAR(f(s), std::exp(-s), 1e-4);
  EXPECT_EQ(f(10.0), 0.0);
  EXPECT_EQ(f(20.0), 0.0);
  EXPECT_EQ(f(0.05), h[1]);
}

TEST(Io, FormatIsRoundTrip) {
  for (double v : {0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23}) EXPECT_EQ(std::stod(io::fmt(v)), v);
}

TEST(Io, SweepCsv) {
  SweepRow r;
  r.tau = 0.5;
  r.S = 2.0;
  r.lambda = -1.0;
  r.simple = true;
  r.converged = false;
  const auto s = io::sweep_csv({r});
  EXPECT_EQ(s, "tau,S_H,lambda,residual,area_error,simple,converged\n0.5,2,-1,0,0,1,0\n");
  EXPECT_EQ(io::sweep_plot_scaled({r}).substr(0, 16), "sqrt_tau,S_tilde");
}

TEST(Io, LSResultRoundTrip) {
  LSResult r;
  r.n = 32;
  r.orientation = -1;
  r.gamma = 2.0;
  r.R = 2.5;
  r.r = 0.6;
  r.lambda1 = 0.01;
  r.lambda2 = 1e-17;
  r.trace = {1.0, 0.5};
  r.phi = PeriodicScalar::zeros(64);
  const auto j = io::ls_result_to_json(r);
  auto back = io::ls_result_from_json(io::json::parse(j.dump()));
  EXPECT_EQ(back.n, 32);
  EXPECT_EQ(back.orientation, -1);
  EXPECT_EQ(back.r, 0.6);
  EXPECT_EQ(back.lambda2, 1e-17);
  EXPECT_EQ(back.trace.size(), 2u);
  EXPECT_EQ(back.phi.samples().size(), 64u);
}

TEST(Io, ObjFile) {
  auto mesh = lift_to_cylinder(circle(1.0, 64), 1.0, 2.0, 16, 2);
  const auto p = scratch("sub/mesh.obj");
  io::write_obj(p, mesh);
  const auto text = io::read_text(p);
  std::size_t v = 0;
  for (std::size_t at = 0; (at = text.find("v ", at)) != std::string::npos; ++at) ++v;
  EXPECT_EQ(v, 32u);
}
