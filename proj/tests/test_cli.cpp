#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "hloop/io.hpp"

namespace fs = std::filesystem;
using hloop::io::json;

namespace {

struct Outcome {
  int code = -1;
  std::string out, err;
};

fs::path workdir(const std::string& name) {
  auto d = fs::temp_directory_path() / "hloop_cli_tests" / name;
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Outcome run(const fs::path& dir, const std::string& args) {
  const auto out = dir / "stdout.txt", err = dir / "stderr.txt";
  const std::string cmd = std::string("'") + HLOOP_CLI_PATH + "' " + args + " >'" + out.string() + "' 2>'" + err.string() + "'";
  const int status = std::system(cmd.c_str());
  Outcome o;
  o.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  o.out = slurp(out);
  o.err = slurp(err);
  return o;
}

void put(const fs::path& p, const json& j) { hloop::io::write_json(p, j); }

std::vector<std::vector<double>> read_csv(const fs::path& p) {
  std::ifstream in(p);
  std::string line;
  std::getline(in, line);
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    std::vector<double> r;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) r.push_back(std::stod(cell));
    rows.push_back(r);
  }
  return rows;
}

}  // namespace

TEST(Cli, SolveFlatFieldWritesCircle) {
  const auto d = workdir("solve_flat");
  put(d / "zero.json", {{"type", "constant"}, {"value", 0.0}});
  const auto o = run(d, "solve --field '" + (d / "zero.json").string() + "' --tau 3.141592653589793 --out '" + (d / "o").string() + "'");
  ASSERT_EQ(o.code, 0) << o.err;
  const auto c = hloop::io::read_curve(d / "o" / "curve.json");
  hloop::Vec2 m{};
  for (auto p : c.samples()) m = m + p / static_cast<double>(c.size());
  for (auto p : c.samples()) EXPECT_NEAR(hloop::norm(p - m), 1.0, 1e-6);
  const auto rep = hloop::io::read_json(d / "o" / "report.json");
  EXPECT_TRUE(rep.at("converged").get<bool>());
}

TEST(Cli, MissingFieldFileNamesPath) {
  const auto d = workdir("missing");
  const auto path = (d / "nowhere.json").string();
  const auto o = run(d, "solve --field '" + path + "' --tau 1 --out '" + (d / "o").string() + "'");
  EXPECT_EQ(o.code, 2);
  EXPECT_NE(o.err.find(path), std::string::npos);
}

TEST(Cli, InvalidTau) {
  const auto d = workdir("tau0");
  const auto o = run(d, "solve --tau 0 --out '" + (d / "o").string() + "'");
  EXPECT_EQ(o.code, 2);
  EXPECT_NE(o.err.find("tau"), std::string::npos);
}

TEST(Cli, EmptyGrids) {
  const auto d = workdir("empty");
  EXPECT_EQ(run(d, "sweep --taus '' --out '" + (d / "o").string() + "'").code, 2);
  put(d / "cfg.json", {{"taus", json::array()}});
  EXPECT_EQ(run(d, "sweep --config '" + (d / "cfg.json").string() + "'").code, 2);
  put(d / "grid.json", {{"type", "periodic_grid"}, {"m", 0}, {"values", json::array()}});
  EXPECT_EQ(run(d, "solve --tau 1 --field '" + (d / "grid.json").string() + "' --out '" + (d / "o").string() + "'").code, 2);
}

TEST(Cli, SweepFlatFieldIsIsoperimetric) {
  const auto d = workdir("sweep_flat");
  const auto o = run(d, "sweep --tau-range 0.1:10:10 --log --out '" + (d / "o").string() + "'");
  ASSERT_EQ(o.code, 0) << o.err;
  const auto rows = read_csv(d / "o" / "sweep.csv");
  ASSERT_EQ(rows.size(), 10u);
  for (const auto& r : rows) {
    EXPECT_NEAR(r[1] / std::sqrt(r[0]), std::sqrt(4 * hloop::kPi), 1e-3);
    EXPECT_EQ(r[6], 1.0);
  }
  for (const char* f : {"plot_tau_S.csv", "plot_tau_lambda.csv", "plot_sqrt_tau_S_tilde.csv", "sweep_report.json"})
    EXPECT_TRUE(fs::exists(d / "o" / f)) << f;
}

TEST(Cli, SweepPeriodicFieldConverges) {
  const auto d = workdir("sweep_periodic");
  put(d / "field.json", json::parse(R"({"type":"periodic_modes","m":128,
      "modes":[{"kx":1,"ky":0,"amplitude":0.25},{"kx":0,"ky":1,"amplitude":0.25}]})"));
  const auto o = run(d, "sweep --field '" + (d / "field.json").string() + "' --taus 0.05,0.1,0.2 --out '" + (d / "o").string() + "'");
  ASSERT_EQ(o.code, 0) << o.err;
  for (const auto& r : read_csv(d / "o" / "sweep.csv")) EXPECT_EQ(r[6], 1.0);
  EXPECT_EQ(o.err.find("warning"), std::string::npos);
}

TEST(Cli, ImmersedValidation) {
  const auto d = workdir("immersed_bad");
  put(d / "g1.json", {{"radial", {{"A", 1.0}, {"gamma", 1.0}}}});
  EXPECT_EQ(run(d, "immersed --config '" + (d / "g1.json").string() + "' --out '" + (d / "o").string() + "'").code, 2);
  put(d / "a0.json", {{"radial", {{"A", 0.0}, {"gamma", 2.0}}}});
  EXPECT_EQ(run(d, "immersed --config '" + (d / "a0.json").string() + "' --out '" + (d / "o").string() + "'").code, 2);
  put(d / "f.json", {{"type", "constant"}, {"value", 1.0}});
  EXPECT_EQ(run(d, "immersed --field '" + (d / "f.json").string() + "' --out '" + (d / "o").string() + "'").code, 2);
}

TEST(Cli, ImmersedLoops) {
  const auto d = workdir("immersed");
  put(d / "h.json", {{"type", "radial_params"}, {"A", 1.0}, {"gamma", 2.0}});
  const auto o = run(d, "immersed --field '" + (d / "h.json").string() + "' --n 32,64 --jobs 2 --out '" + (d / "o").string() + "'");
  ASSERT_EQ(o.code, 0) << o.err;
  for (int n : {32, 64}) {
    EXPECT_TRUE(fs::exists(d / "o" / ("loop_n" + std::to_string(n) + ".json")));
    const auto rep = hloop::io::read_json(d / "o" / ("ls_n" + std::to_string(n) + ".json"));
    EXPECT_LE(rep.at("curvature_residual").get<double>(), 1e-6);
    EXPECT_EQ(rep.at("turning").get<int>(), n);
  }
  const auto c = run(d, "check --curve '" + (d / "o" / "loop_n64.json").string() + "' --field '" + (d / "h.json").string() +
                            "' --lambda 0 --out '" + (d / "c").string() + "'");
  EXPECT_EQ(c.code, 0) << c.out << c.err;
}

TEST(Cli, MagneticConstantField) {
  const auto d = workdir("magnetic");
  put(d / "cfg.json", {{"b", 2.0}, {"charge", -1.5}, {"mass", 0.7}, {"speed", 1.3}, {"axial_speed", 0.2}});
  const auto o = run(d, "magnetic --config '" + (d / "cfg.json").string() + "' --out '" + (d / "o").string() + "'");
  ASSERT_EQ(o.code, 0) << o.err;
  const auto rows = read_csv(d / "o" / "trajectory.csv");
  ASSERT_FALSE(rows.empty());
  const auto rep = hloop::io::read_json(d / "o" / "report.json");
  EXPECT_TRUE(rep.at("radius_ok").get<bool>());
  EXPECT_NEAR(rep.at("gyroradius").get<double>(), 0.7 * 1.3 / 3.0, 1e-15);
  EXPECT_NEAR(rows.back()[3], 0.2 * rows.back()[0], 1e-12);
}

TEST(Cli, CheckCircle) {
  const auto d = workdir("check");
  hloop::io::write_curve(d / "circle.json", hloop::ClosedCurve::from_function(
                                                [](double t) { return hloop::Vec2{std::cos(hloop::kTwoPi * t), std::sin(hloop::kTwoPi * t)}; }, 256));
  put(d / "one.json", {{"type", "constant"}, {"value", 1.0}});
  const auto o = run(d, "check --curve '" + (d / "circle.json").string() + "' --field '" + (d / "one.json").string() +
                            "' --out '" + (d / "o").string() + "'");
  EXPECT_EQ(o.code, 0) << o.err;
  EXPECT_EQ(o.out.find("FAIL"), std::string::npos);
  EXPECT_TRUE(hloop::io::read_json(d / "o" / "check.json").at("ok").get<bool>());
}

TEST(Cli, CheckCorruptedCurve) {
  const auto d = workdir("check_bad");
  hloop::io::write_text(d / "bad.json", "{\"points\": [[0, 1], [1,");
  const auto o = run(d, "check --curve '" + (d / "bad.json").string() + "' --out '" + (d / "o").string() + "'");
  EXPECT_EQ(o.code, 2);
  EXPECT_NE(o.err.find("bad.json"), std::string::npos);
}

TEST(Cli, HypothesisWarningDoesNotRefuse) {
  const auto d = workdir("warn");
  put(d / "big.json", json::parse(R"({"type":"periodic_modes","m":64,"modes":[{"kx":1,"ky":0,"amplitude":3}]})"));
  hloop::io::write_curve(d / "circle.json", hloop::ClosedCurve::from_function(
                                                [](double t) { return hloop::Vec2{std::cos(hloop::kTwoPi * t), std::sin(hloop::kTwoPi * t)}; }, 256));
  const auto o = run(d, "check --curve '" + (d / "circle.json").string() + "' --field '" + (d / "big.json").string() +
                            "' --out '" + (d / "o").string() + "'");
  EXPECT_NE(o.err.find("warning"), std::string::npos);
  EXPECT_NE(o.code, 2);
  EXPECT_TRUE(fs::exists(d / "o" / "check.json"));
}

TEST(Cli, FlagsOverrideConfig) {
  const auto d = workdir("precedence");
  put(d / "cfg.json", {{"tau", 2.0}, {"out", (d / "from_config").string()}});
  ASSERT_EQ(run(d, "solve --config '" + (d / "cfg.json").string() + "'").code, 0);
  EXPECT_EQ(hloop::io::read_json(d / "from_config" / "report.json").at("tau").get<double>(), 2.0);
  ASSERT_EQ(run(d, "solve --config '" + (d / "cfg.json").string() + "' --tau 3 --out '" + (d / "o").string() + "'").code, 0);
  EXPECT_EQ(hloop::io::read_json(d / "o" / "report.json").at("tau").get<double>(), 3.0);
}

TEST(Cli, DeterministicOutputs) {
  const auto d = workdir("determinism");
  put(d / "field.json", json::parse(R"({"type":"periodic_modes","m":64,"modes":[{"kx":1,"ky":1,"amplitude":0.3}]})"));
  put(d / "cfg.json", {{"field", (d / "field.json").string()}, {"taus", {0.1, 0.3, 0.6}}, {"initial_perturbation", 0.05}});
  for (const char* o : {"a", "b"})
    ASSERT_EQ(run(d, "sweep --config '" + (d / "cfg.json").string() + "' --seed 7 --jobs 2 --out '" + (d / o).string() + "'").code, 0);
  EXPECT_EQ(slurp(d / "a" / "sweep.csv"), slurp(d / "b" / "sweep.csv"));
  EXPECT_EQ(slurp(d / "a" / "sweep_report.json"), slurp(d / "b" / "sweep_report.json"));
}

TEST(Cli, UsageErrors) {
  const auto d = workdir("usage");
  EXPECT_EQ(run(d, "").code, 2);
  EXPECT_EQ(run(d, "frobnicate").code, 2);
  EXPECT_EQ(run(d, "solve --jobs 0 --tau 1").code, 2);
  EXPECT_EQ(run(d, "solve --tau notanumber").code, 2);
  EXPECT_EQ(run(d, "cylinder --out '" + (d / "o").string() + "'").code, 2);
}
