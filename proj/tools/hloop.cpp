// hloop: closed planar curves with prescribed curvature.
//
//   hloop solve     area-constrained minimizer at one τ
//   hloop sweep     isoperimetric sweep over a τ grid
//   hloop immersed  immersed loops for a radial curvature, one per n
//   hloop magnetic  charged particle in a vertical magnetic field
//   hloop cylinder  lift a curve to a surface in R³
//   hloop check     verify a curve file against a field
//
// Exit codes: 0 success, 1 numerical failure, 2 usage or validation error.

#include <atomic>
#include <filesystem>
#include <iostream>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "hloop/io.hpp"

namespace fs = std::filesystem;
using hloop::Error;
using hloop::ErrorKind;
using hloop::io::json;

namespace {

constexpr int kOk = 0, kNumerical = 1, kUsage = 2;

struct Flags {
  std::string config, out, field, curve, taus, tau_range;
  std::optional<double> tau, lambda;
  std::vector<int> n;
  unsigned jobs = 0;
  std::optional<unsigned long long> seed;
  std::optional<std::size_t> samples;
  bool log_spacing = false;
};

// Values are read from the merged config document; missing keys fall back to defaults.
class Config {
 public:
  explicit Config(json j) : j_(std::move(j)) {}
  json& doc() { return j_; }
  bool has(const std::string& k) const { return j_.contains(k) && !j_.at(k).is_null(); }

  template <class T>
  T get(const std::string& k, T def) const {
    if (!has(k)) return def;
    try {
      return j_.at(k).get<T>();
    } catch (const json::exception&) {
      throw Error(ErrorKind::InvalidArgument, "config key '" + k + "' has the wrong type");
    }
  }
  const json& at(const std::string& k) const { return j_.at(k); }

  double positive(const std::string& k, double def) const {
    const double v = get(k, def);
    if (!(v > 0.0) || !std::isfinite(v)) throw Error(ErrorKind::InvalidArgument, "config key '" + k + "' must be positive");
    return v;
  }

 private:
  json j_;
};

struct Run {
  Config cfg;
  fs::path out;
  unsigned jobs = 1;
  unsigned long long seed = 0;
};

std::vector<double> parse_list(const std::string& s) {
  std::vector<double> v;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    try {
      std::size_t used = 0;
      v.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw Error(ErrorKind::InvalidArgument, "not a number: '" + item + "'");
    }
  }
  return v;
}

Run make_run(const Flags& f) {
  json doc = json::object();
  if (!f.config.empty()) {
    doc = hloop::io::read_json(f.config);
    if (!doc.is_object()) throw Error(ErrorKind::Io, f.config + ": config must be an object");
  }
  if (!f.out.empty()) doc["out"] = f.out;
  if (f.jobs > 0) doc["jobs"] = f.jobs;
  if (f.seed) doc["seed"] = *f.seed;
  if (!f.field.empty()) doc["field"] = f.field;
  if (!f.curve.empty()) doc["curve"] = f.curve;
  if (f.tau) doc["tau"] = *f.tau;
  if (f.lambda) doc["lambda"] = *f.lambda;
  if (!f.n.empty()) doc["n"] = f.n;
  if (f.samples) doc["N"] = *f.samples;
  if (!f.taus.empty()) doc["taus"] = parse_list(f.taus);
  if (!f.tau_range.empty()) {
    std::string s = f.tau_range;
    std::replace(s.begin(), s.end(), ':', ',');
    const auto v = parse_list(s);
    if (v.size() != 3) throw Error(ErrorKind::InvalidArgument, "--tau-range expects start:stop:count");
    doc["tau_grid"] = {{"start", v[0]}, {"stop", v[1]}, {"count", v[2]}, {"spacing", f.log_spacing ? "log" : "linear"}};
  }

  Run r{Config(doc), {}, 1, 0};
  r.out = r.cfg.get<std::string>("out", "hloop_out");
  const long long jobs = r.cfg.get<long long>("jobs", 1);
  if (jobs < 1) throw Error(ErrorKind::InvalidArgument, "jobs must be at least 1");
  r.jobs = static_cast<unsigned>(jobs);
  r.seed = r.cfg.get<unsigned long long>("seed", 0);
  return r;
}

void warn_hypotheses(const hloop::CurvatureField& f) {
  const auto h = hloop::check_hypotheses(f);
  if (!h.periodic_ok)
    std::cerr << "warning: periodic part has |H1 - [H1]|_inf = " << f.periodic_sup() << " >= 2*sqrt(2)\n";
  if (!h.decaying_ok)
    std::cerr << "warning: decaying part has Lorentz norm " << f.radial_lorentz() << " >= (2/pi)^(3/2)\n";
  if (!h.mixed_ok) std::cerr << "warning: mixed bound " << h.mixed_value << " >= 1\n";
  if (!h.all()) std::cerr << "warning: minimizers are not guaranteed to exist; running anyway\n";
}

hloop::io::FieldDef load_field(const Run& run, bool required = true) {
  if (!run.cfg.has("field")) {
    if (required) throw Error(ErrorKind::InvalidArgument, "no field given (use --field or the 'field' config key)");
    return {hloop::CurvatureField(0.0), std::nullopt};
  }
  const auto& f = run.cfg.at("field");
  auto def = f.is_string() ? hloop::io::read_field(f.get<std::string>()) : hloop::io::field_from_json(f, "config field");
  warn_hypotheses(def.field);
  return def;
}

hloop::MinimizeOptions minimize_options(const Run& run) {
  hloop::MinimizeOptions o;
  const long long n = run.cfg.get<long long>("N", 256);
  if (n < 16 || n % 2 != 0) throw Error(ErrorKind::InvalidArgument, "N must be even and at least 16");
  o.n = static_cast<std::size_t>(n);
  o.max_iterations = run.cfg.get<std::size_t>("max_iterations", o.max_iterations);
  o.residual_tol = run.cfg.positive("residual_tol", o.residual_tol);
  o.area_tol = run.cfg.positive("area_tol", o.area_tol);
  o.gradient_tol = run.cfg.positive("gradient_tol", o.gradient_tol);
  o.initial_perturbation = run.cfg.get("initial_perturbation", 0.0);
  o.seed = run.seed;
  return o;
}

std::vector<double> tau_grid(const Run& run) {
  std::vector<double> taus;
  if (run.cfg.has("taus")) {
    taus = run.cfg.get<std::vector<double>>("taus", {});
  } else if (run.cfg.has("tau_grid")) {
    const Config g(run.cfg.at("tau_grid"));
    const double a = g.get("start", 0.0), b = g.get("stop", 0.0);
    const long long count = g.get<long long>("count", 0);
    const bool log = g.get<std::string>("spacing", "linear") == "log";
    if (count < 1) throw Error(ErrorKind::InvalidArgument, "tau grid count must be positive");
    if (log && !(a * b > 0.0)) throw Error(ErrorKind::InvalidArgument, "log tau grid needs endpoints of one sign");
    for (long long i = 0; i < count; ++i) {
      const double t = count == 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(count - 1);
      taus.push_back(log ? std::copysign(std::exp(std::log(std::abs(a)) * (1 - t) + std::log(std::abs(b)) * t), a)
                         : a + (b - a) * t);
    }
  }
  if (taus.empty()) throw Error(ErrorKind::InvalidArgument, "empty tau grid");
  for (double t : taus)
    if (t == 0.0 || !std::isfinite(t)) throw Error(ErrorKind::InvalidArgument, "tau values must be nonzero and finite");
  return taus;
}

int cmd_solve(const Run& run) {
  const auto def = load_field(run, false);
  if (!run.cfg.has("tau")) throw Error(ErrorKind::InvalidArgument, "no tau given");
  const double tau = run.cfg.get("tau", 0.0);
  if (tau == 0.0 || !std::isfinite(tau)) throw Error(ErrorKind::InvalidArgument, "tau must be nonzero and finite");
  auto opts = minimize_options(run);
  if (run.cfg.has("initial_curve")) opts.initial_curve = hloop::io::read_curve(run.cfg.get<std::string>("initial_curve", ""));
  const hloop::EnergyContext ctx(def.field);
  const auto r = hloop::minimize_area_constrained(ctx, tau, opts);

  auto report = hloop::io::minimize_result_to_json(r);
  try {
    const auto b = hloop::check_multiplier_bounds(tau, r.lambda, ctx);
    report["multiplier_bounds"] = {{"ok", b.ok}, {"value", b.value}, {"lower", b.lower}, {"upper", b.upper}};
  } catch (const Error& e) {
    report["multiplier_bounds"] = {{"ok", false}, {"message", e.what()}};
  }
  hloop::io::write_curve(run.out / "curve.json", r.curve);
  hloop::io::write_text(run.out / "curve_points.csv", hloop::io::points_csv(r.curve));
  hloop::io::write_json(run.out / "report.json", report);
  std::cout << "tau " << hloop::io::fmt(tau) << "  S_H " << hloop::io::fmt(r.energy_value) << "  lambda "
            << hloop::io::fmt(r.lambda) << "  residual " << r.curvature_residual << "\n";
  if (!r.converged) {
    std::cerr << "error: minimizer did not converge: " << r.message << " (residual " << r.curvature_residual
              << ", area error " << r.area_error << ", " << r.iterations << " iterations)\n";
    return kNumerical;
  }
  return kOk;
}

int cmd_sweep(const Run& run) {
  const auto def = load_field(run, false);
  const auto taus = tau_grid(run);
  hloop::SweepOptions o;
  o.minimize = minimize_options(run);
  o.warm_start = run.cfg.get("warm_start", true);
  o.compare_cold_start = run.cfg.get("compare_cold_start", true);
  o.jobs = run.jobs;
  const hloop::EnergyContext ctx(def.field);
  const auto rows = hloop::sweep_isoperimetric(ctx, taus, o);

  hloop::io::write_text(run.out / "sweep.csv", hloop::io::sweep_csv(rows));
  hloop::io::write_text(run.out / "plot_tau_S.csv", hloop::io::sweep_plot_energy(rows));
  hloop::io::write_text(run.out / "plot_tau_lambda.csv", hloop::io::sweep_plot_lambda(rows));
  hloop::io::write_text(run.out / "plot_sqrt_tau_S_tilde.csv", hloop::io::sweep_plot_scaled(rows));
  json report = json::array();
  std::size_t failed = 0;
  for (const auto& r : rows) {
    json row = {{"tau", r.tau},
                {"S", r.S},
                {"lambda", r.lambda},
                {"S_tilde", r.S_tilde},
                {"energy_lower", r.energy_lower},
                {"energy_upper", r.energy_upper},
                {"energy_bounds_ok", r.energy_bounds_ok},
                {"multiplier_bounds_ok", r.multiplier_bounds_ok},
                {"smooth", r.smooth},
                {"converged", r.converged},
                {"simple", r.simple},
                {"message", r.message}};
    if (r.dS_dtau) row["dS_dtau"] = *r.dS_dtau;
    report.push_back(row);
    if (!r.converged) {
      ++failed;
      std::cerr << "error: row tau = " << r.tau << " did not converge: " << r.message << "\n";
    }
  }
  hloop::io::write_json(run.out / "sweep_report.json", report);
  std::cout << rows.size() << " rows, " << rows.size() - failed << " converged\n";
  return failed ? kNumerical : kOk;
}

hloop::RadialCurvature radial_params(const Run& run) {
  if (run.cfg.has("radial")) return hloop::io::radial_params_from_json(run.cfg.at("radial"));
  if (run.cfg.has("field")) {
    const auto& f = run.cfg.at("field");
    const json doc = f.is_string() ? hloop::io::read_json(f.get<std::string>()) : f;
    return hloop::io::parse_document("field", [&] {
      if (doc.value("type", std::string()) != "radial_params")
        throw Error(ErrorKind::InvalidArgument, "immersed loops need a radial_params field");
      return hloop::io::radial_params_from_json(doc);
    });
  }
  throw Error(ErrorKind::InvalidArgument, "no radial curvature given (use 'radial' or a radial_params field)");
}

int cmd_immersed(const Run& run) {
  const auto h = hloop::io::parse_document("config", [&] { return radial_params(run); });
  const auto ns = run.cfg.get<std::vector<int>>("n", {32, 64});
  if (ns.empty()) throw Error(ErrorKind::InvalidArgument, "empty n list");
  for (int n : ns)
    if (n < 2) throw Error(ErrorKind::InvalidArgument, "n values must be at least 2");
  hloop::ImmersedOptions o;
  if (run.cfg.has("r0")) o.radius.r0 = run.cfg.positive("r0", 1.0);
  if (run.cfg.has("r1")) o.radius.r1 = run.cfg.positive("r1", 1.0);
  o.radius.root_tolerance = run.cfg.positive("root_tolerance", o.radius.root_tolerance);
  o.radius.fixed_point.tolerance = run.cfg.positive("fixed_point_tolerance", o.radius.fixed_point.tolerance);
  o.radius.fixed_point.max_iterations = run.cfg.get<std::size_t>("max_iterations", o.radius.fixed_point.max_iterations);
  const long long spl = run.cfg.get<long long>("samples_per_loop", 256);
  if (spl < 16 || spl % 2 != 0) throw Error(ErrorKind::InvalidArgument, "samples_per_loop must be even and at least 16");
  o.samples_per_loop = static_cast<std::size_t>(spl);
  const double residual_tol = run.cfg.positive("residual_tol", 1e-6);

  struct Slot {
    std::optional<hloop::ImmersedLoop> loop;
    std::string error;
  };
  std::vector<Slot> slots(ns.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i; (i = next++) < ns.size();) {
      try {
        slots[i].loop = hloop::build_immersed_loop(ns[i], h, o);
      } catch (const Error& e) {
        slots[i].error = std::string(hloop::to_string(e.kind())) + ": " + e.what();
      }
    }
  };
  std::vector<std::thread> pool;
  for (unsigned k = 1; k < std::min<std::size_t>(run.jobs, ns.size()); ++k) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  int code = kOk;
  json summary = json::array();
  for (std::size_t i = 0; i < ns.size(); ++i) {
    const int n = ns[i];
    if (!slots[i].loop) {
      std::cerr << "error: n = " << n << ": " << slots[i].error << "\n";
      summary.push_back({{"n", n}, {"ok", false}, {"message", slots[i].error}});
      code = kNumerical;
      continue;
    }
    const auto& L = *slots[i].loop;
    const bool ok = L.result.converged && L.curvature_residual <= residual_tol;
    auto rep = hloop::io::ls_result_to_json(L.result);
    rep["curvature_residual"] = L.curvature_residual;
    rep["regular"] = L.regular;
    rep["simple"] = L.simplicity.simple;
    rep["winding_about_origin"] = L.winding_about_origin;
    rep["turning"] = L.turning;
    const std::string stem = "loop_n" + std::to_string(n);
    hloop::io::write_curve(run.out / (stem + ".json"), L.curve);
    hloop::io::write_json(run.out / ("ls_n" + std::to_string(n) + ".json"), rep);
    summary.push_back({{"n", n},
                       {"ok", ok},
                       {"r", L.result.r},
                       {"lambda1", L.result.lambda1},
                       {"lambda2", L.result.lambda2},
                       {"iterations", L.result.iterations},
                       {"curvature_residual", L.curvature_residual}});
    std::cout << "n " << n << "  r " << hloop::io::fmt(L.result.r) << "  residual " << L.curvature_residual
              << "  iterations " << L.result.iterations << "\n";
    if (!ok) {
      std::cerr << "error: n = " << n << ": " << (L.result.converged ? "curvature residual too large" : L.result.message) << "\n";
      code = kNumerical;
    }
  }
  hloop::io::write_json(run.out / "report.json", summary);
  return code;
}

hloop::Vec2 vec2(const Config& c, const std::string& k, hloop::Vec2 def) {
  if (!c.has(k)) return def;
  const auto v = c.get<std::vector<double>>(k, {});
  if (v.size() != 2) throw Error(ErrorKind::InvalidArgument, "config key '" + k + "' must be [x, y]");
  return {v[0], v[1]};
}

int cmd_magnetic(const Run& run) {
  const auto& c = run.cfg;
  hloop::MagneticConfig m;
  m.charge = c.get("charge", m.charge);
  m.mass = c.get("mass", m.mass);
  m.speed = c.get("speed", m.speed);
  m.axial_speed = c.get("axial_speed", m.axial_speed);
  m.z0 = c.get("z0", m.z0);
  m.steps = c.get<std::size_t>("steps", m.steps);
  m.position = vec2(c, "position", m.position);
  m.direction = vec2(c, "direction", m.direction);
  const double dn = hloop::norm(m.direction);
  if (!(dn > 0.0)) throw Error(ErrorKind::InvalidArgument, "direction must be nonzero");
  m.direction = m.direction / dn;
  m.validate();

  json report;
  std::optional<hloop::EnergyContext> ctx;
  std::optional<double> b_const;
  if (c.has("curve")) {
    // Field that makes the given (H − λ)-loop a closed orbit.
    const auto curve = hloop::io::read_curve(c.get<std::string>("curve", ""));
    ctx.emplace(load_field(run).field);
    const double lambda = c.has("lambda") ? c.get("lambda", 0.0) : hloop::extract_lagrange_multiplier(curve, *ctx);
    m.b = hloop::magnetic_field_for_loop(*ctx, lambda, m.mass, m.speed, m.charge);
    const auto d = hloop::derivative(curve, 1);
    m.position = curve[0];
    m.direction = d[0] / hloop::norm(d[0]);
    m.duration = hloop::length(curve) / m.speed;
    report["lambda"] = lambda;
  } else {
    b_const = c.get("b", 1.0);
    const double b = *b_const;
    m.b = [b](hloop::Vec2) { return b; };
    m.duration = c.has("duration") ? c.positive("duration", 1.0)
                 : b != 0.0      ? hloop::kTwoPi * hloop::gyroradius(m.mass, m.speed, m.charge, b) / m.speed
                                 : 1.0;
  }
  const auto r = hloop::simulate_magnetic(m);
  hloop::io::write_text(run.out / "trajectory.csv", hloop::io::trajectory_csv(r.samples));
  report["closure_defect"] = r.closure_defect;
  report["speed_drift"] = r.speed_drift;
  report["duration"] = m.duration;
  if (b_const && *b_const != 0.0) {
    const double rho = hloop::gyroradius(m.mass, m.speed, m.charge, *b_const);
    const double h = -m.charge * *b_const / (m.mass * m.speed);
    const hloop::Vec2 center = m.position + hloop::rot(m.direction) / h;
    double dev = 0.0;
    for (const auto& s : r.samples) dev = std::max(dev, std::abs(hloop::norm(hloop::Vec2{s.x, s.y} - center) - rho));
    report["gyroradius"] = rho;
    report["radius_deviation"] = dev / rho;
    report["radius_ok"] = dev <= 1e-6 * rho;
  }
  hloop::io::write_json(run.out / "report.json", report);
  std::cout << "closure defect " << r.closure_defect << "\n";
  return kOk;
}

int cmd_cylinder(const Run& run) {
  const auto& c = run.cfg;
  if (!c.has("curve")) throw Error(ErrorKind::InvalidArgument, "no curve given");
  const auto curve = hloop::io::read_curve(c.get<std::string>("curve", ""));
  const double r_min = c.positive("r_min", 1.0), r_max = c.positive("r_max", std::exp(1.0));
  const auto mesh = hloop::lift_to_cylinder(curve, r_min, r_max, c.get<std::size_t>("n_theta", 256),
                                            c.get<std::size_t>("n_r", 33));
  hloop::io::write_obj(run.out / "surface.obj", mesh);
  const auto hm = hloop::mesh_mean_curvature(mesh);
  json report = {{"vertices", mesh.vertices.size()}, {"faces", mesh.faces.size()},
                 {"conformality_residual", hloop::conformality_residual(mesh)}};
  if (!hm.empty()) {
    report["mean_curvature_min"] = *std::min_element(hm.begin(), hm.end());
    report["mean_curvature_max"] = *std::max_element(hm.begin(), hm.end());
  }
  hloop::io::write_json(run.out / "report.json", report);
  std::cout << "wrote " << (run.out / "surface.obj").string() << "\n";
  return kOk;
}

int cmd_check(const Run& run) {
  const auto& c = run.cfg;
  if (!c.has("curve")) throw Error(ErrorKind::InvalidArgument, "no curve given");
  const auto raw = hloop::io::read_curve(c.get<std::string>("curve", ""));
  const double raw_speed_variation = hloop::speed_variation(raw);
  const auto curve = c.get("reparametrize", true) ? hloop::reparametrize_constant_speed(raw) : raw;
  const auto def = load_field(run, false);
  const hloop::EnergyContext ctx(def.field);
  const double lambda = c.has("lambda") ? c.get("lambda", 0.0) : hloop::extract_lagrange_multiplier(curve, ctx);
  const double tol = c.positive("tol", 1e-3);
  const auto rep = hloop::verify_solution(curve, ctx, lambda);
  hloop::OdeOptions oo;
  oo.steps = c.get<std::size_t>("steps", std::max<std::size_t>(oo.steps, 4 * curve.size()));
  const auto ode = hloop::integrate_from_curve(ctx, curve, lambda, oo);
  const bool ok = rep.ok(tol);
  const json report = {{"lambda", lambda},
                       {"input_speed_variation", raw_speed_variation},
                       {"speed_variation", rep.speed_variation},
                       {"curvature_residual", rep.curvature_residual},
                       {"ode_residual", rep.ode_residual},
                       {"gradient_norm", rep.gradient_norm},
                       {"closure_defect", ode.closure_defect},
                       {"tolerance", tol},
                       {"ok", ok}};
  hloop::io::write_json(run.out / "check.json", report);
  const auto line = [&](const char* name, double v) {
    std::cout << (v <= tol ? "ok    " : "FAIL  ") << name << " " << v << "\n";
  };
  line("speed_variation", rep.speed_variation);
  line("curvature_residual", rep.curvature_residual);
  line("ode_residual", rep.ode_residual);
  line("gradient_norm", rep.gradient_norm);
  std::cout << "lambda " << hloop::io::fmt(lambda) << "  ode closure defect " << ode.closure_defect << "\n";
  return ok ? kOk : kNumerical;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Closed planar curves with prescribed curvature"};
  app.require_subcommand(1);
  Flags f;
  std::string choice;

  const auto common = [&f](CLI::App* s) {
    s->add_option("--config", f.config, "JSON config file");
    s->add_option("--out", f.out, "output directory");
    s->add_option("--jobs", f.jobs, "worker threads")->check(CLI::PositiveNumber);
    s->add_option("--seed", f.seed, "random seed");
  };
  auto* solve = app.add_subcommand("solve", "area-constrained minimizer at one tau");
  auto* sweep = app.add_subcommand("sweep", "isoperimetric sweep over a tau grid");
  auto* immersed = app.add_subcommand("immersed", "immersed loops for a radial curvature");
  auto* magnetic = app.add_subcommand("magnetic", "charged particle in a vertical magnetic field");
  auto* cylinder = app.add_subcommand("cylinder", "lift a curve to a surface");
  auto* check = app.add_subcommand("check", "verify a curve against a field");
  for (auto* s : {solve, sweep, immersed, magnetic, cylinder, check}) common(s);
  for (auto* s : {solve, sweep, immersed, magnetic, check}) s->add_option("--field", f.field, "field definition file");
  for (auto* s : {solve, sweep}) s->add_option("--N", f.samples, "samples per curve");
  solve->add_option("--tau", f.tau, "signed area");
  sweep->add_option("--taus", f.taus, "comma separated tau values");
  sweep->add_option("--tau-range", f.tau_range, "start:stop:count");
  sweep->add_flag("--log", f.log_spacing, "geometric spacing for --tau-range");
  immersed->add_option("--n", f.n, "loop counts")->delimiter(',');
  for (auto* s : {magnetic, cylinder, check}) s->add_option("--curve", f.curve, "curve file");
  for (auto* s : {magnetic, check}) s->add_option("--lambda", f.lambda, "Lagrange multiplier");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  try {
    const Run run = make_run(f);
    if (*solve) return cmd_solve(run);
    if (*sweep) return cmd_sweep(run);
    if (*immersed) return cmd_immersed(run);
    if (*magnetic) return cmd_magnetic(run);
    if (*cylinder) return cmd_cylinder(run);
    return cmd_check(run);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return hloop::is_validation_error(e.kind()) ? kUsage : kNumerical;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kNumerical;
  }
}
