// roughwall: command-line driver for the rough-wall power-law flow studies.
//
//   roughwall <command> [--config file.json] [flags]
//
// Flags mirror the configuration keys and override values read from the file.
// Exit status: 0 success, 2 invalid input, 3 solver failure, 4 I/O failure.

#include <chrono>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "roughwall/roughwall.hpp"

namespace rw = roughwall;
using nlohmann::json;

namespace {

constexpr const char* kVersion = "1.0.0";

struct Flags {
  std::string config;
  std::optional<double> p, delta_reg, L, h, h_bulk, h_bl, tol, N, eps;
  std::optional<int> max_iter, samples;
  std::optional<std::uint64_t> seed, n;
  std::optional<std::string> pattern, scheme, lid, out, domain;
  std::vector<double> pattern_params, eps_list, shears, delta_schedule;
};

/// Layers the flags given on the command line over a configuration object.
json flags_to_json(const Flags& f) {
  json j = json::object();
  if (f.p) j["law"]["p"] = *f.p;
  if (f.delta_reg) j["law"]["delta_reg"] = *f.delta_reg;
  if (f.pattern) j["pattern"]["kind"] = *f.pattern;
  if (!f.pattern_params.empty()) j["pattern"]["params"] = f.pattern_params;
  if (f.L) j["mesh"]["L"] = *f.L;
  if (f.h) j["mesh"]["h"] = *f.h;
  if (f.h_bulk) j["mesh"]["h_bulk"] = *f.h_bulk;
  if (f.h_bl) j["mesh"]["h_bl"] = *f.h_bl;
  if (f.tol) j["solve"]["tol"] = *f.tol;
  if (f.max_iter) j["solve"]["max_iter"] = *f.max_iter;
  if (f.scheme) j["solve"]["scheme"] = *f.scheme;
  if (f.lid) j["solve"]["lid"] = *f.lid;
  if (!f.delta_schedule.empty()) j["solve"]["delta_schedule"] = f.delta_schedule;
  if (!f.eps_list.empty()) j["study"]["eps_list"] = f.eps_list;
  if (!f.shears.empty()) j["study"]["shear_list"] = f.shears;
  if (f.N) j["study"]["N"] = *f.N;
  if (f.seed) j["study"]["seed"] = *f.seed;
  if (f.n) j["study"]["n"] = *f.n;
  if (f.samples) j["study"]["samples"] = *f.samples;
  if (f.domain) j["study"]["domain"] = *f.domain;
  if (f.eps) j["study"]["eps"] = *f.eps;
  if (f.out) j["out_dir"] = *f.out;
  return j;
}

json vec(const rw::Vec2& v) { return json::array({v.x, v.y}); }

json stats_json(const rw::SolveStats& s) {
  return {{"iterations", s.iterations},      {"newton_steps", s.newton_steps}, {"picard_steps", s.picard_steps},
          {"final_residual", s.final_residual}, {"stage_deltas", s.stage_deltas}, {"stage_iterations", s.stage_iterations}};
}

// ---------------------------------------------------------------------------
// Commands. Each writes its artifacts and returns a JSON summary for the manifest.

json run_poiseuille(const rw::RunConfig& c, rw::ArtifactWriter& out) {
  const auto law = c.law();
  const auto flow = rw::poiseuille(law);
  rw::CsvTable t({"x2", "U", "dU"});
  for (int i = 0; i <= 100; ++i) {
    const double x = i / 100.0;
    t.row({x, flow.profile(x), flow.profile.derivative(x)});
  }
  out.write_csv("profile.csv", t);
  const rw::Vec2 jump = rw::stress(flow.A, law) * rw::Vec2{0.0, -1.0};
  json s{{"wall_shear", flow.wall_shear}, {"A12", flow.A.a12}, {"stress_jump", vec(jump)}};
  out.write_json("summary.json", s);
  return s;
}

json run_bl_solve(const rw::RunConfig& c, rw::ArtifactWriter& out) {
  const auto law = c.law();
  auto mesh = std::make_shared<const rw::Mesh>(rw::build_bl_mesh(c.pattern(), c.mesh.L, c.mesh.h));
  const auto sol = rw::solve_bl(mesh, law, rw::poiseuille_shear_tensor(law.p()), c.solve);
  const auto rep = rw::analyze_bl(sol);
  rw::CsvTable tail({"u_inf_1", "u_inf_2"});
  tail.row({rep.tail.x, rep.tail.y});
  out.write_csv("tail.csv", tail);
  rw::CsvTable energy({"t", "E"});
  for (const auto& [t, e] : rep.energy_curve) energy.row({t, e});
  out.write_csv("energy.csv", energy);
  rw::CsvTable cons({"t", "flux", "stress_average"});
  for (std::size_t i = 0; i < rep.flux_curve.size(); ++i)
    cons.row({rep.flux_curve[i].first, rep.flux_curve[i].second, rep.stress_avg_curve[i].second});
  out.write_csv("conservation.csv", cons);
  json s{{"tail", vec(rep.tail)},
         {"decay_delta", rep.decay_delta},
         {"decay_C", rep.decay_C},
         {"fit_r2", rep.fit_r2},
         {"decay_degenerate", rep.decay_degenerate},
         {"closed_form_flat_tail", c.pattern_kind == rw::PatternKind::flat
                                       ? json(rw::poiseuille_wall_shear(law.p()) * c.pattern_params.at(0))
                                       : json(nullptr)},
         {"dofs", sol.space->num_velocity_dofs() + sol.space->num_pressure_dofs()},
         {"solver", stats_json(sol.stats)}};
  out.write_json("summary.json", s);
  return s;
}

json run_wall_law(const rw::RunConfig& c, rw::ArtifactWriter& out) {
  rw::WallLawOptions o;
  o.L = c.mesh.L;
  o.h = c.mesh.h;
  o.solve = c.solve;
  const auto samples = rw::wall_law_map(c.pattern(), c.law(), c.study.shear_list, o);
  rw::CsvTable t({"shear", "F", "tail_2", "delta_reg", "iterations"});
  for (const auto& s : samples) t.row({s.shear, s.F, s.tail.y, s.delta_reg, static_cast<double>(s.iterations)});
  out.write_csv("wall_law.csv", t);
  json checks = json::array();
  for (const auto& a : samples)
    for (const auto& b : samples)
      if (std::abs(b.shear - 2.0 * a.shear) <= 1e-12 * b.shear)
        checks.push_back({{"s", a.shear}, {"relative_defect", std::abs(b.F - 2.0 * a.F) / std::abs(b.F)}});
  json s{{"homogeneity", checks}};
  out.write_json("summary.json", s);
  return s;
}

json run_channel_solve(const rw::RunConfig& c, rw::ArtifactWriter& out) {
  const auto law = c.law();
  auto mesh = std::make_shared<const rw::Mesh>(rw::build_channel_mesh(c.pattern(), c.study.eps, c.mesh.h_bulk, c.mesh.h_bl));
  const auto sol = rw::solve_channel(mesh, law, c.solve);
  const auto flow = rw::poiseuille(law);
  rw::CsvTable t({"x2", "mean_u1", "poiseuille"});
  for (int i = 0; i <= 40; ++i) {
    const double y = i / 40.0;
    const double m = rw::detail::line_integral(*sol.space, y, [&](std::size_t tri, const std::array<double, 3>& l) {
      return sol.space->evaluate(sol.velocity, tri, l).first.x;
    });
    t.row({y, m, flow.profile(y)});
  }
  out.write_csv("mean_profile.csv", t);
  const double slip = rw::detail::line_integral(*sol.space, 0.0, [&](std::size_t tri, const std::array<double, 3>& l) {
    return sol.space->evaluate(sol.velocity, tri, l).first.x;
  });
  json s{{"eps", c.study.eps},
         {"mean_slip_velocity", slip},
         {"slip_over_eps", slip / c.study.eps},
         {"dofs", sol.space->num_velocity_dofs() + sol.space->num_pressure_dofs()},
         {"solver", stats_json(sol.stats)}};
  out.write_json("summary.json", s);
  return s;
}

json run_verify_error(const rw::RunConfig& c, rw::ArtifactWriter& out) {
  rw::ErrorStudyOptions o;
  o.N = c.study.N;
  o.h_bulk = c.mesh.h_bulk;
  o.h_bl = c.mesh.h_bl;
  o.bl_L = c.mesh.L;
  o.solve = c.solve;
  const auto r = rw::run_error_study(c.pattern(), c.law(), c.study.eps_list, o);
  rw::CsvTable t({"eps", "sigma_height", "crude", "crude_far", "refined", "sigma0", "couette_gap", "split_lhs"});
  for (std::size_t i = 0; i < r.eps_list.size(); ++i)
    t.row({r.eps_list[i], r.sigma_heights[i], r.crude_err[i], r.crude_err_far[i], r.refined_err[i], r.sigma0_err[i],
           r.couette_gap[i], r.split_lhs[i]});
  out.write_csv("errors.csv", t);
  json s{{"rates",
          {{"crude", r.crude_rate},
           {"crude_far", r.crude_far_rate},
           {"refined", r.refined_rate},
           {"split_lhs", r.split_rate},
           {"sigma0", r.sigma0_rate}}},
         {"theory_exponents", {r.theory_rate_refined, r.theory_rate_alt}},
         {"U_inf", r.tails.empty() ? 0.0 : r.tails.front()},
         {"M", r.M},
         {"N", c.study.N}};
  out.write_json("summary.json", s);
  return s;
}

json run_check_inequalities(const rw::RunConfig& c, rw::ArtifactWriter& out) {
  std::vector<double> ps{1.2, 1.5, 2.0, 3.0, 4.0};
  if (std::find(ps.begin(), ps.end(), c.p) == ps.end()) ps.push_back(c.p);
  rw::CsvTable t({"p", "inequality", "applicable", "violations", "min_relative_slack"});
  std::uint64_t total = 0;
  for (double p : ps) {
    const auto sw = rw::sweep_inequalities(p, c.study.n, c.study.seed);
    for (auto id : rw::kAllInequalities) {
      const auto i = static_cast<std::size_t>(id);
      const double slack = sw.applicable[i] ? sw.min_relative_slack[i] : 0.0;
      t.row_text({rw::format_number(p), std::string(rw::name(id)), std::to_string(sw.applicable[i]),
                  std::to_string(sw.violations[i]), rw::format_number(slack)});
    }
    total += sw.total_violations();
  }
  out.write_csv("inequalities.csv", t);
  json s{{"pairs_per_p", c.study.n}, {"seed", c.study.seed}, {"total_violations", total}};
  out.write_json("summary.json", s);
  return s;
}

json run_korn(const rw::RunConfig& c, rw::ArtifactWriter& out) {
  require(c.study.domain == "strip" || c.study.domain == "rough-layer", rw::ErrorKind::validation,
          "korn: study.domain must be strip or rough-layer");
  rw::CsvTable t({"h", "constant", "best_sample", "after_ascent", "dofs"});
  json rows = json::array();
  std::vector<double> cs;
  for (double h : {c.mesh.h, 0.5 * c.mesh.h}) {
    std::shared_ptr<const rw::Mesh> mesh;
    rw::KornOptions o;
    o.samples = c.study.samples;
    o.seed = c.study.seed;
    if (c.study.domain == "strip") {
      mesh = std::make_shared<const rw::Mesh>(rw::build_strip_mesh(1.0, h));
    } else {
      mesh = std::make_shared<const rw::Mesh>(rw::build_rough_layer_mesh(c.pattern(), 1.0, h));
      o.zero_trace = true;
    }
    const auto e = rw::estimate_korn_constant(mesh, c.p, o);
    t.row({h, e.constant, e.best_sample, e.after_ascent, static_cast<double>(e.dofs)});
    cs.push_back(e.constant);
  }
  out.write_csv("korn.csv", t);
  json s{{"method", c.p == 2.0 ? "eigen" : "sampling"},
         {"relative_change", std::abs(cs[1] - cs[0]) / cs[1]},
         {"domain", c.study.domain}};
  out.write_json("summary.json", s);
  return s;
}

json run_trace_poincare(const rw::RunConfig& c, rw::ArtifactWriter& out) {
  rw::TracePoincareOptions o;
  o.samples = c.study.samples;
  o.seed = c.study.seed;
  o.h_cell = c.mesh.h_bl;
  const auto rows = rw::verify_trace_poincare(c.pattern(), c.p, c.study.eps_list, o);
  rw::CsvTable t({"eps", "trace_ratio", "poincare_ratio"});
  double tmin = 1e300, tmax = 0, pmin = 1e300, pmax = 0;
  for (const auto& r : rows) {
    t.row({r.eps, r.trace_ratio, r.poincare_ratio});
    tmin = std::min(tmin, r.trace_ratio);
    tmax = std::max(tmax, r.trace_ratio);
    pmin = std::min(pmin, r.poincare_ratio);
    pmax = std::max(pmax, r.poincare_ratio);
  }
  out.write_csv("trace_poincare.csv", t);
  json s{{"trace_variation", (tmax - tmin) / tmax}, {"poincare_variation", (pmax - pmin) / pmax}};
  out.write_json("summary.json", s);
  return s;
}

json run_mesh(const rw::RunConfig& c, rw::ArtifactWriter& out) {
  rw::Mesh m;
  const auto& d = c.study.domain;
  if (d == "bl") m = rw::build_bl_mesh(c.pattern(), c.mesh.L, c.mesh.h);
  else if (d == "channel") m = rw::build_channel_mesh(c.pattern(), c.study.eps, c.mesh.h_bulk, c.mesh.h_bl);
  else if (d == "strip") m = rw::build_strip_mesh(1.0, c.mesh.h);
  else m = rw::build_rough_layer_mesh(c.pattern(), c.study.eps, c.mesh.h_bl);
  std::ostringstream os;
  rw::write_mesh(os, m);
  out.write("mesh.txt", os.str());
  const auto q = rw::mesh_quality(m);
  json s{{"domain", d},
         {"vertices", m.vertices.size()},
         {"triangles", m.triangles.size()},
         {"min_angle", q.min_angle},
         {"max_angle", q.max_angle},
         {"max_diameter", q.max_diameter},
         {"area", q.area},
         {"polygon_area", q.polygon_area},
         {"curved_area", q.curved_area},
         {"passes", q.passes()}};
  out.write_json("quality.json", s);
  return s;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Power-law Stokes flow over rough walls: boundary layers, wall laws and error studies"};
  app.require_subcommand(1);
  app.fallthrough();
  Flags f;
  app.add_option("--config", f.config, "JSON configuration file");
  app.add_option("--out", f.out, "output directory");
  app.add_option("--p", f.p, "power-law exponent (> 1)");
  app.add_option("--delta-reg", f.delta_reg, "stress regularization");
  app.add_option("--pattern", f.pattern, "flat | sinusoid | fourier | polyline-smoothed");
  app.add_option("--pattern-params", f.pattern_params, "pattern parameters");
  app.add_option("--L", f.L, "boundary-layer truncation height");
  app.add_option("--mesh-h", f.h, "boundary-layer element size");
  app.add_option("--h-bulk", f.h_bulk, "channel bulk element size");
  app.add_option("--h-bl", f.h_bl, "element size near the roughness (in cell units)");
  app.add_option("--tol", f.tol, "nonlinear residual tolerance");
  app.add_option("--max-iter", f.max_iter, "nonlinear iteration cap");
  app.add_option("--scheme", f.scheme, "picard | newton | picard-then-newton");
  app.add_option("--lid", f.lid, "dirichlet-zero | dirichlet-affine | stress-free");
  app.add_option("--delta-schedule", f.delta_schedule, "decreasing regularization ladder");
  app.add_option("--eps-list", f.eps_list, "roughness scales (1/k)");
  app.add_option("--eps", f.eps, "single roughness scale (1/k)");
  app.add_option("--shears", f.shears, "wall-law shear rates");
  app.add_option("--N", f.N, "interface height factor: x2 = N eps |ln eps|");
  app.add_option("--seed", f.seed, "random seed");
  app.add_option("--n", f.n, "random pairs per exponent");
  app.add_option("--samples", f.samples, "random fields per estimate");
  app.add_option("--domain", f.domain, "strip | rough-layer | bl | channel");

  const std::vector<std::pair<const char*, const char*>> commands{
      {"poiseuille", "generalized Poiseuille profile and stress jump"},
      {"bl-solve", "boundary-layer corrector, tail, decay and conservation curves"},
      {"wall-law", "tail F(s) over a list of shear rates"},
      {"channel-solve", "full rough-channel flow at one eps"},
      {"verify-error", "crude and refined error study over an eps grid"},
      {"check-inequalities", "randomized check of the monotonicity inequalities"},
      {"korn", "empirical Korn constant under refinement"},
      {"trace-poincare", "rescaled trace and Poincare ratios in the rough layer"},
      {"mesh", "write a mesh and its quality report"}};
  for (const auto& [name, help] : commands) app.add_subcommand(name, help);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  rw::RunConfig cfg;
  try {
    json base = json::object();
    if (!f.config.empty()) {
      std::ifstream in(f.config);
      if (!in) {
        std::cerr << "error[io]: cannot read " << f.config << "\n";
        return 4;
      }
      std::stringstream ss;
      ss << in.rdbuf();
      try {
        base = json::parse(ss.str());
      } catch (const json::parse_error& e) {
        throw rw::ConfigError(rw::ErrorKind::parse,
                              {"parse error at " + rw::detail::position(ss.str(), e.byte ? e.byte - 1 : 0) + ": " + e.what()});
      }
    }
    base["command"] = app.get_subcommands().front()->get_name();
    base.merge_patch(flags_to_json(f));
    rw::apply_config(cfg, base);
    rw::validate_config(cfg);
  } catch (const rw::Error& e) {
    std::cerr << "error[" << rw::to_string(e.kind()) << "]: " << e.what() << "\n";
    return rw::exit_code(e.kind());
  }

  try {
    rw::ArtifactWriter out(cfg.out_dir);
    const auto t0 = std::chrono::steady_clock::now();
    json summary;
    switch (cfg.command) {
      case rw::Command::poiseuille: summary = run_poiseuille(cfg, out); break;
      case rw::Command::bl_solve: summary = run_bl_solve(cfg, out); break;
      case rw::Command::wall_law: summary = run_wall_law(cfg, out); break;
      case rw::Command::channel_solve: summary = run_channel_solve(cfg, out); break;
      case rw::Command::verify_error: summary = run_verify_error(cfg, out); break;
      case rw::Command::check_inequalities: summary = run_check_inequalities(cfg, out); break;
      case rw::Command::korn: summary = run_korn(cfg, out); break;
      case rw::Command::trace_poincare: summary = run_trace_poincare(cfg, out); break;
      case rw::Command::mesh: summary = run_mesh(cfg, out); break;
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    out.finish({{"config", cfg.to_json()},
                {"versions",
                 {{"roughwall", kVersion},
                  {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                                std::to_string(EIGEN_MINOR_VERSION)},
                  {"compiler", __VERSION__}}},
                {"seed", cfg.study.seed},
                {"seconds", secs},
                {"summary", summary}});
    std::cout << summary.dump(2) << "\n";
    return 0;
  } catch (const rw::Error& e) {
    std::cerr << "error[" << rw::to_string(e.kind()) << "]: " << e.what() << "\n";
    return rw::exit_code(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "error[internal]: " << e.what() << "\n";
    return 3;
  }
}
