#pragma once

// Run configuration: a JSON document validated in full (every violation is collected),
// with unknown keys rejected.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "roughwall/error.hpp"
#include "roughwall/pattern.hpp"
#include "roughwall/solver.hpp"
#include "roughwall/tensor.hpp"

namespace roughwall {

enum class Command { poiseuille, bl_solve, wall_law, channel_solve, verify_error, check_inequalities, korn, trace_poincare, mesh };

inline const char* to_string(Command c) {
  switch (c) {
    case Command::poiseuille: return "poiseuille";
    case Command::bl_solve: return "bl-solve";
    case Command::wall_law: return "wall-law";
    case Command::channel_solve: return "channel-solve";
    case Command::verify_error: return "verify-error";
    case Command::check_inequalities: return "check-inequalities";
    case Command::korn: return "korn";
    case Command::trace_poincare: return "trace-poincare";
    case Command::mesh: return "mesh";
  }
  return "?";
}

inline std::optional<Command> parse_command(const std::string& s) {
  for (auto c : {Command::poiseuille, Command::bl_solve, Command::wall_law, Command::channel_solve, Command::verify_error,
                 Command::check_inequalities, Command::korn, Command::trace_poincare, Command::mesh})
    if (s == to_string(c)) return c;
  return std::nullopt;
}

struct MeshConfig {
  double L = 8.0;
  double h = 0.1;
  double h_bulk = 0.05;
  double h_bl = 0.2;
};

struct StudyConfig {
  std::vector<double> eps_list{0.25, 0.125, 0.0625, 0.03125};
  std::vector<double> shear_list{0.5, 1.0, 2.0};
  double N = 0.25;
  std::uint64_t seed = 7;
  std::uint64_t n = 100000;
  int samples = 200;
  /// Mesh family for korn ("strip", "rough-layer") and mesh (also "bl", "channel").
  std::string domain = "strip";
  double eps = 0.125;
};

struct RunConfig {
  Command command = Command::bl_solve;
  double p = 2.0;
  double delta_reg = PowerLaw::kDefaultDelta;
  PatternKind pattern_kind = PatternKind::sinusoid;
  std::vector<double> pattern_params{-0.5, 0.25};
  MeshConfig mesh;
  SolveOptions solve;
  StudyConfig study;
  std::string out_dir = "out";

  PowerLaw law() const { return PowerLaw(p, delta_reg); }
  RoughnessPattern pattern() const { return RoughnessPattern::make(pattern_kind, pattern_params); }

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["command"] = to_string(command);
    j["law"] = {{"p", p}, {"delta_reg", delta_reg}};
    j["pattern"] = {{"kind", std::string(to_string(pattern_kind))}, {"params", pattern_params}};
    j["mesh"] = {{"L", mesh.L}, {"h", mesh.h}, {"h_bulk", mesh.h_bulk}, {"h_bl", mesh.h_bl}};
    j["solve"] = {{"tol", solve.tol},
                  {"max_iter", solve.max_iter},
                  {"scheme", to_string(solve.scheme)},
                  {"delta_schedule", solve.delta_schedule},
                  {"lid", to_string(solve.lid)},
                  {"lid_velocity", {solve.lid_velocity.x, solve.lid_velocity.y}}};
    j["study"] = {{"eps_list", study.eps_list}, {"shear_list", study.shear_list}, {"N", study.N},
                  {"seed", study.seed},         {"n", study.n},                   {"samples", study.samples},
                  {"domain", study.domain},     {"eps", study.eps}};
    j["out_dir"] = out_dir;
    return j;
  }
};

/// All problems found in a configuration; what() lists them one per line.
class ConfigError : public Error {
 public:
  ConfigError(ErrorKind kind, std::vector<std::string> problems)
      : Error(kind, join(problems)), problems_(std::move(problems)) {}
  const std::vector<std::string>& problems() const { return problems_; }

 private:
  static std::string join(const std::vector<std::string>& v) {
    std::string s;
    for (const auto& x : v) s += (s.empty() ? "" : "\n") + x;
    return s;
  }
  std::vector<std::string> problems_;
};

namespace detail {

class ConfigReader {
 public:
  std::vector<std::string> problems;

  void keys(const nlohmann::json& obj, const std::string& where, const std::set<std::string>& allowed) {
    if (!obj.is_object()) {
      problems.push_back(where + ": expected an object");
      return;
    }
    for (const auto& [k, v] : obj.items())
      if (!allowed.count(k)) problems.push_back(where + (where.empty() ? "" : ".") + k + ": unknown key");
  }

  template <class T>
  void get(const nlohmann::json& obj, const char* key, const std::string& where, T& out) {
    if (!obj.is_object() || !obj.contains(key)) return;
    try {
      out = obj.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
      problems.push_back(path(where, key) + ": wrong type");
    }
  }

  void check(bool ok, const std::string& field, const std::string& constraint) {
    if (!ok) problems.push_back(field + ": " + constraint);
  }

  static std::string path(const std::string& where, const char* key) { return where.empty() ? key : where + "." + key; }
};

/// "line L, column C" of a byte offset.
inline std::string position(const std::string& text, std::size_t byte) {
  std::size_t line = 1, col = 1;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  std::ostringstream os;
  os << "line " << line << ", column " << col;
  return os.str();
}

}  // namespace detail

/// Applies the keys of a JSON object on top of cfg (so flags and files can be layered).
inline void apply_config(RunConfig& cfg, const nlohmann::json& j) {
  detail::ConfigReader r;
  r.keys(j, "", {"command", "law", "pattern", "mesh", "solve", "study", "out_dir"});
  if (j.is_object()) {
    if (j.contains("command")) {
      std::string c;
      r.get(j, "command", "", c);
      if (auto cmd = parse_command(c)) cfg.command = *cmd;
      else r.problems.push_back("command: unknown command '" + c + "'");
    }
    if (j.contains("law")) {
      const auto& l = j["law"];
      r.keys(l, "law", {"p", "delta_reg"});
      r.get(l, "p", "law", cfg.p);
      r.get(l, "delta_reg", "law", cfg.delta_reg);
    }
    if (j.contains("pattern")) {
      const auto& pt = j["pattern"];
      r.keys(pt, "pattern", {"kind", "params"});
      if (pt.is_object() && pt.contains("kind")) {
        std::string k;
        r.get(pt, "kind", "pattern", k);
        try {
          cfg.pattern_kind = parse_pattern_kind(k);
        } catch (const Error& e) {
          r.problems.push_back(std::string("pattern.kind: ") + e.what());
        }
      }
      r.get(pt, "params", "pattern", cfg.pattern_params);
    }
    if (j.contains("mesh")) {
      const auto& m = j["mesh"];
      r.keys(m, "mesh", {"L", "h", "h_bulk", "h_bl"});
      r.get(m, "L", "mesh", cfg.mesh.L);
      r.get(m, "h", "mesh", cfg.mesh.h);
      r.get(m, "h_bulk", "mesh", cfg.mesh.h_bulk);
      r.get(m, "h_bl", "mesh", cfg.mesh.h_bl);
    }
    if (j.contains("solve")) {
      const auto& s = j["solve"];
      r.keys(s, "solve", {"tol", "max_iter", "scheme", "delta_schedule", "lid", "lid_velocity"});
      r.get(s, "tol", "solve", cfg.solve.tol);
      r.get(s, "max_iter", "solve", cfg.solve.max_iter);
      r.get(s, "delta_schedule", "solve", cfg.solve.delta_schedule);
      std::string text;
      if (s.is_object() && s.contains("scheme")) {
        r.get(s, "scheme", "solve", text);
        try {
          cfg.solve.scheme = parse_scheme(text);
        } catch (const Error& e) {
          r.problems.push_back(std::string("solve.scheme: ") + e.what());
        }
      }
      if (s.is_object() && s.contains("lid")) {
        r.get(s, "lid", "solve", text);
        try {
          cfg.solve.lid = parse_lid(text);
        } catch (const Error& e) {
          r.problems.push_back(std::string("solve.lid: ") + e.what());
        }
      }
      std::vector<double> lv;
      r.get(s, "lid_velocity", "solve", lv);
      if (!lv.empty()) {
        if (lv.size() == 2) cfg.solve.lid_velocity = {lv[0], lv[1]};
        else r.problems.push_back("solve.lid_velocity: expected [u1, u2]");
      }
    }
    if (j.contains("study")) {
      const auto& s = j["study"];
      r.keys(s, "study", {"eps_list", "shear_list", "N", "seed", "n", "samples", "domain", "eps"});
      r.get(s, "eps_list", "study", cfg.study.eps_list);
      r.get(s, "shear_list", "study", cfg.study.shear_list);
      r.get(s, "N", "study", cfg.study.N);
      r.get(s, "seed", "study", cfg.study.seed);
      r.get(s, "n", "study", cfg.study.n);
      r.get(s, "samples", "study", cfg.study.samples);
      r.get(s, "domain", "study", cfg.study.domain);
      r.get(s, "eps", "study", cfg.study.eps);
    }
    r.get(j, "out_dir", "", cfg.out_dir);
  }
  if (!r.problems.empty()) throw ConfigError(ErrorKind::validation, r.problems);
}

/// Re-checks every numeric constraint of the underlying types; throws ConfigError listing all violations.
inline void validate_config(const RunConfig& cfg) {
  detail::ConfigReader r;
  {
    std::ostringstream os;
    os << "p must exceed 1 (got " << cfg.p << ")";
    r.check(cfg.p > 1.0 && std::isfinite(cfg.p), "law.p", os.str());
  }
  r.check(cfg.delta_reg >= 0.0, "law.delta_reg", "must be >= 0");
  try {
    (void)cfg.pattern();
  } catch (const Error& e) {
    r.problems.push_back(std::string("pattern: ") + e.what());
  }
  r.check(cfg.mesh.L >= 2.0, "mesh.L", "must be >= 2");
  r.check(cfg.mesh.h > 0.0 && cfg.mesh.h <= 0.25, "mesh.h", "must lie in (0, 0.25]");
  r.check(cfg.mesh.h_bulk > 0.0 && cfg.mesh.h_bulk <= 0.1, "mesh.h_bulk", "must lie in (0, 0.1]");
  r.check(cfg.mesh.h_bl > 0.0 && cfg.mesh.h_bl <= 0.25, "mesh.h_bl", "must lie in (0, 0.25]");
  try {
    cfg.solve.validate();
  } catch (const Error& e) {
    r.problems.push_back(std::string("solve: ") + e.what());
  }
  if (!cfg.solve.delta_schedule.empty())
    r.check(cfg.solve.delta_schedule.back() == cfg.delta_reg, "solve.delta_schedule", "must end at law.delta_reg");
  for (double e : cfg.study.eps_list) {
    std::ostringstream os;
    os << "entry " << e << " must be 1/k for an integer k >= 4";
    const double k = 1.0 / e;
    r.check(e > 0.0 && e <= 0.25 && std::abs(k - std::round(k)) <= 1e-9 * k, "study.eps_list", os.str());
  }
  {
    const double k = 1.0 / cfg.study.eps;
    r.check(cfg.study.eps > 0.0 && cfg.study.eps <= 0.25 && std::abs(k - std::round(k)) <= 1e-9 * k, "study.eps",
            "must be 1/k for an integer k >= 4");
  }
  for (double s : cfg.study.shear_list) r.check(s > 0.0, "study.shear_list", "entries must be > 0");
  r.check(cfg.study.N >= 0.0, "study.N", "must be >= 0");
  r.check(cfg.study.n > 0, "study.n", "must be > 0");
  r.check(cfg.study.samples > 0, "study.samples", "must be > 0");
  r.check(cfg.study.domain == "strip" || cfg.study.domain == "rough-layer" || cfg.study.domain == "bl" ||
              cfg.study.domain == "channel",
          "study.domain", "must be one of strip, rough-layer, bl, channel");
  r.check(!cfg.out_dir.empty(), "out_dir", "must not be empty");
  if (!r.problems.empty()) throw ConfigError(ErrorKind::validation, r.problems);
}

/// Parses and validates a configuration document.
inline RunConfig parse_config(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(ErrorKind::parse, {"parse error at " + detail::position(text, e.byte == 0 ? 0 : e.byte - 1) + ": " +
                                         e.what()});
  }
  RunConfig cfg;
  apply_config(cfg, j);
  validate_config(cfg);
  return cfg;
}

}  // namespace roughwall
