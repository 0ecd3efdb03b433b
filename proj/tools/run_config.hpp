#pragma once

// Run configuration for homctl: JSON in, validated and fully resolved JSON
// out. Unknown keys anywhere are rejected.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "hom/hom.hpp"
#include "hom/report.hpp"

namespace homctl {

using json = nlohmann::json;

/// Anything wrong with the configuration itself; maps to exit code 2.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

inline void check_keys(const json& j, std::initializer_list<const char*> allowed, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + ": expected an object");
  std::set<std::string> ok(allowed.begin(), allowed.end());
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!ok.count(it.key())) throw ConfigError(where + ": unknown key '" + it.key() + "'");
}

inline double get_number(const json& j, const char* key, const std::string& where) {
  if (!j.contains(key)) throw ConfigError(where + ": missing '" + key + "'");
  if (!j.at(key).is_number()) throw ConfigError(where + "." + key + ": expected a number");
  return j.at(key).get<double>();
}

inline double number_or(const json& j, const char* key, double fallback, const std::string& where) {
  return j.contains(key) ? get_number(j, key, where) : fallback;
}

inline std::uint64_t count_or(const json& j, const char* key, std::uint64_t fallback, const std::string& where) {
  if (!j.contains(key)) return fallback;
  const json& v = j.at(key);
  if (v.is_number_unsigned()) return v.get<std::uint64_t>();
  if (v.is_number_integer() && v.get<long long>() >= 0) return static_cast<std::uint64_t>(v.get<long long>());
  if (v.is_number_float()) {
    const double d = v.get<double>();
    if (d >= 0.0 && d == std::floor(d) && d < 1.8e19) return static_cast<std::uint64_t>(d);
  }
  throw ConfigError(where + "." + key + ": expected a non-negative integer");
}

inline std::string string_or(const json& j, const char* key, const std::string& fallback, const std::string& where) {
  if (!j.contains(key)) return fallback;
  if (!j.at(key).is_string()) throw ConfigError(where + "." + key + ": expected a string");
  return j.at(key).get<std::string>();
}

inline bool bool_or(const json& j, const char* key, bool fallback, const std::string& where) {
  if (!j.contains(key)) return fallback;
  if (!j.at(key).is_boolean()) throw ConfigError(where + "." + key + ": expected true or false");
  return j.at(key).get<bool>();
}

struct StateSpec {
  std::string label;
  hom::StateDescriptor desc;
  json resolved;
};

/// Parses one state block. Widths may be given in rad/ps or as filter specs
/// in nm; the resolved block carries both.
inline StateSpec parse_state(const json& j, const std::filesystem::path& base_dir, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + ": expected an object");
  const std::string kind_s = string_or(j, "kind", "", where);
  if (kind_s.empty()) throw ConfigError(where + ": missing 'kind'");
  hom::StateKind kind;
  try {
    kind = hom::state_kind_from_string(kind_s);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(where + ": " + e.what());
  }
  StateSpec s;
  s.label = string_or(j, "label", kind_s, where);
  json r = json::object();
  try {
    switch (kind) {
      case hom::StateKind::gauss:
        check_keys(j, {"kind", "label", "sigma", "fwhm_nm", "center_nm"}, where);
        if (j.contains("sigma") == j.contains("fwhm_nm"))
          throw ConfigError(where + ": give exactly one of 'sigma' or 'fwhm_nm' (+ 'center_nm')");
        if (j.contains("sigma")) {
          s.desc = hom::StateDescriptor::gauss_state(get_number(j, "sigma", where));
        } else {
          const double fw = get_number(j, "fwhm_nm", where), c = get_number(j, "center_nm", where);
          s.desc = hom::gauss_from_filter(fw, c);
          r["fwhm_nm"] = fw;
          r["center_nm"] = c;
        }
        break;
      case hom::StateKind::rect:
        check_keys(j, {"kind", "label", "delta_omega", "width_nm", "center_nm"}, where);
        if (j.contains("delta_omega") == j.contains("width_nm"))
          throw ConfigError(where + ": give exactly one of 'delta_omega' or 'width_nm' (+ 'center_nm')");
        if (j.contains("delta_omega")) {
          s.desc = hom::StateDescriptor::rect_state(get_number(j, "delta_omega", where));
        } else {
          const double w = get_number(j, "width_nm", where), c = get_number(j, "center_nm", where);
          s.desc = hom::rect_from_filter(w, c);
          r["width_nm"] = w;
          r["center_nm"] = c;
        }
        break;
      case hom::StateKind::cat:
        check_keys(j, {"kind", "label", "omega_prime", "delta_omega_prime", "channels_nm"}, where);
        if (j.contains("channels_nm")) {
          if (j.contains("omega_prime") || j.contains("delta_omega_prime"))
            throw ConfigError(where + ": give either 'channels_nm' or omega_prime/delta_omega_prime");
          const json& c = j.at("channels_nm");
          const std::string w2 = where + ".channels_nm";
          check_keys(c, {"lambda_a", "lambda_b", "width", "degenerate"}, w2);
          const double la = get_number(c, "lambda_a", w2), lb = get_number(c, "lambda_b", w2);
          const double wd = get_number(c, "width", w2), ld = get_number(c, "degenerate", w2);
          s.desc = hom::cat_from_channels(la, lb, wd, ld);
          r["channels_nm"] = {{"lambda_a", la}, {"lambda_b", lb}, {"width", wd}, {"degenerate", ld}};
        } else {
          s.desc = hom::StateDescriptor::cat_state(get_number(j, "omega_prime", where),
                                                   get_number(j, "delta_omega_prime", where));
        }
        break;
      case hom::StateKind::sinc_pm:
        check_keys(j, {"kind", "label", "a", "b", "c", "optics"}, where);
        if (j.contains("optics")) {
          if (j.contains("a") || j.contains("b") || j.contains("c"))
            throw ConfigError(where + ": give either 'optics' or a/b/c");
          const json& o = j.at("optics");
          const std::string w2 = where + ".optics";
          check_keys(o, {"length_mm", "dn_modal", "dn_biref", "chrom_disp", "omega_plus"}, w2);
          const double L = get_number(o, "length_mm", w2), nm = get_number(o, "dn_modal", w2);
          const double nb = get_number(o, "dn_biref", w2), cd = get_number(o, "chrom_disp", w2);
          const double wp = get_number(o, "omega_plus", w2);
          s.desc = hom::sinc_pm_from_optics(L, nm, nb, cd, wp);
          r["optics"] = {{"length_mm", L}, {"dn_modal", nm}, {"dn_biref", nb}, {"chrom_disp", cd},
                         {"omega_plus", wp}};
        } else {
          const hom::StateDescriptor def;
          s.desc = hom::StateDescriptor::sinc_state(number_or(j, "a", def.a, where), number_or(j, "b", def.b, where),
                                                    number_or(j, "c", def.c, where));
        }
        break;
      case hom::StateKind::tabulated: {
        check_keys(j, {"kind", "label", "csv"}, where);
        const std::string p = string_or(j, "csv", "", where);
        if (p.empty()) throw ConfigError(where + ": tabulated state needs 'csv'");
        const std::filesystem::path path = std::filesystem::path(p).is_absolute() ? std::filesystem::path(p) : base_dir / p;
        s.desc = hom::read_amplitude_csv(path.string());
        r["csv"] = p;
        break;
      }
    }
    hom::validate(s.desc);
  } catch (const ConfigError&) {
    throw;
  } catch (const std::invalid_argument& e) {
    throw ConfigError(where + ": " + e.what());
  }
  const json derived = hom::to_json(s.desc);
  for (auto it = derived.begin(); it != derived.end(); ++it) r[it.key()] = it.value();
  r["label"] = s.label;
  s.resolved = r;
  return s;
}

enum class OutputFormat { csv, json };

struct RunConfig {
  std::vector<StateSpec> states;
  hom::CutSource cut_path = hom::CutSource::analytic;
  std::size_t grid_points = 4096;
  double span_sigmas = 8.0;
  hom::VisibilityModel vis;
  std::optional<std::vector<double>> tau_grid;  // explicit delay grid
  std::vector<double> v_list;                   // scan visibilities
  std::vector<double> v_range;                  // ratio-curve visibilities
  std::uint64_t trials = 10000;
  std::uint64_t replicates = 200;
  std::uint64_t seed = 1;
  hom::SamplingMode mode = hom::SamplingMode::binomial;
  std::optional<double> tau_true;  // empty: use tau_M
  std::optional<std::string> input_csv;
  std::optional<hom::StateKind> fit_family;
  hom::FitMask fit_mask;
  std::optional<std::vector<double>> fit_initial;
  std::string out_dir = "out";
  OutputFormat format = OutputFormat::csv;
  json resolved;
};

struct Overrides {
  std::optional<std::string> out_dir;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> format;
};

inline std::vector<double> number_list(const json& j, const std::string& where) {
  if (!j.is_array() || j.empty()) throw ConfigError(where + ": expected a non-empty array of numbers");
  std::vector<double> out;
  for (const auto& x : j) {
    if (!x.is_number()) throw ConfigError(where + ": expected numbers");
    out.push_back(x.get<double>());
  }
  return out;
}

inline RunConfig resolve_config(const json& root, const std::filesystem::path& base_dir, const Overrides& ov) {
  check_keys(root, {"state", "states", "cut", "visibility", "grid", "simulation", "fit", "output"}, "config");
  RunConfig c;
  json res = json::object();

  if (root.contains("state") && root.contains("states")) throw ConfigError("config: give 'state' or 'states', not both");
  if (root.contains("state")) {
    c.states.push_back(parse_state(root.at("state"), base_dir, "state"));
  } else if (root.contains("states")) {
    const json& arr = root.at("states");
    if (!arr.is_array() || arr.empty()) throw ConfigError("states: expected a non-empty array");
    for (std::size_t i = 0; i < arr.size(); ++i)
      c.states.push_back(parse_state(arr[i], base_dir, "states[" + std::to_string(i) + "]"));
  } else {
    throw ConfigError("config: missing 'state' or 'states'");
  }
  std::set<std::string> labels;
  json states = json::array();
  for (const auto& s : c.states) {
    if (!labels.insert(s.label).second) throw ConfigError("states: duplicate label '" + s.label + "'");
    states.push_back(s.resolved);
  }
  res["states"] = states;

  const json cut = root.value("cut", json::object());
  check_keys(cut, {"path", "grid_points", "span_sigmas"}, "cut");
  const std::string path = string_or(cut, "path", "analytic", "cut");
  if (path != "analytic" && path != "numeric") throw ConfigError("cut.path: expected 'analytic' or 'numeric'");
  c.cut_path = path == "analytic" ? hom::CutSource::analytic : hom::CutSource::numeric;
  c.grid_points = count_or(cut, "grid_points", 4096, "cut");
  c.span_sigmas = number_or(cut, "span_sigmas", 8.0, "cut");
  if (c.grid_points < 512) throw ConfigError("cut.grid_points: must be >= 512");
  if (!(c.span_sigmas > 0.0)) throw ConfigError("cut.span_sigmas: must be positive");
  res["cut"] = {{"path", path}, {"grid_points", c.grid_points}, {"span_sigmas", c.span_sigmas}};

  const json vis = root.value("visibility", json::object());
  check_keys(vis, {"v", "theta", "v_max"}, "visibility");
  try {
    if (vis.contains("theta")) {
      if (vis.contains("v")) throw ConfigError("visibility: give 'v' or 'theta' (+ 'v_max'), not both");
      c.vis = hom::VisibilityModel::from_angle(get_number(vis, "theta", "visibility"),
                                               number_or(vis, "v_max", 1.0, "visibility"));
    } else {
      if (vis.contains("v_max")) throw ConfigError("visibility: 'v_max' needs 'theta'");
      c.vis = hom::VisibilityModel::from_value(number_or(vis, "v", 1.0, "visibility"));
    }
  } catch (const ConfigError&) {
    throw;
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("visibility: ") + e.what());
  }
  json rv = {{"v", c.vis.v}};
  if (c.vis.theta) rv["theta"] = *c.vis.theta;
  if (c.vis.v_max) rv["v_max"] = *c.vis.v_max;
  res["visibility"] = rv;

  const json grid = root.value("grid", json::object());
  check_keys(grid, {"tau_min", "tau_max", "tau_points", "v_list", "v_range"}, "grid");
  json rg = json::object();
  if (grid.contains("tau_min") || grid.contains("tau_max") || grid.contains("tau_points")) {
    const double lo = get_number(grid, "tau_min", "grid"), hi = get_number(grid, "tau_max", "grid");
    const auto n = count_or(grid, "tau_points", 0, "grid");
    if (!(hi > lo) || n < 2) throw ConfigError("grid: need tau_max > tau_min and tau_points >= 2");
    c.tau_grid = hom::detail::linspace(lo, hi, n);
    rg["tau_min"] = lo;
    rg["tau_max"] = hi;
    rg["tau_points"] = n;
  }
  c.v_list = grid.contains("v_list") ? number_list(grid.at("v_list"), "grid.v_list")
                                     : std::vector<double>{0.83, 0.95, 0.994, 1.0};
  for (double v : c.v_list)
    if (!(v > 0.0 && v <= 1.0)) throw ConfigError("grid.v_list: visibilities must lie in (0, 1]");
  rg["v_list"] = c.v_list;
  json vr = grid.value("v_range", json::object());
  check_keys(vr, {"min", "max", "points"}, "grid.v_range");
  const double vmin = number_or(vr, "min", 0.5, "grid.v_range"), vmax = number_or(vr, "max", 0.999, "grid.v_range");
  const auto vpts = count_or(vr, "points", 50, "grid.v_range");
  if (!(vmin > 0.0 && vmax <= 1.0 && vmax > vmin && vpts >= 2))
    throw ConfigError("grid.v_range: need 0 < min < max <= 1 and points >= 2");
  c.v_range = hom::detail::linspace(vmin, vmax, vpts);
  rg["v_range"] = {{"min", vmin}, {"max", vmax}, {"points", vpts}};
  res["grid"] = rg;

  const json sim = root.value("simulation", json::object());
  check_keys(sim, {"trials", "replicates", "seed", "mode", "tau_true", "input_csv"}, "simulation");
  c.trials = count_or(sim, "trials", 10000, "simulation");
  c.replicates = count_or(sim, "replicates", 200, "simulation");
  c.seed = ov.seed ? *ov.seed : count_or(sim, "seed", 1, "simulation");
  if (c.trials < 1) throw ConfigError("simulation.trials: must be >= 1");
  if (c.replicates < 50) throw ConfigError("simulation.replicates: must be >= 50");
  try {
    c.mode = hom::sampling_mode_from_string(string_or(sim, "mode", "binomial", "simulation"));
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("simulation.mode: ") + e.what());
  }
  json rs = {{"trials", c.trials}, {"replicates", c.replicates}, {"seed", c.seed}, {"mode", hom::to_string(c.mode)}};
  if (sim.contains("tau_true")) {
    const json& t = sim.at("tau_true");
    if (t.is_number()) {
      c.tau_true = t.get<double>();
      rs["tau_true"] = *c.tau_true;
    } else if (!(t.is_string() && t.get<std::string>() == "tau_m")) {
      throw ConfigError("simulation.tau_true: expected a number or \"tau_m\"");
    }
  }
  if (!c.tau_true) rs["tau_true"] = "tau_m";
  if (sim.contains("input_csv")) {
    const std::string p = string_or(sim, "input_csv", "", "simulation");
    c.input_csv = std::filesystem::path(p).is_absolute() ? p : (base_dir / p).string();
    rs["input_csv"] = p;
  }
  res["simulation"] = rs;

  const json fit = root.value("fit", json::object());
  check_keys(fit, {"family", "free", "initial"}, "fit");
  json rf = json::object();
  if (fit.contains("family")) {
    const std::string fam = string_or(fit, "family", "", "fit");
    if (fam != "gauss" && fam != "rect" && fam != "cat")
      throw ConfigError("fit.family: expected gauss, rect or cat");
    c.fit_family = hom::state_kind_from_string(fam);
  } else {
    const auto k = c.states.front().desc.kind;
    if (k == hom::StateKind::gauss || k == hom::StateKind::rect || k == hom::StateKind::cat) c.fit_family = k;
  }
  if (c.fit_family) rf["family"] = hom::to_string(*c.fit_family);
  const json fr = fit.value("free", json::object());
  check_keys(fr, {"visibility", "shape", "offset"}, "fit.free");
  c.fit_mask.visibility = bool_or(fr, "visibility", true, "fit.free");
  c.fit_mask.shape = bool_or(fr, "shape", true, "fit.free");
  c.fit_mask.offset = bool_or(fr, "offset", true, "fit.free");
  rf["free"] = {{"visibility", c.fit_mask.visibility}, {"shape", c.fit_mask.shape}, {"offset", c.fit_mask.offset}};
  if (fit.contains("initial")) {
    c.fit_initial = number_list(fit.at("initial"), "fit.initial");
    rf["initial"] = *c.fit_initial;
  }
  res["fit"] = rf;

  const json out = root.value("output", json::object());
  check_keys(out, {"dir", "format"}, "output");
  c.out_dir = ov.out_dir ? *ov.out_dir : string_or(out, "dir", "out", "output");
  const std::string fmt = ov.format ? *ov.format : string_or(out, "format", "csv", "output");
  if (fmt != "csv" && fmt != "json") throw ConfigError("output.format: expected 'csv' or 'json'");
  c.format = fmt == "csv" ? OutputFormat::csv : OutputFormat::json;
  res["output"] = {{"dir", c.out_dir}, {"format", fmt}};

  c.resolved = res;
  return c;
}

inline json load_json_file(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open config '" + path.string() + "'");
  try {
    return json::parse(f, nullptr, true, /*ignore_comments=*/true);
  } catch (const json::parse_error& e) {
    throw ConfigError("config '" + path.string() + "': " + e.what());
  }
}

}  // namespace homctl
