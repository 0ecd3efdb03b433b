// homctl: config-driven front end for the HOM delay-metrology library.
//
//   homctl <state|scan|ratio|simulate|fit|estimate> --config run.json
//          [--out DIR] [--seed N] [--format csv|json]
//
// Exit codes: 0 success, 2 configuration error, 3 numerical failure.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "hom/hom.hpp"
#include "hom/report.hpp"
#include "run_config.hpp"

namespace fs = std::filesystem;
using homctl::json;
using homctl::OutputFormat;
using homctl::RunConfig;

namespace {

class Writer {
 public:
  explicit Writer(fs::path dir) : dir_(std::move(dir)) { fs::create_directories(dir_); }

  template <typename F>
  void file(const std::string& name, F&& body) {
    std::ofstream os(dir_ / name, std::ios::binary | std::ios::trunc);
    if (!os) throw std::runtime_error("cannot write " + (dir_ / name).string());
    body(os);
  }
  void json_file(const std::string& name, const json& j) {
    file(name, [&](std::ostream& os) { os << j.dump(2) << '\n'; });
  }

 private:
  fs::path dir_;
};

std::string short_num(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", x);
  return buf;
}

hom::Probe probe_for(const RunConfig& c, const homctl::StateSpec& s) {
  const bool closed = s.desc.kind == hom::StateKind::gauss || s.desc.kind == hom::StateKind::rect ||
                      s.desc.kind == hom::StateKind::cat;
  const auto path = closed ? c.cut_path : hom::CutSource::numeric;
  return hom::make_probe(s.desc, path, c.grid_points, c.span_sigmas, s.label);
}

std::vector<double> scan_grid(const RunConfig& c, const hom::Probe& p) {
  if (c.tau_grid) return *c.tau_grid;
  return hom::detail::linspace(-p.tau_max, p.tau_max, 1001);
}

int cmd_state(const RunConfig& c, Writer& out) {
  const auto& s = c.states.front();
  const hom::SpectralAmplitude amp = hom::make_state(s.desc, c.grid_points, c.span_sigmas);
  const hom::SpectralMoments m = hom::moments(amp);
  json j;
  j["state"] = s.resolved;
  j["moments"] = hom::to_json(m);
  j["qfi"] = {{"correlated", hom::qfi(m, hom::QfiMode::correlated)},
              {"separable", hom::qfi(m, hom::QfiMode::separable)}};
  j["grid"] = {{"points", amp.size()},
               {"step", amp.step()},
               {"rule", amp.rule() == hom::Quadrature::cell ? "cell" : "trapezoid"},
               {"covers_support", hom::covers_support(amp, c.span_sigmas)}};
  if (c.format == OutputFormat::csv) {
    out.file("amplitude.csv", [&](std::ostream& os) { hom::write_amplitude_csv(os, amp); });
  } else {
    std::vector<double> re, im;
    for (const auto& v : amp.values()) {
      re.push_back(v.real());
      im.push_back(v.imag());
    }
    j["amplitude"] = {{"omega_rad_per_ps", amp.omega()}, {"re", re}, {"im", im}};
  }
  out.json_file("state.json", j);
  return 0;
}

int cmd_scan(const RunConfig& c, Writer& out) {
  json summary = json::array();
  for (const auto& s : c.states) {
    const hom::Probe p = probe_for(c, s);
    const auto grid = scan_grid(c, p);
    const hom::WignerCut cut = hom::sample_cut(p.cut, grid, c.cut_path);
    json entry;
    entry["state"] = s.resolved;
    entry["qfi"] = p.qfi;
    entry["tau_max"] = p.tau_max;
    json rows = json::array();
    json curves = json::object();
    if (c.format == OutputFormat::csv)
      out.file("cut_" + s.label + ".csv", [&](std::ostream& os) { hom::write_cut_csv(os, cut); });
    else
      curves["cut"] = {{"tau_ps", cut.tau}, {"w", cut.w}, {"w1", cut.w1}, {"w2", cut.w2}};
    for (double v : c.v_list) {
      const auto vis = hom::VisibilityModel::from_value(v);
      const hom::FisherScan scan = hom::fisher_scan(p, vis, grid);
      std::vector<double> pc;
      for (double t : grid) pc.push_back(hom::coincidence_probability(p.cut, vis, t));
      json row = {{"v", v},
                  {"tau_m", scan.tau_m},
                  {"f_tilde", scan.f_tilde},
                  {"ratio", scan.ratio},
                  {"bound_v2", v * v},
                  {"below_v2_bound", scan.ratio <= v * v + 1e-9}};
      if (v < 1.0)
        row["stationarity"] = hom::to_json(hom::stationarity_residual(p.cut, vis, p.tau_max));
      else
        row["stationarity"] = nullptr;
      rows.push_back(row);
      const std::string tag = s.label + "_v" + short_num(v);
      if (c.format == OutputFormat::csv) {
        out.file("fisher_" + tag + ".csv", [&](std::ostream& os) { hom::write_fisher_csv(os, scan); });
        out.file("pc_" + tag + ".csv", [&](std::ostream& os) {
          os << "tau_ps,pc\n";
          for (std::size_t i = 0; i < grid.size(); ++i)
            os << hom::format_double(grid[i]) << ',' << hom::format_double(pc[i]) << '\n';
        });
      } else {
        curves["v" + short_num(v)] = {{"tau_ps", grid}, {"pc", pc}, {"fi", scan.f_values}};
      }
    }
    entry["visibilities"] = rows;
    if (c.format == OutputFormat::json) entry["curves"] = curves;
    summary.push_back(entry);
  }
  out.json_file("scan_summary.json", summary);
  return 0;
}

int cmd_ratio(const RunConfig& c, Writer& out) {
  json summary = json::array();
  std::vector<hom::RatioCurve> curves;
  for (const auto& s : c.states) {
    const hom::Probe p = probe_for(c, s);
    curves.push_back(hom::ratio_curve(p, c.v_range));
    json j = hom::to_json(curves.back());
    j["state"] = s.resolved;
    for (const auto& d : curves.back().diagnostics) std::cerr << "ratio[" << s.label << "]: " << d << '\n';
    if (c.format == OutputFormat::csv) {
      j.erase("ratio");
      j.erase("tau_m");
      j.erase("f_tilde");
      out.file("ratio_" + s.label + ".csv", [&](std::ostream& os) { hom::write_ratio_csv(os, curves.back()); });
    }
    summary.push_back(j);
  }
  out.json_file("ratio_summary.json", summary);
  return 0;
}

std::vector<double> sim_grid(const RunConfig& c) {
  return c.tau_grid ? *c.tau_grid : hom::detail::linspace(-4.0, 4.0, 81);
}

hom::CountsRecord simulate(const RunConfig& c) {
  const hom::Probe p = probe_for(c, c.states.front());
  return hom::simulate_counts(p.cut, c.vis, sim_grid(c), c.trials, c.seed, c.mode);
}

int cmd_simulate(const RunConfig& c, Writer& out) {
  const hom::CountsRecord rec = simulate(c);
  if (c.format == OutputFormat::csv) {
    out.file("counts.csv", [&](std::ostream& os) { hom::write_counts_csv(os, rec); });
    out.json_file("simulate.json", {{"state", c.states.front().resolved},
                                    {"v", c.vis.v},
                                    {"seed", rec.seed},
                                    {"mode", hom::to_string(rec.mode)},
                                    {"trials", c.trials},
                                    {"points", rec.size()}});
  } else {
    json j = hom::to_json(rec);
    j["state"] = c.states.front().resolved;
    j["v"] = c.vis.v;
    out.json_file("counts.json", j);
  }
  return 0;
}

int cmd_fit(const RunConfig& c, Writer& out) {
  if (!c.fit_family) throw homctl::ConfigError("fit.family: required when the state is not gauss, rect or cat");
  hom::CountsRecord rec;
  if (c.input_csv) {
    std::ifstream f(*c.input_csv);
    if (!f) throw homctl::ConfigError("cannot open counts CSV '" + *c.input_csv + "'");
    try {
      rec = hom::read_counts_csv(f);
    } catch (const std::invalid_argument& e) {
      throw homctl::ConfigError(std::string("counts CSV: ") + e.what());
    }
  } else {
    rec = simulate(c);
  }
  hom::FitOptions opt;
  opt.mask = c.fit_mask;
  opt.initial = c.fit_initial;
  const hom::FractionData data = hom::FractionData::from_counts(rec);
  const hom::FitResult fit = hom::fit_hom(data, *c.fit_family, opt);
  if (fit.model_mismatch)
    std::cerr << "fit: chi2/dof = " << fit.chi2_per_dof << " indicates a model mismatch\n";
  for (const auto& b : fit.at_bounds) std::cerr << "fit: parameter '" << b << "' at its bound\n";
  json j = hom::to_json(fit);
  j["source"] = c.input_csv ? "csv" : "simulated";
  j["seed"] = rec.seed;
  const hom::AnalyticCut model(fit.descriptor());
  const auto vis = hom::VisibilityModel::from_value(fit.v_hat);
  std::vector<double> pm;
  for (double t : data.tau) pm.push_back(hom::coincidence_probability(model, vis, t - fit.tau0_hat));
  if (c.format == OutputFormat::csv) {
    out.file("fit_curve.csv", [&](std::ostream& os) {
      os << "tau_ps,fraction,model\n";
      for (std::size_t i = 0; i < data.tau.size(); ++i)
        os << hom::format_double(data.tau[i]) << ',' << hom::format_double(data.fraction[i]) << ','
           << hom::format_double(pm[i]) << '\n';
    });
  } else {
    j["curve"] = {{"tau_ps", data.tau}, {"fraction", data.fraction}, {"model", pm}};
  }
  out.json_file("fit.json", j);
  return 0;
}

int cmd_estimate(const RunConfig& c, Writer& out) {
  const auto& s = c.states.front();
  const hom::Probe p = probe_for(c, s);
  double tau_true;
  if (c.tau_true) {
    tau_true = *c.tau_true;
  } else {
    if (c.vis.v == 1.0)
      throw hom::NumericalError("estimate: tau_M is 0 at unit visibility, where the estimator has no monotone branch; "
                                "set simulation.tau_true");
    tau_true = hom::max_fisher(p.cut, c.vis, p.tau_max).tau_m;
  }
  const hom::EstimateReport rep = hom::mc_crb_study(p, c.vis, tau_true, c.trials, c.replicates, c.seed);
  if (rep.clipped > 0) std::cerr << "estimate: " << rep.clipped << " replicate(s) hit the search-interval boundary\n";
  json j = hom::to_json(rep);
  j["state"] = s.resolved;
  if (c.format == OutputFormat::csv) {
    j.erase("tau_hat_replicates");
    out.file("estimate_replicates.csv", [&](std::ostream& os) {
      os << "replicate,tau_hat_ps\n";
      for (std::size_t r = 0; r < rep.tau_hat.size(); ++r) os << r << ',' << hom::format_double(rep.tau_hat[r]) << '\n';
    });
  }
  out.json_file("estimate.json", j);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"HOM delay metrology: states, Fisher scans, ratio curves, simulation, fitting, CRB studies"};
  app.require_subcommand(1);
  std::string config_path, out_dir, format;
  std::uint64_t seed = 0;
  auto* o_config = app.add_option("--config", config_path, "JSON run configuration")->required();
  auto* o_out = app.add_option("--out", out_dir, "output directory (overrides output.dir)");
  auto* o_seed = app.add_option("--seed", seed, "RNG seed (overrides simulation.seed)");
  auto* o_fmt = app.add_option("--format", format, "csv or json (overrides output.format)")
                    ->check(CLI::IsMember({"csv", "json"}));
  (void)o_config;
  const std::vector<std::pair<std::string, std::string>> commands = {
      {"state", "tabulate a state and report its moments"},
      {"scan", "P_c and Fisher information versus delay per visibility"},
      {"ratio", "maximal Fisher information over QFI versus visibility"},
      {"simulate", "draw a coincidence-count record"},
      {"fit", "fit a HOM dip to simulated or ingested counts"},
      {"estimate", "Monte Carlo delay estimation against the Cramer-Rao bound"}};
  for (const auto& [name, help] : commands) app.add_subcommand(name, help)->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }
  const std::string cmd = app.get_subcommands().front()->get_name();

  try {
    homctl::Overrides ov;
    if (*o_out) ov.out_dir = out_dir;
    if (*o_seed) ov.seed = seed;
    if (*o_fmt) ov.format = format;
    const fs::path cfg_path(config_path);
    const json raw = homctl::load_json_file(cfg_path);
    const RunConfig cfg = homctl::resolve_config(raw, cfg_path.parent_path(), ov);
    Writer out(cfg.out_dir);
    json echo = cfg.resolved;
    echo["command"] = cmd;
    out.json_file("resolved_config.json", echo);
    if (cmd == "state") return cmd_state(cfg, out);
    if (cmd == "scan") return cmd_scan(cfg, out);
    if (cmd == "ratio") return cmd_ratio(cfg, out);
    if (cmd == "simulate") return cmd_simulate(cfg, out);
    if (cmd == "fit") return cmd_fit(cfg, out);
    return cmd_estimate(cfg, out);
  } catch (const std::invalid_argument& e) {
    std::cerr << "homctl " << cmd << ": configuration error: " << e.what() << '\n';
    return 2;
  } catch (const hom::NumericalError& e) {
    std::cerr << "homctl " << cmd << ": numerical failure: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "homctl " << cmd << ": " << e.what() << '\n';
    return 3;
  }
}
