#pragma once

// JSON views of the result types. Needs nlohmann/json on the include path.

#include <nlohmann/json.hpp>

#include "hom/estimation.hpp"
#include "hom/metrology.hpp"
#include "hom/spectra.hpp"

namespace hom {

using json = nlohmann::json;

inline json to_json(const StateDescriptor& d) {
  json j;
  j["kind"] = to_string(d.kind);
  switch (d.kind) {
    case StateKind::gauss: j["sigma"] = d.sigma; break;
    case StateKind::rect: j["delta_omega"] = d.delta_omega; break;
    case StateKind::cat:
      j["omega_prime"] = d.omega_prime;
      j["delta_omega_prime"] = d.delta_omega_prime;
      break;
    case StateKind::sinc_pm:
      j["a"] = d.a;
      j["b"] = d.b;
      j["c"] = d.c;
      j["symmetry_center"] = d.symmetry_center ? json(*d.symmetry_center) : json(nullptr);
      break;
    case StateKind::tabulated: j["grid_points"] = d.tab_omega.size(); break;
  }
  return j;
}

inline json to_json(const SpectralMoments& m) {
  return {{"mean", m.mean},
          {"variance", m.variance},
          {"temporal_variance", m.temporal_variance},
          {"phase_space_area", m.phase_space_area}};
}

inline json to_json(const StationarityReport& r) {
  json j;
  j["tau_m"] = r.tau_m;
  j["f_tilde"] = r.f_tilde;
  j["w"] = r.at_max.w;
  j["w1"] = r.at_max.w1;
  j["w2"] = r.at_max.w2;
  j["residual"] = r.residual ? json(*r.residual) : json(nullptr);
  j["zero_crossing_certificate"] = r.zero_crossing_certificate;
  return j;
}

inline json to_json(const RatioCurve& rc) {
  return {{"state", rc.state_label}, {"qfi", rc.qfi},        {"v", rc.v},
          {"ratio", rc.ratio},       {"tau_m", rc.tau_m},    {"f_tilde", rc.f_tilde},
          {"monotone", rc.monotone}, {"below_v2_bound", rc.below_v2_bound},
          {"diagnostics", rc.diagnostics}};
}

inline json to_json(const CountsRecord& r) {
  return {{"tau_ps", r.tau},   {"trials", r.trials}, {"coincidences", r.coincidences},
          {"seed", r.seed},    {"mode", to_string(r.mode)}};
}

inline json to_json(const FitResult& f) {
  json j;
  j["family"] = to_string(f.family);
  j["v_hat"] = f.v_hat;
  json params = json::object();
  for (std::size_t k = 0; k < f.names.size(); ++k) params[f.names[k]] = f.values[k];
  j["params"] = params;
  j["free"] = f.free_names;
  json cov = json::array();
  for (Eigen::Index r = 0; r < f.covariance.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < f.covariance.cols(); ++c) row.push_back(f.covariance(r, c));
    cov.push_back(row);
  }
  j["covariance"] = cov;
  json se = json::object();
  for (std::size_t k = 0; k < f.free_names.size(); ++k) {
    const auto kk = static_cast<Eigen::Index>(k);
    se[f.free_names[k]] = std::sqrt(std::max(0.0, f.covariance(kk, kk)));
  }
  j["std_error"] = se;
  j["chi2"] = f.chi2;
  j["chi2_per_dof"] = f.chi2_per_dof;
  j["dof"] = f.dof;
  j["iterations"] = f.iterations;
  j["model_mismatch"] = f.model_mismatch;
  j["at_bounds"] = f.at_bounds;
  return j;
}

inline json to_json(const EstimateReport& r) {
  return {{"tau_true", r.tau_true},
          {"v", r.v},
          {"trials", r.trials},
          {"replicates", r.replicates},
          {"seed", r.seed},
          {"tau_hat", r.tau_hat_mean},
          {"bias", r.bias},
          {"empirical_std", r.empirical_std},
          {"crb", r.crb},
          {"quantum_crb", r.quantum_crb},
          {"fisher", r.fisher},
          {"ratio_to_crb", r.ratio_to_crb},
          {"search_interval", {r.search_lo, r.search_hi}},
          {"clipped", r.clipped},
          {"tau_hat_replicates", r.tau_hat}};
}

}  // namespace hom
