#pragma once

// Visibility-degraded HOM coincidence model and the Fisher information it
// carries about the delay.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "hom/numerics.hpp"
#include "hom/spectra.hpp"
#include "hom/wigner.hpp"

namespace hom {

/// HOM visibility. When built from a polarization angle, v = v_max sin^2(theta).
struct VisibilityModel {
  double v = 1.0;
  std::optional<double> theta;
  std::optional<double> v_max;

  static VisibilityModel from_value(double v) {
    VisibilityModel m;
    m.v = v;
    m.validate();
    return m;
  }
  static VisibilityModel from_angle(double theta, double v_max = 1.0) {
    VisibilityModel m;
    const double s = std::sin(theta);
    m.v = v_max * s * s;
    m.theta = theta;
    m.v_max = v_max;
    m.validate();
    return m;
  }

  void validate() const {
    detail::require(v >= 0.0 && v <= 1.0, "visibility must lie in [0, 1]");
    if (v_max) detail::require(*v_max >= 0.0 && *v_max <= 1.0, "v_max must lie in [0, 1]");
    if (theta) {
      const double s = std::sin(*theta);
      detail::require(std::abs(v - v_max.value_or(1.0) * s * s) <= 1e-12,
                      "visibility inconsistent with theta and v_max");
    }
  }
};

template <CutFunction C>
double coincidence_probability(const C& cut, const VisibilityModel& vis, double tau) {
  return 0.5 - 0.5 * vis.v * cut(tau).w;
}

/// Throws std::out_of_range when tau falls outside the sampled grid.
inline double coincidence_probability(const WignerCut& cut, const VisibilityModel& vis, double tau) {
  return coincidence_probability(SampledCut(cut), vis, tau);
}

struct FisherValue {
  double fi = 0.0;  // ps^-2
  /// Set when |w| = 1 at unit visibility and the value is the limit of
  /// W'^2 / (1 - W^2), i.e. -W''/W, rather than a quotient.
  bool limit_branch = false;
};

namespace detail {

// Below this distance of |w| from 1 the unit-visibility quotient is replaced
// by its series limit.
inline constexpr double unit_visibility_series_threshold = 1e-8;

inline FisherValue fisher_from_point(const CutPoint& p, double v) {
  if (p.w1 == 0.0 && !(v == 1.0 && std::abs(p.w) >= 1.0 - unit_visibility_series_threshold))
    return {0.0, false};
  if (v == 1.0 && 1.0 - std::abs(p.w) < unit_visibility_series_threshold) {
    const double lim = -p.w2 / p.w;
    return {std::max(0.0, lim), true};
  }
  const double vw = v * p.w;
  return {v * v * p.w1 * p.w1 / ((1.0 - vw) * (1.0 + vw)), false};
}

// Sign of dF/dtau: dF/dtau is proportional to w1 [w2 (1 - v^2 w^2) + v^2 w w1^2].
inline double fisher_slope_sign(const CutPoint& p, double v) {
  const double g = p.w2 * (1.0 - v * v * p.w * p.w) + v * v * p.w * p.w1 * p.w1;
  return p.w1 * g;
}

}  // namespace detail

template <CutFunction C>
FisherValue fisher_information_detailed(const C& cut, const VisibilityModel& vis, double tau) {
  return detail::fisher_from_point(cut(tau), vis.v);
}

/// F(V, tau) = V^2 W'^2 / (1 - V^2 W^2).
template <CutFunction C>
double fisher_information(const C& cut, const VisibilityModel& vis, double tau) {
  return fisher_information_detailed(cut, vis, tau).fi;
}

inline double fisher_information(const WignerCut& cut, const VisibilityModel& vis, double tau) {
  return fisher_information(SampledCut(cut), vis, tau);
}

enum class QfiMode { correlated, separable };

/// Correlated (strict energy conservation): Var(w-). Separable: 2 Var(w-).
inline double qfi(const SpectralMoments& m, QfiMode mode = QfiMode::correlated) {
  detail::require(m.variance > 0.0, "qfi: variance must be positive");
  return mode == QfiMode::correlated ? m.variance : 2.0 * m.variance;
}

/// Curvature of the cut at zero delay, -W''(0)/W(0).
template <CutFunction C>
double qfi_from_cut(const C& cut) {
  const CutPoint p = cut(0.0);
  return -p.w2 / p.w;
}

struct FisherMax {
  double tau_m = 0.0;    // ps
  double f_tilde = 0.0;  // ps^-2
  bool limit_branch = false;
};

struct MaxFisherOptions {
  std::size_t scan_points = 2001;
  double rel_tol = 1e-8;
  double tau_min = 0.0;
};

/// Coarse delay table reused across visibilities.
struct CutTable {
  std::vector<double> tau;
  std::vector<CutPoint> points;
};

template <CutFunction C>
CutTable tabulate(const C& cut, double tau_min, double tau_max, std::size_t n) {
  detail::require(tau_max > tau_min, "scan range must be non-empty");
  detail::require(n >= 3, "scan needs at least three points");
  CutTable t;
  t.tau = detail::linspace(tau_min, tau_max, n);
  t.points.reserve(n);
  for (double x : t.tau) t.points.push_back(cut(x));
  return t;
}

/// Maximum of F(v, tau) over the table range: grid argmax (ties to smaller
/// tau), golden-section refinement on the bracketing cells, then bisection on
/// the sign of dF/dtau to pin the stationary point.
template <CutFunction C>
FisherMax max_fisher_on_table(const C& cut, const CutTable& table, double v, double rel_tol = 1e-8) {
  detail::require(v > 0.0 && v <= 1.0, "max_fisher: visibility must lie in (0, 1]");
  if (v == 1.0) {
    const CutPoint p0 = cut(0.0);
    if (std::abs(p0.w) >= 1.0 - 1e-12) {
      const auto fv = detail::fisher_from_point(p0, 1.0);
      return {0.0, fv.fi, true};
    }
  }
  const std::size_t n = table.tau.size();
  std::size_t best = n;
  double best_f = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double f = detail::fisher_from_point(table.points[i], v).fi;
    if (std::isfinite(f) && f > best_f) {
      best_f = f;
      best = i;
    }
  }
  if (best == n) throw NumericalError("max_fisher: Fisher information vanishes on the whole scan (degenerate cut)");
  if (best == n - 1)
    throw NumericalError("max_fisher: maximum at the end of the scan range; widen tau_max");

  const double lo = table.tau[best == 0 ? 0 : best - 1];
  const double hi = table.tau[best + 1];
  auto fi = [&](double t) { return detail::fisher_from_point(cut(t), v).fi; };
  const double scale = hi - lo;
  auto g = golden_section_maximize(fi, lo, hi, rel_tol, scale);
  double tau_m = g.x;

  // Polish on the slope sign. Golden section only resolves a flat maximum to
  // ~sqrt(eps), so the bracket widens until the slope changes sign.
  auto slope = [&](double t) { return detail::fisher_slope_sign(cut(t), v); };
  double delta = std::max(10.0 * rel_tol * std::max(std::abs(tau_m), scale), 1e-14);
  for (int k = 0; k < 12; ++k, delta *= 10.0) {
    const double a = std::max(lo, tau_m - delta), b = std::min(hi, tau_m + delta);
    if (slope(a) > 0.0 && slope(b) < 0.0) {
      const double root = bisect_root(slope, a, b);
      if (fi(root) >= g.fx * (1.0 - 1e-12)) tau_m = root;
      break;
    }
    if (a == lo && b == hi) break;
  }
  return {tau_m, fi(tau_m), false};
}

template <CutFunction C>
FisherMax max_fisher(const C& cut, const VisibilityModel& vis, double tau_max,
                     const MaxFisherOptions& opt = {}) {
  const CutTable table = tabulate(cut, opt.tau_min, tau_max, opt.scan_points);
  return max_fisher_on_table(cut, table, vis.v, opt.rel_tol);
}

/// Scan range covering the main lobe of the information for a state with
/// quantum Fisher information qfi and, for cat states, three beat periods.
inline double default_tau_max(double qfi, std::optional<double> cat_offset = std::nullopt) {
  detail::require(qfi > 0.0, "default_tau_max: qfi must be positive");
  double t = 6.0 / std::sqrt(qfi);
  if (cat_offset) t = std::max(t, 3.0 * 2.0 * std::numbers::pi / *cat_offset);
  return t;
}

struct StationarityReport {
  double tau_m = 0.0;
  double f_tilde = 0.0;
  CutPoint at_max;
  /// |F~ + W''/W| / F~ when W(tau_M) != 0.
  std::optional<double> residual;
  /// W(tau_M) = 0 with W'(tau_M) != 0: the maximum sits on a zero crossing.
  bool zero_crossing_certificate = false;
};

inline constexpr double zero_crossing_threshold = 1e-9;

/// Same check on a pre-tabulated scan, for sweeps over many visibilities.
template <CutFunction C>
StationarityReport stationarity_residual_on_table(const C& cut, const CutTable& table, const VisibilityModel& vis,
                                                  double rel_tol = 1e-8) {
  detail::require(vis.v < 1.0, "stationarity_residual: requires v < 1");
  const FisherMax m = max_fisher_on_table(cut, table, vis.v, rel_tol);
  StationarityReport r;
  r.tau_m = m.tau_m;
  r.f_tilde = m.f_tilde;
  r.at_max = cut(m.tau_m);
  if (std::abs(r.at_max.w) <= zero_crossing_threshold) {
    r.zero_crossing_certificate = r.at_max.w1 != 0.0;
  } else {
    r.residual = std::abs(m.f_tilde + r.at_max.w2 / r.at_max.w) / m.f_tilde;
  }
  return r;
}

template <CutFunction C>
StationarityReport stationarity_residual(const C& cut, const VisibilityModel& vis, double tau_max,
                                         const MaxFisherOptions& opt = {}) {
  return stationarity_residual_on_table(cut, tabulate(cut, opt.tau_min, tau_max, opt.scan_points), vis, opt.rel_tol);
}

/// A state prepared for delay metrology: its cut, QFI and scan range.
struct Probe {
  std::string label;
  std::function<CutPoint(double)> cut;
  double qfi = 0.0;
  double tau_max = 0.0;
  bool symmetric = true;
};

/// Builds a probe. Analytic kinds use closed forms unless numeric is requested;
/// sinc_pm and tabulated states always go through quadrature.
inline Probe make_probe(const StateDescriptor& d, CutSource path = CutSource::analytic,
                        std::size_t grid_points = 4096, double span_sigmas = 8.0,
                        std::string label = {}) {
  Probe p;
  p.label = label.empty() ? to_string(d.kind) : std::move(label);
  const bool closed = d.kind == StateKind::gauss || d.kind == StateKind::rect || d.kind == StateKind::cat;
  std::optional<double> cat_offset;
  if (d.kind == StateKind::cat) cat_offset = d.omega_prime;
  if (closed && path == CutSource::analytic) {
    p.cut = AnalyticCut(d);
    p.qfi = analytic_variance(d);
  } else {
    const SpectralAmplitude amp = make_state(d, grid_points, span_sigmas);
    const SpectralMoments m = moments(amp);
    p.qfi = qfi(m);
    p.cut = NumericCut(amp);
    p.symmetric = std::abs(p.cut(0.0).w - 1.0) <= 1e-9;
  }
  p.tau_max = default_tau_max(p.qfi, cat_offset);
  return p;
}

struct FisherScan {
  std::vector<double> tau;
  std::vector<double> f_values;
  double tau_m = 0.0;
  double f_tilde = 0.0;
  double qfi = 0.0;
  double ratio = 0.0;
};

/// F(v, tau) on a delay grid together with the located maximum over
/// [0, probe.tau_max].
inline FisherScan fisher_scan(const Probe& probe, const VisibilityModel& vis, const std::vector<double>& tau_grid,
                              const MaxFisherOptions& opt = {}) {
  FisherScan s;
  s.tau = tau_grid;
  s.f_values.reserve(tau_grid.size());
  for (double t : tau_grid) s.f_values.push_back(fisher_information(probe.cut, vis, t));
  const FisherMax m = max_fisher(probe.cut, vis, probe.tau_max, opt);
  s.tau_m = m.tau_m;
  s.f_tilde = m.f_tilde;
  s.qfi = probe.qfi;
  s.ratio = m.f_tilde / probe.qfi;
  return s;
}

struct RatioCurve {
  std::string state_label;
  std::vector<double> v;
  std::vector<double> ratio;
  std::vector<double> tau_m;
  std::vector<double> f_tilde;
  double qfi = 0.0;
  bool monotone = true;
  bool below_v2_bound = true;
  std::vector<std::string> diagnostics;
};

/// F~_V / QFI over a visibility grid. The coarse cut table is shared by all
/// visibilities.
inline RatioCurve ratio_curve(const Probe& probe, const std::vector<double>& v_grid,
                              const MaxFisherOptions& opt = {}) {
  RatioCurve rc;
  rc.state_label = probe.label;
  rc.qfi = probe.qfi;
  const CutTable table = tabulate(probe.cut, opt.tau_min, probe.tau_max, opt.scan_points);
  for (double v : v_grid) {
    detail::require(v > 0.0 && v <= 1.0, "ratio_curve: visibilities must lie in (0, 1]");
    const FisherMax m = max_fisher_on_table(probe.cut, table, v, opt.rel_tol);
    rc.v.push_back(v);
    rc.tau_m.push_back(m.tau_m);
    rc.f_tilde.push_back(m.f_tilde);
    rc.ratio.push_back(m.f_tilde / probe.qfi);
  }
  for (std::size_t i = 0; i < rc.v.size(); ++i) {
    if (rc.ratio[i] > rc.v[i] * rc.v[i] + 1e-9) {
      rc.below_v2_bound = false;
      rc.diagnostics.push_back("ratio exceeds V^2 at V=" + format_double(rc.v[i]));
    }
    if (i > 0 && rc.v[i] > rc.v[i - 1] && rc.ratio[i] < rc.ratio[i - 1]) {
      rc.monotone = false;
      rc.diagnostics.push_back("ratio decreases between V=" + format_double(rc.v[i - 1]) +
                               " and V=" + format_double(rc.v[i]));
    }
  }
  return rc;
}

// --- Schroedinger-cat closed forms ----------------------------------------

/// 1/2 (1 - V cos(2 w_o tau) e^{-tau^2 sigma^2}); valid for w_o >> sigma.
inline double cat_closed_form_pc(double omega_o, double sigma, double v, double tau) {
  return 0.5 * (1.0 - v * std::cos(2.0 * omega_o * tau) * std::exp(-tau * tau * sigma * sigma));
}

/// Whether the closed form's neglect of the Gaussian peaks is justified.
inline bool cat_closed_form_valid(double omega_o, double sigma) { return omega_o >= 5.0 * sigma; }

/// Fisher information of the closed-form profile, obtained from the
/// two-outcome formula.
inline double cat_closed_form_fi(double omega_o, double sigma, double v, double tau) {
  const double e = std::exp(-tau * tau * sigma * sigma);
  const double c = std::cos(2.0 * omega_o * tau), s = std::sin(2.0 * omega_o * tau);
  const double w = c * e;
  const double w1 = (-2.0 * omega_o * s - 2.0 * tau * sigma * sigma * c) * e;
  if (w1 == 0.0) return 0.0;
  const double vw = v * w;
  return v * v * w1 * w1 / ((1.0 - vw) * (1.0 + vw));
}

/// Envelope approximation 4 V^2 Var(w-) e^{-2 tau^2 sigma^2} with
/// Var(w-) = 4 w_o^2 + 2 sigma^2; drop_envelope gives the sigma -> infinity
/// constant-in-tau form.
inline double cat_fi_envelope_approx(double omega_o, double sigma, double v, double tau,
                                     bool drop_envelope = false) {
  const double var = 4.0 * omega_o * omega_o + 2.0 * sigma * sigma;
  const double env = drop_envelope ? 1.0 : std::exp(-2.0 * tau * tau * sigma * sigma);
  return 4.0 * v * v * var * env;
}

// --- time-resolved detection ------------------------------------------------

/// f(t-) sampled on a uniform time grid; zero outside. Six-point Lagrange
/// interpolation between samples.
class TemporalAmplitude {
 public:
  TemporalAmplitude(std::vector<double> t, std::vector<cplx> values)
      : t_(std::move(t)), f_(std::move(values)) {
    detail::require(t_.size() == f_.size() && t_.size() >= 6, "temporal amplitude needs >= 6 samples");
    h_ = detail::uniform_step(t_, 1e-9);
  }

  template <typename F>
  static TemporalAmplitude sample(F&& f, double t_min, double t_max, std::size_t n) {
    auto t = detail::linspace(t_min, t_max, n);
    std::vector<cplx> v(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = f(t[i]);
    return TemporalAmplitude(std::move(t), std::move(v));
  }

  double t_min() const { return t_.front(); }
  double t_max() const { return t_.back(); }

  cplx operator()(double t) const {
    if (t < t_.front() || t > t_.back()) return 0.0;
    const double x = (t - t_.front()) / h_;
    long long k = static_cast<long long>(std::floor(x));
    const long long n = static_cast<long long>(t_.size());
    if (static_cast<double>(k) == x) return f_[static_cast<std::size_t>(k)];
    long long start = std::clamp(k - 2, 0LL, n - 6);
    cplx acc = 0.0;
    for (long long i = start; i < start + 6; ++i) {
      double l = 1.0;
      for (long long j = start; j < start + 6; ++j)
        if (j != i) l *= (x - static_cast<double>(j)) / static_cast<double>(i - j);
      acc += l * f_[static_cast<std::size_t>(i)];
    }
    return acc;
  }

 private:
  std::vector<double> t_;
  std::vector<cplx> f_;
  double h_ = 0.0;
};

/// Unnormalized coincidence density split into its parts:
/// total = direct + interference, interference = -2 Re[f*(t-tau) f(-t-tau)] weighted.
struct TimeResolvedTerms {
  double direct = 0.0;
  double interference = 0.0;
  double total = 0.0;
};

struct TimeResolvedOptions {
  std::size_t quad_points = 4001;
  double window_sigmas = 12.0;
};

/// int dt e^{-(t+tbar)^2 / 2 D^2} |f(t - tau) - f(-t - tau)|^2, with the
/// D = 0 case evaluated pointwise as |f(-tbar - tau) - f(tbar - tau)|^2.
inline TimeResolvedTerms time_resolved_terms(const TemporalAmplitude& f, double detector_sigma, double tau_bar,
                                             double tau, const TimeResolvedOptions& opt = {}) {
  detail::require(detector_sigma >= 0.0, "detector resolution must be non-negative");
  TimeResolvedTerms r;
  if (detector_sigma == 0.0) {
    const cplx a = f(-tau_bar - tau), b = f(tau_bar - tau);
    r.direct = std::norm(a) + std::norm(b);
    r.interference = -2.0 * std::real(std::conj(a) * b);
    r.total = std::norm(a - b);
    return r;
  }
  // Integration window: Gaussian weight around -tbar, clipped to where
  // either shifted copy of f is non-zero.
  double lo = -tau_bar - opt.window_sigmas * detector_sigma;
  double hi = -tau_bar + opt.window_sigmas * detector_sigma;
  const double s_lo = std::min(f.t_min() + tau, -f.t_max() - tau);
  const double s_hi = std::max(f.t_max() + tau, -f.t_min() - tau);
  lo = std::max(lo, s_lo);
  hi = std::min(hi, s_hi);
  if (!(hi > lo)) return r;
  const auto t = detail::linspace(lo, hi, opt.quad_points);
  const double h = t[1] - t[0];
  const double inv = 1.0 / (2.0 * detector_sigma * detector_sigma);
  for (std::size_t i = 0; i < t.size(); ++i) {
    const double wq = (i == 0 || i + 1 == t.size()) ? 0.5 * h : h;
    const double g = std::exp(-(t[i] + tau_bar) * (t[i] + tau_bar) * inv) * wq;
    const cplx a = f(t[i] - tau), b = f(-t[i] - tau);
    r.direct += g * (std::norm(a) + std::norm(b));
    r.interference += -2.0 * g * std::real(std::conj(a) * b);
    r.total += g * std::norm(a - b);
  }
  return r;
}

inline double time_resolved_pc(const TemporalAmplitude& f, double detector_sigma, double tau_bar, double tau,
                               const TimeResolvedOptions& opt = {}) {
  return time_resolved_terms(f, detector_sigma, tau_bar, tau, opt).total;
}

/// Optional post-processing: divide densities sampled on a tau-bar grid by
/// their trapezoid integral over tau-bar.
inline std::vector<double> normalize_over_tau_bar(const std::vector<double>& tau_bar,
                                                  const std::vector<double>& density) {
  detail::require(tau_bar.size() == density.size() && tau_bar.size() >= 2, "size mismatch");
  double z = 0.0;
  for (std::size_t i = 1; i < tau_bar.size(); ++i)
    z += 0.5 * (density[i] + density[i - 1]) * (tau_bar[i] - tau_bar[i - 1]);
  if (!(z > 0.0)) throw NumericalError("normalize_over_tau_bar: zero total density");
  std::vector<double> out(density);
  for (auto& x : out) x /= z;
  return out;
}

/// Coincidence probability for an arbitrary JSA with polarization angle theta:
/// 1/2 (1 - Re[sin^2 theta  int e^{i w- tau} f(w1,w2) f*(w2,w1)]).
inline double general_pc_from_jsa(const Jsa2D& jsa, double theta, double tau) {
  const double s = std::sin(theta);
  return 0.5 * (1.0 - std::real(s * s * exchange_overlap(jsa, tau)));
}

// --- serialization ----------------------------------------------------------

inline void write_fisher_csv(std::ostream& os, const FisherScan& s) {
  os << "tau_ps,fi\n";
  for (std::size_t i = 0; i < s.tau.size(); ++i)
    os << format_double(s.tau[i]) << ',' << format_double(s.f_values[i]) << '\n';
}

inline void write_ratio_csv(std::ostream& os, const RatioCurve& rc) {
  os << "v,ratio\n";
  for (std::size_t i = 0; i < rc.v.size(); ++i)
    os << format_double(rc.v[i]) << ',' << format_double(rc.ratio[i]) << '\n';
}

}  // namespace hom
