#pragma once

// One-dimensional biphoton spectral amplitudes f(w-) over the frequency
// difference, their moments, and two-dimensional JSAs.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdio>
#include <fstream>
#include <initializer_list>
#include <mutex>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <fftw3.h>

#include "hom/numerics.hpp"

namespace hom {

enum class StateKind { gauss, rect, cat, sinc_pm, tabulated };

inline std::string to_string(StateKind k) {
  switch (k) {
    case StateKind::gauss: return "gauss";
    case StateKind::rect: return "rect";
    case StateKind::cat: return "cat";
    case StateKind::sinc_pm: return "sinc_pm";
    case StateKind::tabulated: return "tabulated";
  }
  return "unknown";
}

inline StateKind state_kind_from_string(const std::string& s) {
  if (s == "gauss") return StateKind::gauss;
  if (s == "rect") return StateKind::rect;
  if (s == "cat") return StateKind::cat;
  if (s == "sinc_pm") return StateKind::sinc_pm;
  if (s == "tabulated") return StateKind::tabulated;
  throw std::invalid_argument("unknown state kind '" + s + "'");
}

/// How samples on the frequency grid are turned into integrals.
///  - trapezoid: samples of a smooth function, trapezoid weights.
///  - cell: piecewise-constant amplitude, each sample owning [w - h/2, w + h/2].
///    Used for the block states so that integrals against e^{iwt} are exact.
enum class Quadrature { trapezoid, cell };

/// Parametric description of f(w-). Frequencies in rad/ps.
struct StateDescriptor {
  StateKind kind = StateKind::gauss;
  double sigma = 1.0;              // gauss: std of |f|^2
  double delta_omega = 1.0;        // rect: full width
  double omega_prime = 10.0;       // cat: block center offset
  double delta_omega_prime = 2.0;  // cat: block width
  double a = 3.5e-4;               // sinc_pm: ps^2
  double b = 0.0;                  // sinc_pm: ps
  double c = 0.0;                  // sinc_pm: dimensionless
  std::optional<double> symmetry_center;  // sinc_pm metadata, rad/ps
  std::vector<double> tab_omega;   // tabulated grid
  std::vector<cplx> tab_values;    // tabulated samples

  static StateDescriptor gauss_state(double sigma) {
    StateDescriptor d;
    d.kind = StateKind::gauss;
    d.sigma = sigma;
    return d;
  }
  static StateDescriptor rect_state(double width) {
    StateDescriptor d;
    d.kind = StateKind::rect;
    d.delta_omega = width;
    return d;
  }
  static StateDescriptor cat_state(double offset, double width) {
    StateDescriptor d;
    d.kind = StateKind::cat;
    d.omega_prime = offset;
    d.delta_omega_prime = width;
    return d;
  }
  static StateDescriptor sinc_state(double a, double b, double c) {
    StateDescriptor d;
    d.kind = StateKind::sinc_pm;
    d.a = a;
    d.b = b;
    d.c = c;
    if (a != 0.0) d.symmetry_center = -b / (2.0 * a);
    return d;
  }
  static StateDescriptor tabulated_state(std::vector<double> omega, std::vector<cplx> values) {
    StateDescriptor d;
    d.kind = StateKind::tabulated;
    d.tab_omega = std::move(omega);
    d.tab_values = std::move(values);
    return d;
  }
};

namespace detail {

inline double uniform_step(const std::vector<double>& grid, double rel_tol) {
  require(grid.size() >= 2, "grid needs at least two points");
  const double step = (grid.back() - grid.front()) / static_cast<double>(grid.size() - 1);
  require(step > 0.0, "grid must be strictly increasing");
  for (std::size_t i = 1; i < grid.size(); ++i) {
    const double d = grid[i] - grid[i - 1];
    require(d > 0.0, "grid must be strictly increasing");
    require(std::abs(d - step) <= rel_tol * step, "grid spacing is not uniform");
  }
  return step;
}

}  // namespace detail

/// Throws std::invalid_argument when the descriptor violates its invariants.
inline void validate(const StateDescriptor& d) {
  using detail::require;
  switch (d.kind) {
    case StateKind::gauss:
      require(d.sigma > 0.0 && std::isfinite(d.sigma), "gauss: sigma must be positive");
      break;
    case StateKind::rect:
      require(d.delta_omega > 0.0 && std::isfinite(d.delta_omega),
              "rect: delta_omega must be positive");
      break;
    case StateKind::cat:
      require(d.delta_omega_prime > 0.0 && std::isfinite(d.delta_omega_prime),
              "cat: delta_omega_prime must be positive");
      require(d.omega_prime > 0.5 * d.delta_omega_prime,
              "cat: blocks overlap (need omega_prime > delta_omega_prime / 2)");
      break;
    case StateKind::sinc_pm:
      require(std::isfinite(d.a) && std::isfinite(d.b) && std::isfinite(d.c),
              "sinc_pm: coefficients must be finite");
      require(d.a != 0.0, "sinc_pm: quadratic coefficient a must be non-zero");
      break;
    case StateKind::tabulated:
      require(d.tab_omega.size() == d.tab_values.size(), "tabulated: grid/value size mismatch");
      detail::uniform_step(d.tab_omega, 1e-6);
      break;
  }
}

/// Normalized amplitude samples on a uniform grid.
class SpectralAmplitude {
 public:
  static constexpr double default_norm_tolerance = 1e-10;

  SpectralAmplitude() = default;

  /// Takes ownership of samples and normalizes them.
  SpectralAmplitude(std::vector<double> omega, std::vector<cplx> values, Quadrature rule,
                    double norm_tolerance = default_norm_tolerance)
      : omega_(std::move(omega)), values_(std::move(values)), rule_(rule),
        norm_tolerance_(norm_tolerance) {
    detail::require(omega_.size() == values_.size(), "amplitude: grid/value size mismatch");
    step_ = detail::uniform_step(omega_, 1e-6);
    normalize_in_place();
  }

  const std::vector<double>& omega() const { return omega_; }
  const std::vector<cplx>& values() const { return values_; }
  double step() const { return step_; }
  Quadrature rule() const { return rule_; }
  double norm_tolerance() const { return norm_tolerance_; }
  std::size_t size() const { return omega_.size(); }

  /// Cell rule only: the part [lo, hi] of each cell where the amplitude is
  /// non-zero, for piecewise-constant states whose edges fall inside a cell.
  /// Samples without an entry cover their whole cell.
  void set_cell_supports(std::vector<std::pair<double, double>> supports) {
    detail::require(rule_ == Quadrature::cell, "cell supports need the cell rule");
    detail::require(supports.size() == omega_.size(), "cell supports: size mismatch");
    for (std::size_t i = 0; i < supports.size(); ++i) {
      const auto [lo, hi] = supports[i];
      detail::require(lo <= hi && lo >= omega_[i] - 0.5 * step_ * (1.0 + 1e-9) &&
                          hi <= omega_[i] + 0.5 * step_ * (1.0 + 1e-9),
                      "cell support must lie inside its cell");
    }
    supports_ = std::move(supports);
  }
  bool has_cell_supports() const { return !supports_.empty(); }
  std::pair<double, double> cell_support(std::size_t i) const {
    if (supports_.empty()) return {omega_[i] - 0.5 * step_, omega_[i] + 0.5 * step_};
    return supports_[i];
  }

  /// Quadrature weight of sample i.
  double weight(std::size_t i) const {
    if (rule_ == Quadrature::trapezoid && (i == 0 || i + 1 == omega_.size())) return 0.5 * step_;
    return step_;
  }

  /// Sum |f|^2 times the quadrature weights.
  double norm() const {
    double acc = 0.0;
    for (std::size_t i = 0; i < values_.size(); ++i) acc += std::norm(values_[i]) * weight(i);
    return acc;
  }

  bool is_normalized() const { return std::abs(norm() - 1.0) <= norm_tolerance_; }

  /// Returns a normalized copy; already-normalized amplitudes come back bit-identical.
  SpectralAmplitude normalized() const {
    SpectralAmplitude out = *this;
    out.normalize_in_place();
    return out;
  }

  /// True when the grid is its own mirror image about zero.
  bool symmetric_grid(double rel_tol = 1e-9) const {
    const std::size_t n = omega_.size();
    for (std::size_t i = 0; i < n / 2 + 1; ++i) {
      if (std::abs(omega_[i] + omega_[n - 1 - i]) > rel_tol * step_) return false;
    }
    return true;
  }

 private:
  void normalize_in_place() {
    const double n = norm();
    if (!(n > 0.0) || !std::isfinite(n)) throw NumericalError("amplitude has zero or non-finite norm");
    if (std::abs(n - 1.0) <= 1e-14) return;
    const double s = 1.0 / std::sqrt(n);
    for (auto& v : values_) v *= s;
  }

  std::vector<double> omega_;
  std::vector<cplx> values_;
  std::vector<std::pair<double, double>> supports_;
  Quadrature rule_ = Quadrature::trapezoid;
  double step_ = 0.0;
  double norm_tolerance_ = default_norm_tolerance;
};

struct SpectralMoments {
  double mean = 0.0;               // rad/ps
  double variance = 0.0;           // rad^2/ps^2
  double temporal_variance = 0.0;  // ps^2
  double phase_space_area = 0.0;   // dimensionless
};

namespace detail {

inline std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

// Variance of |F(t)|^2 with F the Fourier transform of f, evaluated on the
// DFT time grid of the zero-padded amplitude.
inline double temporal_variance(const SpectralAmplitude& amp, int pad_factor) {
  const std::size_t n = amp.size();
  const std::size_t m = n * static_cast<std::size_t>(pad_factor);
  fftw_complex* buf = fftw_alloc_complex(m);
  if (buf == nullptr) throw std::bad_alloc();
  fftw_plan plan;
  {
    std::lock_guard<std::mutex> lock(fftw_planner_mutex());
    plan = fftw_plan_dft_1d(static_cast<int>(m), buf, buf, FFTW_FORWARD, FFTW_ESTIMATE);
  }
  for (std::size_t i = 0; i < m; ++i) {
    if (i < n) {
      buf[i][0] = amp.values()[i].real() * std::sqrt(amp.weight(i) / amp.step());
      buf[i][1] = amp.values()[i].imag() * std::sqrt(amp.weight(i) / amp.step());
    } else {
      buf[i][0] = 0.0;
      buf[i][1] = 0.0;
    }
  }
  fftw_execute(plan);
  const double dt = 2.0 * std::numbers::pi / (static_cast<double>(m) * amp.step());
  double s0 = 0.0, s1 = 0.0, s2 = 0.0;
  for (std::size_t j = 0; j < m; ++j) {
    // FFTW_FORWARD is e^{-i 2 pi jk/m}; bin j maps to t = j dt, folded to [-T/2, T/2).
    const long long jj = (j < m / 2) ? static_cast<long long>(j)
                                     : static_cast<long long>(j) - static_cast<long long>(m);
    const double t = static_cast<double>(jj) * dt;
    const double p = buf[j][0] * buf[j][0] + buf[j][1] * buf[j][1];
    s0 += p;
    s1 += p * t;
    s2 += p * t * t;
  }
  {
    std::lock_guard<std::mutex> lock(fftw_planner_mutex());
    fftw_destroy_plan(plan);
  }
  fftw_free(buf);
  const double mean = s1 / s0;
  return s2 / s0 - mean * mean;
}

}  // namespace detail

/// Mean and variance of |f|^2, temporal variance of |F(t)|^2 and their product.
inline SpectralMoments moments(const SpectralAmplitude& amp, int pad_factor = 4) {
  if (!amp.is_normalized()) throw std::invalid_argument("moments: amplitude is not normalized");
  const auto& w = amp.omega();
  const auto& f = amp.values();
  const double h = amp.step();
  double m0 = 0.0, m1 = 0.0, m2 = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) {
    const double p = std::norm(f[i]) * amp.weight(i);
    double c = w[i], extra = 0.0;
    if (amp.rule() == Quadrature::cell) {
      // A constant over [lo, hi] has mean (lo+hi)/2 and spread (hi-lo)^2/12.
      const auto [lo, hi] = amp.cell_support(i);
      c = 0.5 * (lo + hi);
      extra = (hi - lo) * (hi - lo) / 12.0;
    }
    m0 += p;
    m1 += p * c;
    m2 += p * (c * c + extra);
  }
  SpectralMoments out;
  out.mean = m1 / m0;
  out.variance = m2 / m0 - out.mean * out.mean;
  out.temporal_variance = detail::temporal_variance(amp, pad_factor);
  out.phase_space_area = out.variance * out.temporal_variance;
  return out;
}

/// Closed-form |f|^2 variance for the analytic kinds.
inline double analytic_variance(const StateDescriptor& d) {
  validate(d);
  switch (d.kind) {
    case StateKind::gauss: return d.sigma * d.sigma;
    case StateKind::rect: return d.delta_omega * d.delta_omega / 12.0;
    case StateKind::cat:
      return d.omega_prime * d.omega_prime + d.delta_omega_prime * d.delta_omega_prime / 12.0;
    default: break;
  }
  throw std::invalid_argument("analytic_variance: no closed form for " + to_string(d.kind));
}

namespace detail {

// Symmetric grid of n points with step h: w_i = (i - (n-1)/2) h.
// (i - c) and (n-1-i - c) are exact negatives, so the grid mirrors bitwise.
inline std::vector<double> symmetric_grid(std::size_t n, double h) {
  std::vector<double> g(n);
  const double c = 0.5 * static_cast<double>(n - 1);
  for (std::size_t i = 0; i < n; ++i) g[i] = (static_cast<double>(i) - c) * h;
  return g;
}

// Fraction of the cell [w - h/2, w + h/2] inside [lo, hi].
inline double coverage(double w, double h, double lo, double hi) {
  const double a = std::max(w - 0.5 * h, lo);
  const double b = std::min(w + 0.5 * h, hi);
  return std::clamp((b - a) / h, 0.0, 1.0);
}

// Part of the cell [w - h/2, w + h/2] covered by the given disjoint blocks.
inline std::pair<double, double> cell_support(double w, double h,
                                              std::initializer_list<std::pair<double, double>> blocks) {
  std::pair<double, double> out{w, w};
  int hits = 0;
  for (const auto& [lo, hi] : blocks) {
    const double a = std::max(w - 0.5 * h, lo), b = std::min(w + 0.5 * h, hi);
    if (b > a) {
      out = {a, b};
      ++hits;
    }
  }
  require(hits <= 1, "make_state: grid cell wider than the gap between blocks");
  return out;
}

// Largest cell width >= h_min that puts both block edges on cell boundaries,
// searching over the number of cells per block. Falls back to the best
// near-alignment when no exact one exists.
inline double aligned_cat_step(double inner_edge, double width, double h_min, bool even_n) {
  const int n_max = static_cast<int>(std::floor(width / h_min));
  require(n_max >= 4, "grid too small to resolve the cat blocks");
  double best_h = width / n_max;
  double best_err = 1.0;
  for (int n = n_max; n >= std::max(4, n_max / 2); --n) {
    const double h = width / n;
    // Boundaries sit at integer multiples of h for even point counts and at
    // half-integers for odd ones.
    const double pos = inner_edge / h + (even_n ? 0.0 : 0.5);
    const double err = std::abs(pos - std::round(pos));
    if (err < best_err - 1e-12) {
      best_err = err;
      best_h = h;
      if (err < 1e-9) break;
    }
  }
  return best_h;
}

inline SpectralAmplitude tabulate_sinc(const StateDescriptor& d, std::size_t n, double span_sigmas) {
  auto sample = [&](double half_width) {
    const double h = 2.0 * half_width / static_cast<double>(n - 1);
    auto grid = symmetric_grid(n, h);
    std::vector<cplx> vals(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double w = grid[i];
      vals[i] = sinc(d.a * w * w + d.b * w + d.c);
    }
    return SpectralAmplitude(std::move(grid), std::move(vals), Quadrature::trapezoid);
  };
  // Initial guess from the quadratic term, then iterate the span against the
  // measured spread (the sinc^2 tails make the variance span-dependent).
  const double center = std::abs(d.b / (2.0 * d.a));
  double half = center + 40.0 / std::sqrt(std::abs(d.a));
  SpectralAmplitude amp = sample(half);
  for (int it = 0; it < 8; ++it) {
    const auto& w = amp.omega();
    double m0 = 0.0, m1 = 0.0, m2 = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) {
      const double p = std::norm(amp.values()[i]) * amp.weight(i);
      m0 += p;
      m1 += p * w[i];
      m2 += p * w[i] * w[i];
    }
    const double mean = m1 / m0;
    const double sd = std::sqrt(m2 / m0 - mean * mean);
    const double want = std::abs(mean) + span_sigmas * sd;
    if (std::abs(want - half) <= 1e-3 * half) break;
    half = want;
    amp = sample(half);
  }
  return amp;
}

}  // namespace detail

/// Tabulates a descriptor on a uniform grid symmetric about zero.
/// The grid half-width covers span_sigmas standard deviations of |f|^2.
inline SpectralAmplitude make_state(const StateDescriptor& d, std::size_t grid_points = 4096,
                                    double span_sigmas = 8.0) {
  using detail::require;
  validate(d);
  require(span_sigmas > 0.0, "make_state: span_sigmas must be positive");
  const std::size_t n = grid_points;
  const bool even_n = n % 2 == 0;
  switch (d.kind) {
    case StateKind::gauss: {
      require(n >= 512, "make_state: grid_points must be >= 512");
      const double half = span_sigmas * d.sigma;
      const double h = 2.0 * half / static_cast<double>(n - 1);
      auto grid = detail::symmetric_grid(n, h);
      std::vector<cplx> vals(n);
      for (std::size_t i = 0; i < n; ++i)
        vals[i] = std::exp(-grid[i] * grid[i] / (4.0 * d.sigma * d.sigma));
      return SpectralAmplitude(std::move(grid), std::move(vals), Quadrature::trapezoid);
    }
    case StateKind::rect: {
      require(n >= 512, "make_state: grid_points must be >= 512");
      const double sd = d.delta_omega / std::sqrt(12.0);
      const double h_min = 2.0 * span_sigmas * sd / static_cast<double>(n);
      // Edge at +-width/2 on a cell boundary.
      const double half_w = 0.5 * d.delta_omega;
      double h;
      if (even_n) {
        const double m = std::floor(half_w / h_min);
        require(m >= 2.0, "make_state: grid too small to hold the rect support");
        h = half_w / m;
      } else {
        const double m = std::floor(half_w / h_min - 0.5);
        require(m >= 2.0, "make_state: grid too small to hold the rect support");
        h = half_w / (m + 0.5);
      }
      auto grid = detail::symmetric_grid(n, h);
      std::vector<cplx> vals(n);
      std::vector<std::pair<double, double>> sup(n);
      for (std::size_t i = 0; i < n; ++i) {
        vals[i] = std::sqrt(detail::coverage(grid[i], h, -half_w, half_w));
        sup[i] = detail::cell_support(grid[i], h, {{-half_w, half_w}});
      }
      SpectralAmplitude amp(std::move(grid), std::move(vals), Quadrature::cell);
      amp.set_cell_supports(std::move(sup));
      return amp;
    }
    case StateKind::cat: {
      require(n >= 512, "make_state: grid_points must be >= 512");
      const double sd = std::sqrt(analytic_variance(d));
      const double h_min = 2.0 * span_sigmas * sd / static_cast<double>(n);
      const double lo = d.omega_prime - 0.5 * d.delta_omega_prime;
      const double hi = d.omega_prime + 0.5 * d.delta_omega_prime;
      const double h = detail::aligned_cat_step(lo, d.delta_omega_prime, h_min, even_n);
      auto grid = detail::symmetric_grid(n, h);
      require(grid.back() >= hi, "make_state: grid too small to hold the cat blocks");
      std::vector<cplx> vals(n);
      std::vector<std::pair<double, double>> sup(n);
      for (std::size_t i = 0; i < n; ++i) {
        const double cov = detail::coverage(grid[i], h, lo, hi) + detail::coverage(grid[i], h, -hi, -lo);
        vals[i] = std::sqrt(cov);
        sup[i] = detail::cell_support(grid[i], h, {{-hi, -lo}, {lo, hi}});
      }
      SpectralAmplitude amp(std::move(grid), std::move(vals), Quadrature::cell);
      amp.set_cell_supports(std::move(sup));
      return amp;
    }
    case StateKind::sinc_pm:
      require(n >= 512, "make_state: grid_points must be >= 512");
      return detail::tabulate_sinc(d, n, span_sigmas);
    case StateKind::tabulated:
      return SpectralAmplitude(d.tab_omega, d.tab_values, Quadrature::trapezoid);
  }
  throw std::invalid_argument("make_state: unknown kind");
}

/// Post-construction check that the grid holds at least span_sigmas standard
/// deviations of |f|^2 on each side of the mean.
inline bool covers_support(const SpectralAmplitude& amp, double span_sigmas = 8.0) {
  const auto& w = amp.omega();
  double m0 = 0.0, m1 = 0.0, m2 = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    const double p = std::norm(amp.values()[i]) * amp.weight(i);
    m0 += p;
    m1 += p * w[i];
    m2 += p * w[i] * w[i];
  }
  const double mean = m1 / m0;
  const double sd = std::sqrt(m2 / m0 - mean * mean);
  const double edge_pad = amp.rule() == Quadrature::cell ? 0.5 * amp.step() : 0.0;
  return w.front() - edge_pad <= mean - span_sigmas * sd * (1.0 - 1e-9) &&
         w.back() + edge_pad >= mean + span_sigmas * sd * (1.0 - 1e-9);
}

// --- wavelength bookkeeping -------------------------------------------------

/// 2 pi c (1/lambda - 1/lambda_ref) in rad/ps, wavelengths in nm.
inline double wavelength_to_detuning(double lambda_nm, double lambda_ref_nm) {
  detail::require(lambda_nm > 0.0 && lambda_ref_nm > 0.0, "wavelengths must be positive");
  return 2.0 * std::numbers::pi * units::c_nm_per_ps * (1.0 / lambda_nm - 1.0 / lambda_ref_nm);
}

/// Angular-frequency width of a filter of width_nm centred at center_nm.
inline double filter_width_to_omega(double width_nm, double center_nm) {
  detail::require(width_nm > 0.0 && center_nm > 0.0, "filter width and center must be positive");
  return 2.0 * std::numbers::pi * units::c_nm_per_ps * width_nm / (center_nm * center_nm);
}

/// Two energy-matched channels of equal width. The blocks sit at the
/// frequency difference of the channel centres; their widths add.
inline StateDescriptor cat_from_channels(double lambda_a_nm, double lambda_b_nm, double width_nm,
                                         double lambda_deg_nm) {
  const double offset =
      std::abs(wavelength_to_detuning(lambda_a_nm, lambda_deg_nm) -
               wavelength_to_detuning(lambda_b_nm, lambda_deg_nm));
  const double width =
      filter_width_to_omega(width_nm, lambda_a_nm) + filter_width_to_omega(width_nm, lambda_b_nm);
  auto d = StateDescriptor::cat_state(offset, width);
  validate(d);
  return d;
}

/// Rectangular filter of width_nm at center_nm.
inline StateDescriptor rect_from_filter(double width_nm, double center_nm) {
  return StateDescriptor::rect_state(filter_width_to_omega(width_nm, center_nm));
}

/// Gaussian filter with intensity FWHM width_nm at center_nm.
inline StateDescriptor gauss_from_filter(double fwhm_nm, double center_nm) {
  const double fwhm = filter_width_to_omega(fwhm_nm, center_nm);
  return StateDescriptor::gauss_state(fwhm / (2.0 * std::sqrt(2.0 * std::log(2.0))));
}

/// Phase-matching sinc from waveguide optics.
/// L in mm, chrom_disp = dn/dw in ps, omega_plus in rad/ps.
inline StateDescriptor sinc_pm_from_optics(double length_mm, double dn_modal, double dn_biref,
                                           double chrom_disp, double omega_plus) {
  detail::require(length_mm > 0.0, "sinc_pm_from_optics: length must be positive");
  detail::require(chrom_disp != 0.0,
                  "sinc_pm_from_optics: zero chromatic dispersion leaves the symmetry center undefined");
  const double t = length_mm / units::c_mm_per_ps;  // ps
  StateDescriptor d;
  d.kind = StateKind::sinc_pm;
  d.a = -0.5 * t * chrom_disp;
  d.b = -0.5 * t * dn_biref;
  d.c = t * omega_plus * dn_modal;
  d.symmetry_center = -dn_biref / (2.0 * chrom_disp);
  return d;
}

// --- two-dimensional JSA ---------------------------------------------------

/// f(w1, w2) on a product of two uniform grids, row index on grid1.
class Jsa2D {
 public:
  Jsa2D(std::vector<double> grid1, std::vector<double> grid2, std::vector<cplx> values)
      : g1_(std::move(grid1)), g2_(std::move(grid2)), v_(std::move(values)) {
    detail::require(v_.size() == g1_.size() * g2_.size(), "Jsa2D: value count mismatch");
    h1_ = detail::uniform_step(g1_, 1e-6);
    h2_ = detail::uniform_step(g2_, 1e-6);
    double n = 0.0;
    for (std::size_t i = 0; i < g1_.size(); ++i)
      for (std::size_t j = 0; j < g2_.size(); ++j) n += std::norm(at(i, j)) * weight(i, j);
    if (!(n > 0.0)) throw NumericalError("Jsa2D: zero norm");
    const double s = 1.0 / std::sqrt(n);
    if (std::abs(n - 1.0) > 1e-14)
      for (auto& x : v_) x *= s;
  }

  /// Samples a callable f(w1, w2) on grid x grid.
  template <typename F>
  static Jsa2D from_function(const std::vector<double>& grid, F&& f) {
    std::vector<cplx> v(grid.size() * grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i)
      for (std::size_t j = 0; j < grid.size(); ++j) v[i * grid.size() + j] = f(grid[i], grid[j]);
    return Jsa2D(grid, grid, std::move(v));
  }

  const std::vector<double>& grid1() const { return g1_; }
  const std::vector<double>& grid2() const { return g2_; }
  const cplx& at(std::size_t i, std::size_t j) const { return v_[i * g2_.size() + j]; }
  double weight(std::size_t i, std::size_t j) const {
    auto w = [](std::size_t k, std::size_t n, double h) { return (k == 0 || k + 1 == n) ? 0.5 * h : h; };
    return w(i, g1_.size(), h1_) * w(j, g2_.size(), h2_);
  }
  bool square() const {
    if (g1_.size() != g2_.size()) return false;
    for (std::size_t i = 0; i < g1_.size(); ++i)
      if (std::abs(g1_[i] - g2_[i]) > 1e-9 * h1_) return false;
    return true;
  }

 private:
  std::vector<double> g1_, g2_;
  std::vector<cplx> v_;
  double h1_ = 0.0, h2_ = 0.0;
};

/// Double integral of e^{i(w1-w2)tau} f(w1,w2) f*(w2,w1). At tau = 0 this is
/// the exchange overlap that caps the visibility.
inline cplx exchange_overlap(const Jsa2D& jsa, double tau = 0.0) {
  detail::require(jsa.square(), "exchange_overlap: JSA grid is not square");
  const auto& g = jsa.grid1();
  const std::size_t n = g.size();
  cplx acc = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      const cplx term = jsa.at(i, j) * std::conj(jsa.at(j, i)) * jsa.weight(i, j);
      acc += tau == 0.0 ? term : term * std::polar(1.0, (g[i] - g[j]) * tau);
    }
  return acc;
}

// --- CSV ------------------------------------------------------------------

/// Shortest round-trip form; negative zero prints as 0.
inline std::string format_double(double x) {
  if (x == 0.0) x = 0.0;
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

inline void write_amplitude_csv(std::ostream& os, const SpectralAmplitude& amp) {
  os << "omega_rad_per_ps,re,im\n";
  for (std::size_t i = 0; i < amp.size(); ++i)
    os << format_double(amp.omega()[i]) << ',' << format_double(amp.values()[i].real()) << ','
       << format_double(amp.values()[i].imag()) << '\n';
}

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) {
    while (!cell.empty() && (cell.back() == '\r' || cell.back() == ' ')) cell.pop_back();
    while (!cell.empty() && cell.front() == ' ') cell.erase(cell.begin());
    out.push_back(cell);
  }
  return out;
}

inline double parse_double(const std::string& s) {
  std::size_t pos = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &pos);
  } catch (const std::exception&) {
    throw std::invalid_argument("not a number: '" + s + "'");
  }
  if (pos != s.size()) throw std::invalid_argument("not a number: '" + s + "'");
  return v;
}

}  // namespace detail

/// Reads a tabulated state from `omega_rad_per_ps,re,im` CSV. The grid must be
/// uniform to 1e-6 relative spacing.
inline StateDescriptor read_amplitude_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw std::invalid_argument("amplitude CSV is empty");
  const auto header = detail::split_csv_line(line);
  if (header != std::vector<std::string>{"omega_rad_per_ps", "re", "im"})
    throw std::invalid_argument("amplitude CSV header must be omega_rad_per_ps,re,im");
  std::vector<double> omega;
  std::vector<cplx> vals;
  while (std::getline(is, line)) {
    if (line.empty() || line == "\r") continue;
    const auto cells = detail::split_csv_line(line);
    if (cells.size() != 3) throw std::invalid_argument("amplitude CSV row needs 3 columns: " + line);
    omega.push_back(detail::parse_double(cells[0]));
    vals.emplace_back(detail::parse_double(cells[1]), detail::parse_double(cells[2]));
  }
  auto d = StateDescriptor::tabulated_state(std::move(omega), std::move(vals));
  validate(d);
  return d;
}

inline StateDescriptor read_amplitude_csv(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::invalid_argument("cannot open amplitude CSV '" + path + "'");
  return read_amplitude_csv(f);
}

}  // namespace hom
