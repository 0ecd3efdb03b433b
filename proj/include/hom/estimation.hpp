#pragma once

// Simulated coincidence records, HOM-dip fitting and delay estimation
// against the Cramer-Rao bound.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <istream>
#include <limits>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "hom/metrology.hpp"
#include "hom/numerics.hpp"
#include "hom/spectra.hpp"
#include "hom/wigner.hpp"

namespace hom {

/// Philox4x32-10 counter-based generator. The stream is a pure function of
/// (seed, stream id, position), so replicates can be generated in any order.
class Philox4x32 {
 public:
  using result_type = std::uint32_t;
  using Block = std::array<std::uint32_t, 4>;

  Philox4x32(std::uint64_t seed, std::uint64_t stream)
      : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
        stream_(stream) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  /// One Philox block for an explicit 128-bit counter.
  static Block bijection(Block ctr, std::array<std::uint32_t, 2> key) {
    constexpr std::uint32_t m0 = 0xD2511F53u, m1 = 0xCD9E8D57u;
    constexpr std::uint32_t w0 = 0x9E3779B9u, w1 = 0xBB67AE85u;
    for (int r = 0; r < 10; ++r) {
      const std::uint64_t p0 = static_cast<std::uint64_t>(m0) * ctr[0];
      const std::uint64_t p1 = static_cast<std::uint64_t>(m1) * ctr[2];
      const std::uint32_t hi0 = static_cast<std::uint32_t>(p0 >> 32), lo0 = static_cast<std::uint32_t>(p0);
      const std::uint32_t hi1 = static_cast<std::uint32_t>(p1 >> 32), lo1 = static_cast<std::uint32_t>(p1);
      ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
      key[0] += w0;
      key[1] += w1;
    }
    return ctr;
  }

  result_type operator()() {
    if (used_ == 4) {
      const Block ctr{static_cast<std::uint32_t>(block_), static_cast<std::uint32_t>(block_ >> 32),
                      static_cast<std::uint32_t>(stream_), static_cast<std::uint32_t>(stream_ >> 32)};
      buf_ = bijection(ctr, key_);
      ++block_;
      used_ = 0;
    }
    return buf_[used_++];
  }

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform() {
    const std::uint64_t hi = (*this)(), lo = (*this)();
    const std::uint64_t bits = ((hi << 32) | lo) >> 11;
    return static_cast<double>(bits) * 0x1.0p-53;
  }

 private:
  std::array<std::uint32_t, 2> key_;
  std::uint64_t stream_;
  std::uint64_t block_ = 0;
  Block buf_{};
  int used_ = 4;
};

namespace detail {

// Inverse-CDF search over the +-40 sd window around the mode using the pmf
// recurrence ratio(k) = pmf(k+1)/pmf(k). Only basic arithmetic, so results
// are identical on every conforming platform.
template <typename Ratio>
std::uint64_t inverse_cdf_window(double u, std::uint64_t lo, std::uint64_t hi, std::uint64_t mode, Ratio&& ratio) {
  const std::size_t len = static_cast<std::size_t>(hi - lo + 1);
  std::vector<double> w(len, 0.0);
  const std::size_t m = static_cast<std::size_t>(mode - lo);
  w[m] = 1.0;
  for (std::size_t i = m; i + 1 < len; ++i) {
    w[i + 1] = w[i] * ratio(lo + i);
    if (w[i + 1] == 0.0) break;
  }
  for (std::size_t i = m; i > 0; --i) {
    const double r = ratio(lo + i - 1);
    w[i - 1] = r > 0.0 ? w[i] / r : 0.0;
    if (w[i - 1] == 0.0) break;
  }
  double total = 0.0;
  for (double x : w) total += x;
  const double target = u * total;
  double acc = 0.0;
  for (std::size_t i = 0; i < len; ++i) {
    acc += w[i];
    if (acc > target) return lo + i;
  }
  return hi;
}

}  // namespace detail

/// Binomial(n, p) draw from a uniform u in [0, 1).
inline std::uint64_t binomial_from_uniform(double u, std::uint64_t n, double p) {
  if (n == 0 || p <= 0.0) return 0;
  if (p >= 1.0) return n;
  const double nd = static_cast<double>(n);
  const double mean = nd * p, sd = std::sqrt(nd * p * (1.0 - p));
  const double lo_d = std::max(0.0, std::floor(mean - 40.0 * sd - 10.0));
  const double hi_d = std::min(nd, std::ceil(mean + 40.0 * sd + 10.0));
  const auto lo = static_cast<std::uint64_t>(lo_d), hi = static_cast<std::uint64_t>(hi_d);
  auto mode = static_cast<std::uint64_t>(std::floor((nd + 1.0) * p));
  mode = std::clamp(mode, lo, hi);
  const double odds = p / (1.0 - p);
  return detail::inverse_cdf_window(u, lo, hi, mode, [&](std::uint64_t k) {
    return (nd - static_cast<double>(k)) / (static_cast<double>(k) + 1.0) * odds;
  });
}

/// Poisson(mean) draw from a uniform u in [0, 1).
inline std::uint64_t poisson_from_uniform(double u, double mean) {
  if (mean <= 0.0) return 0;
  const double sd = std::sqrt(mean);
  const auto lo = static_cast<std::uint64_t>(std::max(0.0, std::floor(mean - 40.0 * sd - 10.0)));
  const auto hi = static_cast<std::uint64_t>(std::ceil(mean + 40.0 * sd + 10.0));
  const auto mode = std::clamp(static_cast<std::uint64_t>(std::floor(mean)), lo, hi);
  return detail::inverse_cdf_window(u, lo, hi, mode,
                                    [&](std::uint64_t k) { return mean / (static_cast<double>(k) + 1.0); });
}

enum class SamplingMode { binomial, poisson_flux };

inline std::string to_string(SamplingMode m) { return m == SamplingMode::binomial ? "binomial" : "poisson_flux"; }

inline SamplingMode sampling_mode_from_string(const std::string& s) {
  if (s == "binomial") return SamplingMode::binomial;
  if (s == "poisson_flux") return SamplingMode::poisson_flux;
  throw std::invalid_argument("unknown sampling mode '" + s + "'");
}

/// Coincidences out of `trials` detected pairs at each delay.
struct CountsRecord {
  std::vector<double> tau;
  std::vector<std::uint64_t> trials;
  std::vector<std::uint64_t> coincidences;
  std::uint64_t seed = 0;
  SamplingMode mode = SamplingMode::binomial;

  std::size_t size() const { return tau.size(); }

  void validate() const {
    detail::require(trials.size() == tau.size() && coincidences.size() == tau.size(),
                    "counts record: misaligned columns");
    for (std::size_t i = 0; i < tau.size(); ++i)
      detail::require(coincidences[i] <= trials[i], "counts record: coincidences exceed trials");
  }
};

/// Draws a counts record. Binomial mode uses `trials` pairs per delay;
/// poisson_flux first draws the pair number from Poisson(trials).
template <CutFunction C>
CountsRecord simulate_counts(const C& cut, const VisibilityModel& vis, const std::vector<double>& tau_grid,
                             std::uint64_t trials, std::uint64_t seed, SamplingMode mode = SamplingMode::binomial,
                             std::uint64_t stream = 0) {
  detail::require(trials >= 1, "simulate_counts: trials must be >= 1");
  vis.validate();
  Philox4x32 rng(seed, stream);
  CountsRecord rec;
  rec.seed = seed;
  rec.mode = mode;
  rec.tau = tau_grid;
  for (double t : tau_grid) {
    const double p = std::clamp(coincidence_probability(cut, vis, t), 0.0, 1.0);
    std::uint64_t n = trials;
    if (mode == SamplingMode::poisson_flux) n = poisson_from_uniform(rng.uniform(), static_cast<double>(trials));
    const std::uint64_t k = binomial_from_uniform(rng.uniform(), n, p);
    rec.trials.push_back(n);
    rec.coincidences.push_back(k);
  }
  return rec;
}

inline void write_counts_csv(std::ostream& os, const CountsRecord& r) {
  os << "tau_ps,trials,coincidences\n";
  for (std::size_t i = 0; i < r.size(); ++i)
    os << format_double(r.tau[i]) << ',' << r.trials[i] << ',' << r.coincidences[i] << '\n';
}

inline CountsRecord read_counts_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw std::invalid_argument("counts CSV is empty");
  if (detail::split_csv_line(line) != std::vector<std::string>{"tau_ps", "trials", "coincidences"})
    throw std::invalid_argument("counts CSV header must be tau_ps,trials,coincidences");
  CountsRecord r;
  auto parse_count = [](const std::string& s) -> std::uint64_t {
    const double x = detail::parse_double(s);
    if (!(x >= 0.0) || x != std::floor(x)) throw std::invalid_argument("count must be a non-negative integer: " + s);
    return static_cast<std::uint64_t>(x);
  };
  while (std::getline(is, line)) {
    if (line.empty() || line == "\r") continue;
    const auto cells = detail::split_csv_line(line);
    if (cells.size() != 3) throw std::invalid_argument("counts CSV row needs 3 columns: " + line);
    r.tau.push_back(detail::parse_double(cells[0]));
    r.trials.push_back(parse_count(cells[1]));
    r.coincidences.push_back(parse_count(cells[2]));
  }
  r.validate();
  return r;
}

// --- dip fitting --------------------------------------------------------------

/// Observed coincidence fractions with their trial counts.
struct FractionData {
  std::vector<double> tau;
  std::vector<double> fraction;
  std::vector<double> trials;

  static FractionData from_counts(const CountsRecord& r) {
    r.validate();
    FractionData d;
    for (std::size_t i = 0; i < r.size(); ++i) {
      if (r.trials[i] == 0) continue;
      d.tau.push_back(r.tau[i]);
      d.trials.push_back(static_cast<double>(r.trials[i]));
      d.fraction.push_back(static_cast<double>(r.coincidences[i]) / static_cast<double>(r.trials[i]));
    }
    return d;
  }
};

/// Which parameters the fit may move. Fixed ones stay at the initial guess.
struct FitMask {
  bool visibility = true;
  bool shape = true;
  bool offset = true;
};

struct FitResult {
  StateKind family = StateKind::gauss;
  double v_hat = 0.0;
  /// Shape parameters: gauss {sigma}, rect {delta_omega}, cat {omega_prime, delta_omega_prime}.
  std::vector<double> shape_hat;
  double tau0_hat = 0.0;
  std::vector<std::string> names;  // full parameter order: v, shape..., tau0
  std::vector<double> values;
  /// Covariance over the free parameters, in `names` order restricted to free ones.
  std::vector<std::string> free_names;
  Eigen::MatrixXd covariance;
  double chi2 = 0.0;
  double chi2_per_dof = 0.0;
  std::size_t dof = 0;
  int iterations = 0;
  bool model_mismatch = false;
  std::vector<std::string> at_bounds;

  StateDescriptor descriptor() const {
    if (family == StateKind::gauss) return StateDescriptor::gauss_state(shape_hat.at(0));
    if (family == StateKind::rect) return StateDescriptor::rect_state(shape_hat.at(0));
    return StateDescriptor::cat_state(shape_hat.at(0), shape_hat.at(1));
  }
};

namespace detail {

inline std::vector<std::string> fit_param_names(StateKind family) {
  switch (family) {
    case StateKind::gauss: return {"v", "sigma", "tau0"};
    case StateKind::rect: return {"v", "delta_omega", "tau0"};
    case StateKind::cat: return {"v", "omega_prime", "delta_omega_prime", "tau0"};
    default: break;
  }
  throw std::invalid_argument("fit_hom: family must be gauss, rect or cat");
}

inline StateDescriptor descriptor_from_params(StateKind family, const std::vector<double>& p) {
  if (family == StateKind::gauss) return StateDescriptor::gauss_state(p[1]);
  if (family == StateKind::rect) return StateDescriptor::rect_state(p[1]);
  return StateDescriptor::cat_state(p[1], p[2]);
}

// Keeps parameters inside the model's domain; returns names clipped.
inline void clamp_params(StateKind family, std::vector<double>& p) {
  p[0] = std::clamp(p[0], 0.0, 1.0);
  if (family == StateKind::cat) {
    p[2] = std::max(p[2], 1e-9);
    p[1] = std::max(p[1], 0.5 * p[2] * (1.0 + 1e-9));
  } else {
    p[1] = std::max(p[1], 1e-9);
  }
}

inline double model_pc(StateKind family, const std::vector<double>& p, double tau) {
  const AnalyticCut cut(descriptor_from_params(family, p));
  return 0.5 - 0.5 * p[0] * cut(tau - p.back()).w;
}

inline double fraction_sigma(double frac, double n) {
  const double floor_p = 1.0 / n;
  const double pe = std::clamp(frac, floor_p, 1.0 - floor_p);
  return std::sqrt(std::max(pe * (1.0 - pe), floor_p * (1.0 - floor_p)) / n);
}

// Initial guess from the dip depth, location and half-depth width.
inline std::vector<double> initial_guess(StateKind family, const FractionData& d) {
  std::size_t imin = 0;
  for (std::size_t i = 1; i < d.fraction.size(); ++i)
    if (d.fraction[i] < d.fraction[imin]) imin = i;
  const double pmin = d.fraction[imin];
  const double v0 = std::clamp(1.0 - 2.0 * pmin, 0.05, 0.999);
  const double half_level = 0.5 - 0.25 * (1.0 - 2.0 * pmin);
  double left = d.tau.front(), right = d.tau.back();
  for (std::size_t i = imin; i-- > 0;)
    if (d.fraction[i] >= half_level) {
      left = d.tau[i];
      break;
    }
  for (std::size_t i = imin + 1; i < d.tau.size(); ++i)
    if (d.fraction[i] >= half_level) {
      right = d.tau[i];
      break;
    }
  const double fwhm = std::max(right - left, 1e-6);
  const double tau0 = d.tau[imin];
  switch (family) {
    case StateKind::gauss: return {v0, 2.0 * std::sqrt(2.0 * std::log(2.0)) / fwhm, tau0};
    case StateKind::rect: return {v0, 4.0 * 1.8954942670339809 / fwhm, tau0};
    case StateKind::cat: {
      // Central fringe half-width ~ pi / (2 omega_prime).
      const double om = std::numbers::pi / fwhm;
      return {v0, om, om / 3.0, tau0};
    }
    default: break;
  }
  throw std::invalid_argument("fit_hom: unsupported family");
}

}  // namespace detail

struct FitOptions {
  FitMask mask;
  /// Full parameter vector (v, shape..., tau0) to start from.
  std::optional<std::vector<double>> initial;
  int max_iterations = 500;
};

/// Weighted least squares of P_c = 1/2 - v/2 W(tau - tau0) on observed
/// fractions, variance p(1-p)/n per point with p floored at 1/n.
/// Levenberg-Marquardt with central-difference Jacobians.
inline FitResult fit_hom(const FractionData& data, StateKind family, const FitOptions& opt = {}) {
  const auto names = detail::fit_param_names(family);
  const std::size_t np = names.size();
  detail::require(data.tau.size() == data.fraction.size() && data.tau.size() == data.trials.size(),
                  "fit_hom: misaligned data");
  detail::require(data.tau.size() >= 5, "fit_hom: need at least 5 delays with non-zero trials");

  std::vector<double> p = opt.initial ? *opt.initial : detail::initial_guess(family, data);
  detail::require(p.size() == np, "fit_hom: initial guess has the wrong number of parameters");
  detail::clamp_params(family, p);

  std::vector<std::size_t> free;
  for (std::size_t k = 0; k < np; ++k) {
    const bool is_v = k == 0, is_off = k + 1 == np;
    if ((is_v && opt.mask.visibility) || (is_off && opt.mask.offset) || (!is_v && !is_off && opt.mask.shape))
      free.push_back(k);
  }
  const std::size_t m = free.size();
  const std::size_t n = data.tau.size();
  detail::require(n > m, "fit_hom: not enough points for the free parameters");

  Eigen::VectorXd sig(n);
  for (std::size_t i = 0; i < n; ++i) sig(i) = detail::fraction_sigma(data.fraction[i], data.trials[i]);

  auto residuals = [&](const std::vector<double>& q) {
    Eigen::VectorXd r(n);
    for (std::size_t i = 0; i < n; ++i) r(i) = (data.fraction[i] - detail::model_pc(family, q, data.tau[i])) / sig(i);
    return r;
  };
  auto jacobian = [&](const std::vector<double>& q) {
    Eigen::MatrixXd J(n, m);
    for (std::size_t c = 0; c < m; ++c) {
      const std::size_t k = free[c];
      const double step = 1e-6 * std::max(std::abs(q[k]), 1e-3);
      auto qp = q, qm = q;
      qp[k] += step;
      qm[k] -= step;
      for (std::size_t i = 0; i < n; ++i) {
        const double dp = detail::model_pc(family, qp, data.tau[i]) - detail::model_pc(family, qm, data.tau[i]);
        J(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = -dp / (2.0 * step) / sig(i);
      }
    }
    return J;
  };

  Eigen::VectorXd r = residuals(p);
  double chi2 = r.squaredNorm();
  double lambda = 1e-3;
  int it = 0;
  bool converged = m == 0;
  for (; it < opt.max_iterations && !converged; ++it) {
    const Eigen::MatrixXd J = jacobian(p);
    const Eigen::MatrixXd A = J.transpose() * J;
    const Eigen::VectorXd g = J.transpose() * r;
    bool accepted = false;
    while (!accepted) {
      Eigen::MatrixXd Ad = A;
      for (Eigen::Index k = 0; k < static_cast<Eigen::Index>(m); ++k) Ad(k, k) += lambda * std::max(A(k, k), 1e-12);
      const Eigen::VectorXd delta = Ad.ldlt().solve(-g);
      auto q = p;
      for (std::size_t c = 0; c < m; ++c) q[free[c]] += delta(static_cast<Eigen::Index>(c));
      detail::clamp_params(family, q);
      const Eigen::VectorXd rq = residuals(q);
      const double chi2q = rq.squaredNorm();
      if (std::isfinite(chi2q) && chi2q <= chi2) {
        double rel_step = 0.0;
        for (std::size_t c = 0; c < m; ++c)
          rel_step = std::max(rel_step, std::abs(q[free[c]] - p[free[c]]) / std::max(std::abs(p[free[c]]), 1e-3));
        const double drop = chi2 - chi2q;
        p = q;
        r = rq;
        chi2 = chi2q;
        lambda = std::max(lambda / 10.0, 1e-12);
        accepted = true;
        if (drop <= 1e-12 * chi2 + 1e-28 || rel_step < 1e-12) converged = true;
      } else {
        lambda *= 10.0;
        if (lambda > 1e14) {
          // No downhill step left at this point.
          accepted = true;
          converged = true;
        }
      }
    }
  }
  if (!converged) throw NumericalError("fit_hom: no convergence after " + std::to_string(it) + " iterations");

  FitResult res;
  res.family = family;
  res.names = names;
  res.values = p;
  res.v_hat = p[0];
  res.shape_hat.assign(p.begin() + 1, p.end() - 1);
  res.tau0_hat = p.back();
  res.chi2 = chi2;
  res.dof = n - m;
  res.chi2_per_dof = chi2 / static_cast<double>(res.dof);
  res.iterations = it;
  for (std::size_t k : free) res.free_names.push_back(names[k]);
  if (m > 0) {
    const Eigen::MatrixXd J = jacobian(p);
    const Eigen::MatrixXd A = J.transpose() * J;
    res.covariance = A.completeOrthogonalDecomposition().pseudoInverse();
  }
  res.model_mismatch = res.chi2_per_dof > 1.0 + 5.0 * std::sqrt(2.0 / static_cast<double>(res.dof));
  if (p[0] <= 0.0 || p[0] >= 1.0) res.at_bounds.push_back("v");
  return res;
}

inline FitResult fit_hom(const CountsRecord& counts, StateKind family, const FitOptions& opt = {}) {
  return fit_hom(FractionData::from_counts(counts), family, opt);
}

// --- delay estimation -----------------------------------------------------------

struct MleResult {
  double tau_hat = 0.0;
  /// k/n fell outside the probabilities reachable on the interval; the
  /// estimate is the likelihood-maximizing endpoint.
  bool clipped = false;
};

/// Binomial maximum-likelihood delay from k coincidences in n trials, within
/// [lo, hi] on which P_c is monotone. The likelihood peaks where P_c = k/n,
/// located by bisection.
template <CutFunction C>
MleResult mle_delay(std::uint64_t k, std::uint64_t n, const C& cut, const VisibilityModel& vis, double lo, double hi) {
  detail::require(n >= 1 && k <= n, "mle_delay: need 0 <= k <= n, n >= 1");
  detail::require(hi > lo, "mle_delay: empty search interval");
  if (vis.v == 0.0) throw NumericalError("mle_delay: zero visibility carries no delay information");
  const double target = static_cast<double>(k) / static_cast<double>(n);
  const double pa = coincidence_probability(cut, vis, lo), pb = coincidence_probability(cut, vis, hi);
  if (pa == pb) throw NumericalError("mle_delay: flat likelihood on the search interval");
  const double pmin = std::min(pa, pb), pmax = std::max(pa, pb);
  if (target <= pmin) return {pa < pb ? lo : hi, target < pmin};
  if (target >= pmax) return {pa > pb ? lo : hi, target > pmax};
  const bool increasing = pb > pa;
  auto g = [&](double t) {
    const double d = coincidence_probability(cut, vis, t) - target;
    return increasing ? d : -d;
  };
  return {bisect_root(g, lo, hi), false};
}

/// Interval around tau on which W is monotone, found by stepping outward
/// until dW/dtau changes sign or vanishes. Bounded by [limit_lo, limit_hi].
template <CutFunction C>
std::pair<double, double> monotone_interval(const C& cut, double tau, double limit_lo, double limit_hi,
                                            std::size_t steps = 4000) {
  const double s0 = cut(tau).w1;
  if (s0 == 0.0) throw NumericalError("monotone_interval: W is stationary at the operating point");
  const double h = (limit_hi - limit_lo) / static_cast<double>(steps);
  double lo = tau, hi = tau;
  while (lo - h >= limit_lo) {
    const double s = cut(lo - h).w1;
    if (s == 0.0 || (s > 0.0) != (s0 > 0.0)) break;
    lo -= h;
  }
  while (hi + h <= limit_hi) {
    const double s = cut(hi + h).w1;
    if (s == 0.0 || (s > 0.0) != (s0 > 0.0)) break;
    hi += h;
  }
  return {lo, hi};
}

struct CrbValue {
  double classical = 0.0;  // 1/sqrt(n F(v,tau)), ps
  double quantum = 0.0;    // 1/sqrt(n QFI), ps
};

/// Cramer-Rao bound for n repetitions at delay tau.
inline CrbValue crb(const Probe& probe, const VisibilityModel& vis, double tau, std::uint64_t trials) {
  detail::require(trials >= 1, "crb: trials must be >= 1");
  const double f = fisher_information(probe.cut, vis, tau);
  if (!(f > 0.0)) throw NumericalError("crb: zero Fisher information at the requested delay");
  const double nd = static_cast<double>(trials);
  return {1.0 / std::sqrt(nd * f), 1.0 / std::sqrt(nd * probe.qfi)};
}

struct EstimateReport {
  double tau_true = 0.0;
  double v = 0.0;
  std::uint64_t trials = 0;
  std::uint64_t replicates = 0;
  std::uint64_t seed = 0;
  double tau_hat_mean = 0.0;
  double bias = 0.0;
  double empirical_std = 0.0;
  double crb = 0.0;
  double quantum_crb = 0.0;
  double fisher = 0.0;
  double ratio_to_crb = 0.0;
  double search_lo = 0.0;
  double search_hi = 0.0;
  std::uint64_t clipped = 0;
  std::vector<double> tau_hat;
};

/// Simulate-then-estimate over independent replicates; replicate r draws from
/// Philox stream r under `seed`.
inline EstimateReport mc_crb_study(const Probe& probe, const VisibilityModel& vis, double tau_true,
                                   std::uint64_t trials, std::uint64_t replicates, std::uint64_t seed) {
  detail::require(replicates >= 50, "mc_crb_study: need at least 50 replicates");
  const CrbValue bound = crb(probe, vis, tau_true, trials);
  const auto [lo, hi] = monotone_interval(probe.cut, tau_true, -probe.tau_max, probe.tau_max);
  EstimateReport rep;
  rep.tau_true = tau_true;
  rep.v = vis.v;
  rep.trials = trials;
  rep.replicates = replicates;
  rep.seed = seed;
  rep.crb = bound.classical;
  rep.quantum_crb = bound.quantum;
  rep.fisher = fisher_information(probe.cut, vis, tau_true);
  rep.search_lo = lo;
  rep.search_hi = hi;
  const double p = std::clamp(coincidence_probability(probe.cut, vis, tau_true), 0.0, 1.0);
  rep.tau_hat.reserve(replicates);
  for (std::uint64_t r = 0; r < replicates; ++r) {
    Philox4x32 rng(seed, r);
    const std::uint64_t k = binomial_from_uniform(rng.uniform(), trials, p);
    const MleResult m = mle_delay(k, trials, probe.cut, vis, lo, hi);
    if (m.clipped) ++rep.clipped;
    rep.tau_hat.push_back(m.tau_hat);
  }
  double s = 0.0;
  for (double x : rep.tau_hat) s += x;
  rep.tau_hat_mean = s / static_cast<double>(replicates);
  double ss = 0.0;
  for (double x : rep.tau_hat) ss += (x - rep.tau_hat_mean) * (x - rep.tau_hat_mean);
  rep.empirical_std = std::sqrt(ss / static_cast<double>(replicates - 1));
  rep.bias = rep.tau_hat_mean - tau_true;
  rep.ratio_to_crb = rep.empirical_std / rep.crb;
  return rep;
}

}  // namespace hom
