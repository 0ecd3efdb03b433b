#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <functional>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

namespace hom {

/// Raised when a computation cannot produce a meaningful number
/// (degenerate state, zero information, non-convergence).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

using cplx = std::complex<double>;

namespace units {
/// Speed of light in nm/ps.
inline constexpr double c_nm_per_ps = 299792.458;
/// Speed of light in mm/ps.
inline constexpr double c_mm_per_ps = 0.299792458;
}  // namespace units

namespace detail {

inline void require(bool ok, const std::string& what) {
  if (!ok) throw std::invalid_argument(what);
}

// sin(x)/x and its first two derivatives. Series below |x| = 0.5 avoids the
// cancellation in x cos x - sin x.
struct SincValue {
  double s, d1, d2;
};

inline SincValue sinc_with_derivatives(double x) {
  if (std::abs(x) < 0.5) {
    const double x2 = x * x;
    double s = 1.0, d1 = 0.0, d2 = 0.0;
    double fact = 1.0;    // (2n+1)!
    double pow_lo = 1.0;  // x^(2n-2)
    double sign = 1.0;
    for (int n = 1; n < 12; ++n) {
      fact *= (2.0 * n) * (2.0 * n + 1.0);
      sign = -sign;
      s += sign * pow_lo * x2 / fact;
      d1 += sign * 2.0 * n * pow_lo * x / fact;
      d2 += sign * 2.0 * n * (2.0 * n - 1.0) * pow_lo / fact;
      pow_lo *= x2;
    }
    return {s, d1, d2};
  }
  const double sn = std::sin(x), cs = std::cos(x);
  const double s = sn / x;
  const double d1 = (x * cs - sn) / (x * x);
  const double d2 = -s - 2.0 * d1 / x;
  return {s, d1, d2};
}

inline double sinc(double x) { return sinc_with_derivatives(x).s; }

inline std::vector<double> linspace(double a, double b, std::size_t n) {
  require(n >= 2, "linspace needs at least two points");
  std::vector<double> out(n);
  const double step = (b - a) / static_cast<double>(n - 1);
  for (std::size_t i = 0; i < n; ++i) out[i] = a + step * static_cast<double>(i);
  out.back() = b;
  return out;
}

}  // namespace detail

struct GoldenResult {
  double x;
  double fx;
  int iterations;
};

/// Golden-section search for the maximum of a unimodal function on [a, b].
/// Stops once the bracket is below rel_tol * max(|x|, scale).
template <typename F>
GoldenResult golden_section_maximize(F&& f, double a, double b, double rel_tol = 1e-8,
                                     double scale = 0.0, int max_iter = 200) {
  if (a > b) std::swap(a, b);
  constexpr double inv_phi = 0.6180339887498948482;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = f(c), fd = f(d);
  int it = 0;
  for (; it < max_iter; ++it) {
    const double mid = 0.5 * (a + b);
    const double tol = rel_tol * std::max(std::abs(mid), scale);
    if (b - a <= tol) break;
    if (fc >= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = f(d);
    }
  }
  if (fc >= fd) return {c, fc, it};
  return {d, fd, it};
}

/// Bisection on a sign change of g over [a, b]; returns the midpoint of the
/// final bracket. Caller guarantees g(a) and g(b) differ in sign.
template <typename G>
double bisect_root(G&& g, double a, double b, int max_iter = 200) {
  double ga = g(a);
  for (int i = 0; i < max_iter; ++i) {
    const double m = 0.5 * (a + b);
    if (m <= a || m >= b) break;
    const double gm = g(m);
    if (gm == 0.0) return m;
    if ((gm > 0.0) == (ga > 0.0)) {
      a = m;
      ga = gm;
    } else {
      b = m;
    }
  }
  return 0.5 * (a + b);
}

}  // namespace hom
