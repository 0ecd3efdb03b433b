#pragma once

// The mu = 0 cut of the chronocyclic Wigner function, W(0, tau), and its first
// two delay derivatives. Convention: W(0,tau) = Re int f(w) f*(-w) e^{i w tau} dw.

#include <algorithm>
#include <cmath>
#include <concepts>
#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "hom/numerics.hpp"
#include "hom/spectra.hpp"

namespace hom {

/// W(0,tau) with dW/dtau (1/ps) and d2W/dtau2 (1/ps^2) at one delay.
struct CutPoint {
  double w = 0.0;
  double w1 = 0.0;
  double w2 = 0.0;
};

/// Anything that evaluates the cut at an arbitrary delay.
template <typename C>
concept CutFunction = requires(const C& c, double tau) {
  { c(tau) } -> std::convertible_to<CutPoint>;
};

enum class CutSource { analytic, numeric };

/// W(0,tau) sampled on a delay grid.
struct WignerCut {
  std::vector<double> tau;
  std::vector<double> w;
  std::vector<double> w1;
  std::vector<double> w2;
  CutSource source = CutSource::analytic;
  bool unphysical_reference = false;
  /// Largest |Im| seen before taking the real part (numeric cuts only).
  double imag_residue = 0.0;
  std::vector<std::string> warnings;

  std::size_t size() const { return tau.size(); }
  CutPoint at(std::size_t i) const { return {w[i], w1[i], w2[i]}; }
};

/// Closed-form cut for gauss, rect and cat descriptors.
class AnalyticCut {
 public:
  explicit AnalyticCut(const StateDescriptor& d) : d_(d) {
    validate(d_);
    if (d_.kind != StateKind::gauss && d_.kind != StateKind::rect && d_.kind != StateKind::cat)
      throw std::invalid_argument("analytic cut unavailable for kind " + to_string(d_.kind) +
                                  "; use the numeric path");
  }

  CutPoint operator()(double tau) const {
    switch (d_.kind) {
      case StateKind::gauss: {
        const double s2 = d_.sigma * d_.sigma;
        const double e = std::exp(-0.5 * tau * tau * s2);
        return {e, -s2 * tau * e, (s2 * s2 * tau * tau - s2) * e};
      }
      case StateKind::rect: {
        const double k = 0.5 * d_.delta_omega;
        const auto s = detail::sinc_with_derivatives(k * tau);
        return {s.s, k * s.d1, k * k * s.d2};
      }
      case StateKind::cat: {
        const double k = 0.5 * d_.delta_omega_prime;
        const double om = d_.omega_prime;
        const auto s = detail::sinc_with_derivatives(k * tau);
        const double c = std::cos(om * tau), sn = std::sin(om * tau);
        const double e0 = s.s, e1 = k * s.d1, e2 = k * k * s.d2;
        return {e0 * c, e1 * c - om * e0 * sn, e2 * c - 2.0 * om * e1 * sn - om * om * e0 * c};
      }
      default: break;
    }
    return {};
  }

  const StateDescriptor& descriptor() const { return d_; }

 private:
  StateDescriptor d_;
};

/// Quadrature cut for any amplitude on a grid symmetric about zero.
/// Derivatives come from weighting the integrand by (i w) and (-w^2).
class NumericCut {
 public:
  explicit NumericCut(const SpectralAmplitude& amp) : rule_(amp.rule()), h_(amp.step()) {
    if (!amp.is_normalized()) throw std::invalid_argument("numeric cut: amplitude is not normalized");
    if (!amp.symmetric_grid())
      throw std::invalid_argument("numeric cut: amplitude grid is not symmetric about 0");
    const std::size_t n = amp.size();
    const auto& f = amp.values();
    // Pair sample i with its mirror n-1-i so that even integrands cancel exactly.
    const std::size_t half = n / 2;
    omega_.reserve(half + 1);
    for (std::size_t i = 0; i < half; ++i) {
      const std::size_t j = n - 1 - i;
      const cplx gp = f[j] * std::conj(f[i]) * amp.weight(j);
      const cplx gn = f[i] * std::conj(f[j]) * amp.weight(i);
      if (const auto e = partial_cell(amp, j, i, gp, gn)) {
        partial_.push_back(*e);
        continue;
      }
      omega_.push_back(amp.omega()[j]);  // positive frequency
      g_pos_.push_back(gp);
      g_neg_.push_back(gn);
    }
    if (n % 2 == 1) {
      const cplx g = std::norm(f[half]) * amp.weight(half);
      if (const auto e = partial_cell(amp, half, half, g, 0.0))
        partial_.push_back(*e);
      else
        center_ = g;
    }
  }

  CutPoint operator()(double tau) const { return evaluate(tau, nullptr); }

  /// Same as operator(), also reporting the largest imaginary part discarded.
  CutPoint evaluate(double tau, double* imag_residue) const {
    // Cell rule: each sample integrates exactly over its cell, which multiplies
    // e^{i w tau} by K(tau) = sinc(h tau / 2); derivatives follow by the product rule.
    double k0 = 1.0, k1 = 0.0, k2 = 0.0;
    if (rule_ == Quadrature::cell) {
      const double s = 0.5 * h_;
      const auto v = detail::sinc_with_derivatives(s * tau);
      k0 = v.s;
      k1 = s * v.d1;
      k2 = s * s * v.d2;
    }
    cplx a0 = center_, a1 = 0.0, a2 = 0.0;  // int g e^{iwt}, int g (iw) e^{iwt}, int g (-w^2) e^{iwt}
    for (std::size_t i = 0; i < omega_.size(); ++i) {
      const double w = omega_[i];
      const cplx e = std::polar(1.0, w * tau);
      const cplx ep = g_pos_[i] * e;
      const cplx en = g_neg_[i] * std::conj(e);
      const cplx sum = ep + en;
      const cplx diff = ep - en;
      a0 += sum;
      a1 += cplx(0.0, w) * diff;
      a2 += -w * w * sum;
    }
    cplx w0 = a0 * k0;
    cplx w1 = a1 * k0 + a0 * k1;
    cplx w2 = a2 * k0 + 2.0 * a1 * k1 + a0 * k2;
    // Cells cut by a spectral edge integrate exactly over their covered part.
    for (const auto& p : partial_) {
      const double s = 0.5 * p.length;
      const auto v = detail::sinc_with_derivatives(s * tau);
      const double q0 = v.s, q1 = s * v.d1, q2 = s * s * v.d2;
      const cplx e = std::polar(1.0, p.center * tau);
      const cplx sum = p.g_pos * e + p.g_neg * std::conj(e);
      const cplx diff = cplx(0.0, p.center) * (p.g_pos * e - p.g_neg * std::conj(e));
      const cplx curv = -p.center * p.center * sum;
      w0 += sum * q0;
      w1 += diff * q0 + sum * q1;
      w2 += curv * q0 + 2.0 * diff * q1 + sum * q2;
    }
    if (imag_residue != nullptr) *imag_residue = std::abs(w0.imag());
    return {w0.real(), w1.real(), w2.real()};
  }

 private:
  struct PartialCell {
    double center;  // of the covered part on the positive side
    double length;
    cplx g_pos, g_neg;
  };

  // Cell j (and its mirror i) as a partial cell, when its covered part is not the full cell.
  static std::optional<PartialCell> partial_cell(const SpectralAmplitude& amp, std::size_t j, std::size_t i,
                                                 cplx g_pos, cplx g_neg) {
    if (amp.rule() != Quadrature::cell || !amp.has_cell_supports()) return std::nullopt;
    const double h = amp.step();
    const auto [a, b] = amp.cell_support(j);
    const auto [am, bm] = amp.cell_support(i);
    if (std::abs(a + bm) > 1e-9 * h || std::abs(b + am) > 1e-9 * h)
      throw std::invalid_argument("numeric cut: cell supports are not mirror symmetric");
    const double len = b - a, c = 0.5 * (a + b);
    if (len <= 0.0) return std::nullopt;
    if (std::abs(len - h) <= 1e-12 * h && std::abs(c - amp.omega()[j]) <= 1e-12 * h) return std::nullopt;
    return PartialCell{c, len, g_pos, g_neg};
  }

  Quadrature rule_;
  double h_;
  std::vector<double> omega_;
  std::vector<cplx> g_pos_, g_neg_;
  std::vector<PartialCell> partial_;
  cplx center_ = 0.0;
};

/// cos(sqrt(2a) tau): the constant-information reference. Not the cut of any
/// normalizable state.
class CosineCut {
 public:
  explicit CosineCut(double a) : k_(std::sqrt(2.0 * a)) {
    detail::require(a > 0.0, "cosine reference: a must be positive");
  }
  CutPoint operator()(double tau) const {
    const double c = std::cos(k_ * tau), s = std::sin(k_ * tau);
    return {c, -k_ * s, -k_ * k_ * c};
  }
  double frequency() const { return k_; }

 private:
  double k_;
};

/// Interpolates a sampled WignerCut with quintic Hermite polynomials built
/// from w, w1 and w2 at the bracketing nodes.
class SampledCut {
 public:
  explicit SampledCut(WignerCut cut) : cut_(std::move(cut)) {
    detail::require(cut_.size() >= 2, "sampled cut needs at least two points");
    for (std::size_t i = 1; i < cut_.size(); ++i)
      detail::require(cut_.tau[i] > cut_.tau[i - 1], "sampled cut grid must be increasing");
  }

  double tau_min() const { return cut_.tau.front(); }
  double tau_max() const { return cut_.tau.back(); }

  CutPoint operator()(double tau) const {
    if (!(tau >= tau_min() && tau <= tau_max()))
      throw std::out_of_range("delay " + std::to_string(tau) + " ps outside the cut grid");
    auto it = std::upper_bound(cut_.tau.begin(), cut_.tau.end(), tau);
    std::size_t j = static_cast<std::size_t>(it - cut_.tau.begin());
    if (j >= cut_.size()) j = cut_.size() - 1;
    const std::size_t i = j - 1;
    const double h = cut_.tau[j] - cut_.tau[i];
    const double t = (tau - cut_.tau[i]) / h;
    if (t == 0.0) return cut_.at(i);
    if (t == 1.0) return cut_.at(j);
    // Quintic Hermite basis on [0,1] and its derivatives.
    const double t2 = t * t, t3 = t2 * t, t4 = t3 * t, t5 = t4 * t;
    const double H0[3] = {1 - 10 * t3 + 15 * t4 - 6 * t5, -30 * t2 + 60 * t3 - 30 * t4, -60 * t + 180 * t2 - 120 * t3};
    const double H1[3] = {t - 6 * t3 + 8 * t4 - 3 * t5, 1 - 18 * t2 + 32 * t3 - 15 * t4, -36 * t + 96 * t2 - 60 * t3};
    const double H2[3] = {0.5 * t2 - 1.5 * t3 + 1.5 * t4 - 0.5 * t5, t - 4.5 * t2 + 6 * t3 - 2.5 * t4,
                          1 - 9 * t + 18 * t2 - 10 * t3};
    const double H3[3] = {10 * t3 - 15 * t4 + 6 * t5, 30 * t2 - 60 * t3 + 30 * t4, 60 * t - 180 * t2 + 120 * t3};
    const double H4[3] = {-4 * t3 + 7 * t4 - 3 * t5, -12 * t2 + 28 * t3 - 15 * t4, -24 * t + 84 * t2 - 60 * t3};
    const double H5[3] = {0.5 * t3 - t4 + 0.5 * t5, 1.5 * t2 - 4 * t3 + 2.5 * t4, 3 * t - 12 * t2 + 10 * t3};
    const CutPoint a = cut_.at(i), b = cut_.at(j);
    double out[3];
    const double scale[3] = {1.0, 1.0 / h, 1.0 / (h * h)};
    for (int d = 0; d < 3; ++d) {
      out[d] = scale[d] * (H0[d] * a.w + H1[d] * h * a.w1 + H2[d] * h * h * a.w2 + H3[d] * b.w +
                           H4[d] * h * b.w1 + H5[d] * h * h * b.w2);
    }
    return {out[0], out[1], out[2]};
  }

  const WignerCut& cut() const { return cut_; }

 private:
  WignerCut cut_;
};

/// Evaluates any cut function on a delay grid.
template <CutFunction C>
WignerCut sample_cut(const C& fn, const std::vector<double>& tau_grid, CutSource source) {
  WignerCut out;
  out.source = source;
  out.tau = tau_grid;
  out.w.reserve(tau_grid.size());
  out.w1.reserve(tau_grid.size());
  out.w2.reserve(tau_grid.size());
  for (double t : tau_grid) {
    detail::require(std::isfinite(t), "delay grid must be finite");
    const CutPoint p = fn(t);
    out.w.push_back(p.w);
    out.w1.push_back(p.w1);
    out.w2.push_back(p.w2);
  }
  return out;
}

inline WignerCut wigner_cut_numeric(const SpectralAmplitude& amp, const std::vector<double>& tau_grid) {
  NumericCut fn(amp);
  WignerCut out;
  out.source = CutSource::numeric;
  out.tau = tau_grid;
  for (double t : tau_grid) {
    detail::require(std::isfinite(t), "delay grid must be finite");
    double imag = 0.0;
    const CutPoint p = fn.evaluate(t, &imag);
    out.w.push_back(p.w);
    out.w1.push_back(p.w1);
    out.w2.push_back(p.w2);
    out.imag_residue = std::max(out.imag_residue, imag);
  }
  if (out.imag_residue > 1e-8)
    out.warnings.push_back("imaginary residue " + std::to_string(out.imag_residue) +
                           " in W(0,tau), which is real for any amplitude: quadrature error");
  return out;
}

inline WignerCut wigner_cut_analytic(const StateDescriptor& desc, const std::vector<double>& tau_grid) {
  return sample_cut(AnalyticCut(desc), tau_grid, CutSource::analytic);
}

inline WignerCut cosine_reference_cut(double a, const std::vector<double>& tau_grid) {
  auto out = sample_cut(CosineCut(a), tau_grid, CutSource::analytic);
  out.unphysical_reference = true;
  return out;
}

inline void write_cut_csv(std::ostream& os, const WignerCut& cut) {
  os << "tau_ps,w,w1,w2\n";
  for (std::size_t i = 0; i < cut.size(); ++i)
    os << format_double(cut.tau[i]) << ',' << format_double(cut.w[i]) << ','
       << format_double(cut.w1[i]) << ',' << format_double(cut.w2[i]) << '\n';
}

}  // namespace hom
