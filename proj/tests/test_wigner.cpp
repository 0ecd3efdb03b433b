#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <sstream>

#include "hom/spectra.hpp"
#include "hom/wigner.hpp"

using namespace hom;

namespace {

constexpr double kPi = std::numbers::pi;

// Odd n, mirrored bitwise, with an exact zero in the middle.
std::vector<double> sym_taus(double span, std::size_t n = 401) {
  return detail::symmetric_grid(n, 2.0 * span / static_cast<double>(n - 1));
}

std::vector<StateDescriptor> closed_form_states() {
  return {StateDescriptor::gauss_state(1.0), StateDescriptor::gauss_state(3.0), StateDescriptor::rect_state(12.0),
          rect_from_filter(15.0, 1544.8), StateDescriptor::cat_state(10.0, 2.0),
          cat_from_channels(1530.0, 1560.0, 5.0, 1544.8)};
}

}  // namespace

TEST(WignerNumeric, SpecExamples) {
  const auto g = wigner_cut_numeric(make_state(StateDescriptor::gauss_state(1.0)), {0.0});
  EXPECT_NEAR(g.w[0], 1.0, 1e-9);
  EXPECT_EQ(g.source, CutSource::numeric);

  const auto r = wigner_cut_numeric(make_state(StateDescriptor::rect_state(12.0)), {0.5});
  EXPECT_NEAR(r.w[0], std::sin(3.0) / 3.0, 1e-9);
  EXPECT_NEAR(r.w[0], 0.04704, 5e-6);

  const auto c = wigner_cut_numeric(make_state(StateDescriptor::cat_state(10.0, 2.0)), {0.3});
  EXPECT_NEAR(c.w[0], std::sin(0.3) / 0.3 * std::cos(3.0), 1e-9);
  EXPECT_NEAR(c.w[0], -0.97521, 5e-6);
}

TEST(WignerAnalytic, SpecExamples) {
  EXPECT_NEAR(wigner_cut_analytic(StateDescriptor::gauss_state(2.0), {1.0}).w[0], std::exp(-2.0), 1e-15);
  EXPECT_EQ(wigner_cut_analytic(StateDescriptor::rect_state(7.3), {0.0}).w[0], 1.0);
  EXPECT_NEAR(wigner_cut_analytic(StateDescriptor::cat_state(10.0, 2.0), {kPi / 20.0}).w[0], 0.0, 1e-15);
  EXPECT_THROW(wigner_cut_analytic(StateDescriptor::sinc_state(3.5e-4, 0, 0), {0.0}), std::invalid_argument);
}

TEST(CosineReference, Values) {
  const auto c = cosine_reference_cut(0.5, {0.0, kPi});
  EXPECT_TRUE(c.unphysical_reference);
  EXPECT_EQ(c.w[0], 1.0);
  EXPECT_NEAR(c.w[1], -1.0, 1e-15);
  EXPECT_NEAR(cosine_reference_cut(2.0, {kPi / 4.0}).w[0], 0.0, 1e-15);
  EXPECT_THROW(cosine_reference_cut(0.0, {0.0}), std::invalid_argument);
}

TEST(WignerCut, AnalyticMatchesNumeric) {
  for (const auto& d : closed_form_states()) {
    const double sd = std::sqrt(analytic_variance(d));
    double span = 6.0 / sd;
    if (d.kind == StateKind::cat) span = std::max(span, 6.0 * kPi / d.omega_prime);
    const auto taus = sym_taus(span, 801);
    const auto a = wigner_cut_analytic(d, taus);
    const auto n = wigner_cut_numeric(make_state(d), taus);
    double ew = 0.0, ew2 = 0.0;
    for (std::size_t i = 0; i < taus.size(); ++i) {
      ew = std::max(ew, std::abs(a.w[i] - n.w[i]));
      ew2 = std::max(ew2, std::abs(a.w2[i] - n.w2[i]));
    }
    EXPECT_LE(ew, 1e-7) << to_string(d.kind);
    EXPECT_LE(ew2, 1e-5) << to_string(d.kind);
  }
}

TEST(WignerCut, CurvatureEqualsVariance) {
  auto states = closed_form_states();
  states.push_back(StateDescriptor::sinc_state(3.5e-4, 0.0, 0.0));
  states.push_back(StateDescriptor::sinc_state(1e-2, 0.0, 0.5));
  for (const auto& d : states) {
    const auto amp = make_state(d);
    const double var = moments(amp).variance;
    const auto cut = wigner_cut_numeric(amp, {0.0});
    EXPECT_NEAR(-cut.w2[0], var, 1e-4 * var) << to_string(d.kind);
  }
}

TEST(WignerCut, SymmetricStatesAreEvenWithUnitPeak) {
  auto states = closed_form_states();
  states.push_back(StateDescriptor::sinc_state(3.5e-4, 0.0, 0.0));
  for (const auto& d : states) {
    const auto amp = make_state(d);
    const double span = 8.0 / std::sqrt(moments(amp).variance);
    const auto taus = sym_taus(span, 201);
    const auto cut = wigner_cut_numeric(amp, taus);
    EXPECT_NEAR(cut.w[100], 1.0, 1e-9);
    EXPECT_EQ(cut.w1[100], 0.0);
    for (std::size_t i = 0; i < taus.size(); ++i) {
      EXPECT_LE(std::abs(cut.w[i]), 1.0 + 1e-9);
      EXPECT_NEAR(cut.w[i], cut.w[taus.size() - 1 - i], 1e-12);
    }
    EXPECT_TRUE(cut.warnings.empty());
  }
}

TEST(WignerCut, BoundedForAsymmetricStates) {
  // Off-center sinc: |f|^2 is not even, so |W| < 1 everywhere. f(w) f*(-w) is
  // Hermitian in w, so the cut stays real up to quadrature error.
  const auto amp = make_state(StateDescriptor::sinc_state(3.5e-4, 4e-3, 0.0));
  const auto cut = wigner_cut_numeric(amp, sym_taus(0.5, 201));
  for (double w : cut.w) EXPECT_LE(std::abs(w), 1.0 + 1e-9);
  EXPECT_LT(cut.w[100], 1.0 - 1e-3);
  EXPECT_LE(cut.imag_residue, 1e-8);
  EXPECT_TRUE(cut.warnings.empty());
}

TEST(WignerCut, DerivativesMatchFiniteDifferences) {
  auto states = closed_form_states();
  states.push_back(StateDescriptor::sinc_state(3.5e-4, 0.0, 0.0));
  for (const auto& d : states) {
    const auto amp = make_state(d);
    const NumericCut cut(amp);
    const double q = moments(amp).variance;
    const double h = 1e-3 / std::sqrt(q);
    for (double x : {0.13, 0.71, 1.7, 2.9}) {
      const double tau = x / std::sqrt(q);
      const auto p = cut(tau);
      const double wp = cut(tau + h).w, wm = cut(tau - h).w;
      const double fd1 = (wp - wm) / (2.0 * h);
      const double fd2 = (wp - 2.0 * p.w + wm) / (h * h);
      EXPECT_NEAR(p.w1, fd1, 1e-5 * std::sqrt(q)) << to_string(d.kind) << " tau=" << tau;
      EXPECT_NEAR(p.w2, fd2, 1e-5 * q) << to_string(d.kind) << " tau=" << tau;
    }
  }
}

TEST(WignerCut, RejectsAsymmetricGrid) {
  std::vector<double> g = detail::linspace(0.0, 10.0, 600);
  std::vector<cplx> v(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) v[i] = std::exp(-(g[i] - 5.0) * (g[i] - 5.0));
  const SpectralAmplitude amp(g, v, Quadrature::trapezoid);
  EXPECT_THROW(wigner_cut_numeric(amp, {0.0}), std::invalid_argument);
}

TEST(SampledCut, InterpolatesAndRejectsOutOfRange) {
  const auto d = StateDescriptor::gauss_state(1.0);
  const AnalyticCut exact(d);
  const SampledCut s(wigner_cut_analytic(d, sym_taus(5.0, 201)));
  for (double t : {-4.33, -1.01, 0.0, 0.377, 2.5}) {
    const auto a = exact(t), b = s(t);
    EXPECT_NEAR(a.w, b.w, 1e-9);
    EXPECT_NEAR(a.w1, b.w1, 1e-7);
    EXPECT_NEAR(a.w2, b.w2, 1e-5);
  }
  EXPECT_THROW(s(5.01), std::out_of_range);
  EXPECT_THROW(s(-7.0), std::out_of_range);
}

TEST(WignerCut, CsvHeader) {
  std::stringstream ss;
  write_cut_csv(ss, wigner_cut_analytic(StateDescriptor::gauss_state(1.0), {0.0, 1.0}));
  std::string header;
  std::getline(ss, header);
  EXPECT_EQ(header, "tau_ps,w,w1,w2");
  std::string row;
  std::getline(ss, row);
  EXPECT_EQ(row, "0,1,0,-1");
}
