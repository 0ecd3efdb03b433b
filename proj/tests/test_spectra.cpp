#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <sstream>

#include "hom/spectra.hpp"

using namespace hom;

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kC = 299792.458;  // nm/ps

// Independent conversions: omega = 2 pi c / lambda.
double omega_of(double lambda_nm) { return 2.0 * kPi * kC / lambda_nm; }

double raw_norm(const SpectralAmplitude& a) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += std::norm(a.values()[i]) * a.weight(i);
  return s;
}

}  // namespace

TEST(MakeState, GaussIsNormalized) {
  const auto amp = make_state(StateDescriptor::gauss_state(1.0), 4096);
  EXPECT_EQ(amp.size(), 4096u);
  EXPECT_NEAR(raw_norm(amp), 1.0, 1e-10);
  EXPECT_TRUE(amp.is_normalized());
  EXPECT_TRUE(covers_support(amp, 8.0));
}

TEST(MakeState, RectFromFilterIsFlatOverSupport) {
  const auto d = rect_from_filter(15.0, 1544.8);
  // First-order conversion and exact band-edge difference agree to 1e-5.
  const double exact = omega_of(1544.8 - 7.5) - omega_of(1544.8 + 7.5);
  EXPECT_NEAR(d.delta_omega, exact, 1e-4 * exact);
  EXPECT_NEAR(d.delta_omega, 11.8, 0.05);
  const auto amp = make_state(d);
  const double half = 0.5 * d.delta_omega;
  double inside = -1.0;
  for (std::size_t i = 0; i < amp.size(); ++i) {
    const double w = amp.omega()[i];
    const double h = amp.step();
    if (w + 0.5 * h <= half && w - 0.5 * h >= -half) {
      const double p = std::norm(amp.values()[i]);
      if (inside < 0.0) inside = p;
      EXPECT_NEAR(p, inside, 1e-12 * inside);
    } else if (w - 0.5 * h >= half || w + 0.5 * h <= -half) {
      EXPECT_EQ(std::norm(amp.values()[i]), 0.0);
    }
  }
  EXPECT_NEAR(inside * d.delta_omega, 1.0, 1e-12);
}

TEST(MakeState, CatFromChannelsIsBimodal) {
  const auto d = cat_from_channels(1530.0, 1560.0, 5.0, 1544.8);
  const double offset = omega_of(1530.0) - omega_of(1560.0);
  const double width = 2.0 * kPi * kC * 5.0 / (1530.0 * 1530.0) + 2.0 * kPi * kC * 5.0 / (1560.0 * 1560.0);
  EXPECT_NEAR(d.omega_prime, offset, 1e-9);
  EXPECT_NEAR(d.delta_omega_prime, width, 1e-9);
  EXPECT_NEAR(d.omega_prime, 23.7, 0.05);
  EXPECT_NEAR(d.delta_omega_prime, 7.9, 0.05);
  const auto amp = make_state(d);
  const std::size_t mid = amp.size() / 2;
  EXPECT_EQ(std::norm(amp.values()[mid]), 0.0);
  std::size_t peak = 0;
  for (std::size_t i = 0; i < amp.size(); ++i)
    if (std::abs(amp.omega()[i] - d.omega_prime) < std::abs(amp.omega()[peak] - d.omega_prime)) peak = i;
  EXPECT_GT(std::norm(amp.values()[peak]), 0.0);
  EXPECT_DOUBLE_EQ(std::norm(amp.values()[peak]), std::norm(amp.values()[amp.size() - 1 - peak]));
}

TEST(MakeState, RejectsInvalidDescriptors) {
  EXPECT_THROW(make_state(StateDescriptor::gauss_state(0.0)), std::invalid_argument);
  EXPECT_THROW(make_state(StateDescriptor::gauss_state(-1.0)), std::invalid_argument);
  EXPECT_THROW(make_state(StateDescriptor::rect_state(0.0)), std::invalid_argument);
  EXPECT_THROW(make_state(StateDescriptor::cat_state(1.0, 2.5)), std::invalid_argument);
  EXPECT_THROW(make_state(StateDescriptor::sinc_state(0.0, 0.0, 0.0)), std::invalid_argument);
  EXPECT_THROW(make_state(StateDescriptor::gauss_state(1.0), 256), std::invalid_argument);
}

TEST(MakeState, OddGridPointCountsWork) {
  for (auto d : {StateDescriptor::rect_state(12.0), StateDescriptor::cat_state(10.0, 2.0)}) {
    const auto amp = make_state(d, 4097);
    EXPECT_TRUE(amp.symmetric_grid());
    EXPECT_NEAR(moments(amp).variance, analytic_variance(d), 1e-9 * analytic_variance(d));
  }
}

TEST(Moments, PaperStates) {
  EXPECT_NEAR(moments(make_state(StateDescriptor::gauss_state(1.0))).variance, 1.0, 1e-6);
  EXPECT_NEAR(moments(make_state(StateDescriptor::rect_state(12.0))).variance, 12.0, 1e-9);
  EXPECT_NEAR(moments(make_state(StateDescriptor::cat_state(10.0, 2.0))).variance, 100.0 + 4.0 / 12.0, 1e-8);
}

TEST(Moments, GaussVarianceAcrossScales) {
  for (double s : {0.1, 1.0, 10.0}) {
    const auto m = moments(make_state(StateDescriptor::gauss_state(s)));
    EXPECT_NEAR(m.variance, s * s, 1e-6 * s * s) << "sigma=" << s;
    EXPECT_NEAR(m.mean, 0.0, 1e-12 * s);
  }
}

TEST(Moments, GaussSaturatesUncertaintyAndOrderingHolds) {
  const auto g = moments(make_state(StateDescriptor::gauss_state(1.0)));
  const auto r = moments(make_state(rect_from_filter(15.0, 1544.8)));
  const auto c = moments(make_state(cat_from_channels(1530.0, 1560.0, 5.0, 1544.8)));
  // |F(t)|^2 of a Gaussian of intensity std sigma has std 1/(2 sigma).
  EXPECT_NEAR(g.temporal_variance, 0.25, 1e-8);
  EXPECT_NEAR(g.phase_space_area, 0.25, 1e-8);
  for (const auto& m : {g, r, c}) {
    EXPECT_GT(m.variance, 0.0);
    EXPECT_GT(m.temporal_variance, 0.0);
    EXPECT_GE(m.phase_space_area, 0.25 - 1e-6);
  }
  EXPECT_LE(g.phase_space_area, r.phase_space_area);
  EXPECT_LE(r.phase_space_area, c.phase_space_area);
}

TEST(Moments, SincVarianceMatchesDirectQuadrature) {
  const auto d = StateDescriptor::sinc_state(3.5e-4, 0.0, 0.0);
  const auto amp = make_state(d);
  // Oracle: Var of sinc^2(a w^2) in u = sqrt(a) w, by fine midpoint sums over a wide range.
  double m0 = 0.0, m2 = 0.0;
  const double h = 1e-4;
  for (double u = 0.5 * h; u < 400.0; u += h) {
    const double x = u * u;
    const double s = std::sin(x) / x;
    m0 += s * s;
    m2 += s * s * u * u;
  }
  const double var_inf = (m2 / m0) / d.a;
  const auto m = moments(amp);
  EXPECT_TRUE(covers_support(amp, 8.0));
  // The grid truncates the slowly decaying tails at about 8 sd.
  EXPECT_NEAR(m.variance, var_inf, 0.1 * var_inf);
  EXPECT_GT(m.variance, 1500.0);
}

TEST(Normalization, IdempotentBitForBit) {
  for (auto d : {StateDescriptor::gauss_state(0.7), StateDescriptor::rect_state(5.0),
                 StateDescriptor::cat_state(10.0, 2.0), StateDescriptor::sinc_state(3.5e-4, 0.0, 0.0)}) {
    const auto a = make_state(d);
    const auto b = a.normalized();
    const auto c = b.normalized();
    ASSERT_EQ(b.size(), c.size());
    for (std::size_t i = 0; i < b.size(); ++i) {
      EXPECT_EQ(b.values()[i], c.values()[i]);
      EXPECT_EQ(a.values()[i], b.values()[i]);
    }
  }
}

TEST(Normalization, ScalesArbitraryInput) {
  auto grid = detail::symmetric_grid(1024, 0.02);
  std::vector<cplx> v(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) v[i] = 7.0 * std::exp(-grid[i] * grid[i]);
  const SpectralAmplitude amp(grid, v, Quadrature::trapezoid);
  EXPECT_NEAR(raw_norm(amp), 1.0, 1e-12);
  std::vector<cplx> zeros(grid.size(), 0.0);
  EXPECT_THROW(SpectralAmplitude(grid, zeros, Quadrature::trapezoid), NumericalError);
}

TEST(Wavelength, Detuning) {
  EXPECT_EQ(wavelength_to_detuning(1544.8, 1544.8), 0.0);
  const double d1 = wavelength_to_detuning(1530.0, 1544.8);
  const double d2 = wavelength_to_detuning(1560.0, 1544.8);
  EXPECT_NEAR(d1, omega_of(1530.0) - omega_of(1544.8), 1e-9);
  EXPECT_NEAR(d2, omega_of(1560.0) - omega_of(1544.8), 1e-9);
  EXPECT_NEAR(d1, 11.79, 0.01);
  EXPECT_NEAR(d2, -11.88, 0.01);
  EXPECT_THROW(wavelength_to_detuning(-1.0, 1544.8), std::invalid_argument);
}

TEST(Wavelength, Antisymmetric) {
  for (double a : {1300.0, 1530.0, 1560.0, 1600.0})
    for (double b : {1310.0, 1544.8, 1700.0})
      EXPECT_DOUBLE_EQ(wavelength_to_detuning(a, b), -wavelength_to_detuning(b, a));
}

TEST(SincFromOptics, SymmetryCenterAndScaling) {
  const auto s0 = sinc_pm_from_optics(2.0, 0.01, 0.0, 1e-3, 1000.0);
  ASSERT_TRUE(s0.symmetry_center.has_value());
  EXPECT_EQ(*s0.symmetry_center, 0.0);
  EXPECT_EQ(s0.b, 0.0);

  const double dnb = 2e-4, dndw = 5e-4;
  const auto s1 = sinc_pm_from_optics(2.0, 0.01, dnb, dndw, 1000.0);
  EXPECT_DOUBLE_EQ(*s1.symmetry_center, -dnb / (2.0 * dndw));
  // The center is also the extremum of the sinc argument a w^2 + b w + c.
  EXPECT_NEAR(-s1.b / (2.0 * s1.a), *s1.symmetry_center, 1e-12);

  const auto s2 = sinc_pm_from_optics(4.0, 0.01, dnb, dndw, 1000.0);
  EXPECT_DOUBLE_EQ(s2.a, 2.0 * s1.a);
  EXPECT_DOUBLE_EQ(s2.b, 2.0 * s1.b);
  EXPECT_DOUBLE_EQ(s2.c, 2.0 * s1.c);
  EXPECT_DOUBLE_EQ(*s2.symmetry_center, *s1.symmetry_center);

  const double t = 2.0 / 0.299792458;
  EXPECT_DOUBLE_EQ(s1.b, -0.5 * t * dnb);
  EXPECT_DOUBLE_EQ(s1.c, t * 1000.0 * 0.01);
  EXPECT_THROW(sinc_pm_from_optics(2.0, 0.01, dnb, 0.0, 1000.0), std::invalid_argument);
  EXPECT_THROW(sinc_pm_from_optics(0.0, 0.01, dnb, dndw, 1000.0), std::invalid_argument);
}

namespace {

std::vector<double> jsa_grid() { return detail::linspace(-6.0, 6.0, 121); }

cplx sym_part(double a, double b) { return std::exp(-0.5 * (a * a + b * b)) * std::exp(-0.1 * (a - b) * (a - b)); }
cplx anti_part(double a, double b) { return (a - b) * std::exp(-0.5 * (a * a + b * b)); }

// Independent double-sum oracle on raw (unnormalized) samples.
cplx overlap_oracle(const std::vector<double>& g, auto&& f) {
  const double h = g[1] - g[0];
  cplx num = 0.0;
  double den = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i)
    for (std::size_t j = 0; j < g.size(); ++j) {
      const double wi = (i == 0 || i + 1 == g.size()) ? 0.5 : 1.0;
      const double wj = (j == 0 || j + 1 == g.size()) ? 0.5 : 1.0;
      num += wi * wj * h * h * f(g[i], g[j]) * std::conj(f(g[j], g[i]));
      den += wi * wj * h * h * std::norm(f(g[i], g[j]));
    }
  return num / den;
}

}  // namespace

TEST(ExchangeOverlap, SymmetricAntisymmetricAndMixed) {
  const auto g = jsa_grid();
  EXPECT_NEAR(std::real(exchange_overlap(Jsa2D::from_function(g, sym_part))), 1.0, 1e-9);
  EXPECT_NEAR(std::real(exchange_overlap(Jsa2D::from_function(g, anti_part))), -1.0, 1e-9);

  // Normalize both parts separately so the mix has equal weight.
  auto norm_of = [&](auto&& f) {
    double s = 0.0;
    const double h = g[1] - g[0];
    for (std::size_t i = 0; i < g.size(); ++i)
      for (std::size_t j = 0; j < g.size(); ++j) {
        const double wi = (i == 0 || i + 1 == g.size()) ? 0.5 : 1.0;
        const double wj = (j == 0 || j + 1 == g.size()) ? 0.5 : 1.0;
        s += wi * wj * h * h * std::norm(f(g[i], g[j]));
      }
    return std::sqrt(s);
  };
  const double ns = norm_of(sym_part), na = norm_of(anti_part);
  auto mixed = [&](double a, double b) { return sym_part(a, b) / ns + anti_part(a, b) / na; };
  const cplx ov = exchange_overlap(Jsa2D::from_function(g, mixed));
  EXPECT_NEAR(std::abs(ov), 0.0, 1e-9);
  EXPECT_NEAR(std::abs(ov - overlap_oracle(g, mixed)), 0.0, 1e-12);
}

TEST(ExchangeOverlap, MagnitudeBoundedAndRejectsNonSquare) {
  const auto g = jsa_grid();
  auto skew = [](double a, double b) {
    return std::exp(-0.5 * (a - 1.0) * (a - 1.0) - 0.3 * (b + 0.5) * (b + 0.5)) * std::polar(1.0, 0.4 * a * b);
  };
  const cplx ov = exchange_overlap(Jsa2D::from_function(g, skew));
  EXPECT_LE(std::abs(ov), 1.0 + 1e-9);
  EXPECT_NEAR(std::abs(ov - overlap_oracle(g, skew)), 0.0, 1e-12);
  const Jsa2D rect(detail::linspace(-1, 1, 5), detail::linspace(-1, 1, 7), std::vector<cplx>(35, 1.0));
  EXPECT_THROW(exchange_overlap(rect), std::invalid_argument);
}

TEST(AmplitudeCsv, RoundTripKeepsGrid) {
  const auto amp = make_state(StateDescriptor::gauss_state(1.3), 1024);
  std::stringstream ss;
  write_amplitude_csv(ss, amp);
  const auto d = read_amplitude_csv(ss);
  ASSERT_EQ(d.kind, StateKind::tabulated);
  const auto back = make_state(d);
  ASSERT_EQ(back.size(), amp.size());
  for (std::size_t i = 0; i < amp.size(); ++i) {
    EXPECT_EQ(back.omega()[i], amp.omega()[i]);
    EXPECT_EQ(back.values()[i], amp.values()[i]);
  }
}

TEST(AmplitudeCsv, RejectsBadInput) {
  std::stringstream bad_header("omega,re,im\n0,1,0\n");
  EXPECT_THROW(read_amplitude_csv(bad_header), std::invalid_argument);
  std::stringstream uneven("omega_rad_per_ps,re,im\n0,1,0\n1,1,0\n2.00001,1,0\n3,1,0\n");
  EXPECT_THROW(read_amplitude_csv(uneven), std::invalid_argument);
  std::stringstream junk("omega_rad_per_ps,re,im\n0,1,x\n1,1,0\n");
  EXPECT_THROW(read_amplitude_csv(junk), std::invalid_argument);
}
