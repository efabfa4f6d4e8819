#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

#include <gtest/gtest.h>

#include "icsim/interferometer.hpp"

using namespace icsim;
using cd = std::complex<double>;

namespace {

constexpr double kC = 1e-3;

JointState pert(double T, double alpha_sq, cd c1 = kC, cd c2 = kC) {
  const cd alpha(std::sqrt(alpha_sq), 0.0);
  return build_perturbative_state({0, alpha, c1}, {0, alpha, c2}, T, alpha);
}

// Weight with exactly one idler photon in arm i1 (first) or i2 (second),
// summed over all signal occupations straight from the amplitudes.
std::pair<double, double> idler_populations(const TruncatedState& s) {
  const Index i1 = s.mode_index(kIdler1), i2 = s.mode_index(kIdler2);
  double p1 = 0, p2 = 0;
  for (Index k = 0; k < s.size(); ++k) {
    const auto occ = s.occupation(k);
    const double w = std::norm(s.amplitudes()(k));
    if (occ[i1] == 1 && occ[i2] == 0) p1 += w;
    if (occ[i1] == 0 && occ[i2] == 1) p2 += w;
  }
  return {p1, p2};
}

}  // namespace

TEST(PerturbativeState, BalancedPathSuperpositionWithoutSeed) {
  const auto j = pert(1.0, 0.0);
  const auto rho = idler_reduced_density(j);
  EXPECT_NEAR(rho.rho(0, 0).real(), 0.5, 1e-14);
  EXPECT_NEAR(rho.rho(1, 1).real(), 0.5, 1e-14);
  EXPECT_NEAR(std::abs(rho.rho(0, 1)), 0.5, 1e-14);
  EXPECT_NEAR((rho.rho * rho.rho).trace().real(), 1.0, 1e-12);
}

TEST(PerturbativeState, FullWhichPathMarkingKillsCoherence) {
  const auto rho = idler_reduced_density(pert(0.0, 0.0));
  EXPECT_LT(std::abs(rho.rho(0, 1)), 1e-15);
}

TEST(PerturbativeState, PopulationsFromBruteForceSum) {
  const double a = 4.0, T = 0.5;
  const auto [p1, p2] = idler_populations(pert(T, a).state);
  const double expected = (1 + a) / (T * T * (1 + a) + 1 - T * T);
  EXPECT_NEAR(p1 / p2, expected, 1e-11);
}

TEST(PerturbativeState, NormalizationConstant) {
  const double a = 4.0, T = 0.5;
  const auto rho = idler_reduced_density(pert(T, a));
  EXPECT_NEAR(rho.normalization, 1.0 / (2 + a + T * T * a), 1e-12);
  EXPECT_NEAR(rho.rho(0, 0).real(), (1 + a) / 7.0, 1e-12);
  EXPECT_NEAR(std::abs(rho.rho(0, 1)), T * (1 + a) / 7.0, 1e-12);
  EXPECT_TRUE(is_valid_density(rho.rho));
}

TEST(PerturbativeState, SingleAddedCoherentNormIdentity) {
  // sum_n n |<n-1|alpha>|^2 = |alpha|^2 + 1, checked on the seeded s1 mode.
  const double a = 2.5;
  const cd alpha(std::sqrt(a), 0);
  const auto seed = coherent_state<double>(alpha, 40, kSignal1);
  const auto added = apply_creation(resize_mode(seed, kSignal1, 41), kSignal1);
  EXPECT_NEAR(added.norm_squared(), a + 1, 1e-12);
}

TEST(PerturbativeState, WarnsOutsidePerturbativeRegime) {
  EXPECT_TRUE(pert(0.5, 1.0).state.warnings().empty());
  EXPECT_FALSE(pert(0.5, 4.0, 0.2, 0.2).state.warnings().empty());
}

TEST(PerturbativeState, RejectsSuperUnitTransmittance) { EXPECT_THROW(pert(1.5, 0.0), std::invalid_argument); }

TEST(IdlerDensity, VacuumOnlyIsAnError) { EXPECT_THROW(idler_reduced_density(pert(0.5, 1.0, 0.0, 0.0)), std::domain_error); }

TEST(MetricsFromDensity, MaximallyMixed) {
  IdlerPathDensity d;
  d.rho << 0.5, 0, 0, 0.5;
  const auto m = metrics_from_density(d);
  EXPECT_NEAR(m.V, 0.0, 1e-15);
  EXPECT_NEAR(m.P, 0.0, 1e-15);
  EXPECT_NEAR(m.C, 1.0, 1e-15);
  EXPECT_NEAR(m.K, 1.0, 1e-15);
}

TEST(MetricsFromDensity, NoSeedT06) {
  const auto m = metrics_from_density(idler_reduced_density(pert(0.6, 0.0)));
  EXPECT_NEAR(m.C, 0.8, 1e-12);
  EXPECT_NEAR(m.K, 0.8, 1e-12);
  EXPECT_NEAR(m.P, 0.0, 1e-12);
  EXPECT_NEAR(m.V, 0.6, 1e-12);
}

TEST(MetricsFromDensity, EqualsClosedFormOnGrid) {
  for (double T : {0.0, 0.3, 0.5, 0.77, 1.0})
    for (double a : {0.0, 0.5, 4.0, 9.0, 25.0}) {
      const auto m = metrics_from_density(idler_reduced_density(pert(T, a)));
      const auto c = duality_metrics(T, a, 1.0);
      EXPECT_NEAR(m.V, c.V, 1e-10) << T << " " << a;
      EXPECT_NEAR(m.K, c.K, 1e-10) << T << " " << a;
      EXPECT_NEAR(m.P, c.P, 1e-10) << T << " " << a;
      EXPECT_NEAR(m.C, c.C, 1e-10) << T << " " << a;
    }
}

TEST(MetricsFromDensity, DeterminantIsQuarterConcurrenceSquared) {
  for (double T : {0.1, 0.5, 0.9}) {
    const auto rho = idler_reduced_density(pert(T, 3.0));
    const double det = rho.rho.determinant().real();
    EXPECT_GE(det, 0.0);
    EXPECT_NEAR(det, std::pow(metrics_from_density(rho).C, 2) / 4, 1e-15);
  }
}

TEST(MetricsFromDensity, UnequalCouplingsStillGiveValidDensity) {
  const auto rho = idler_reduced_density(pert(0.7, 2.0, 1e-3, 2e-3));
  EXPECT_TRUE(is_valid_density(rho.rho));
  const auto m = metrics_from_density(rho);
  EXPECT_NEAR(m.V * m.V + m.K * m.K, 1.0, 1e-12);
}

TEST(Fringe, MatchesClosedFormRate) {
  std::vector<double> phi;
  for (int k = 0; k < 13; ++k) phi.push_back(k * std::numbers::pi / 6);
  for (double T : {0.4, 1.0})
    for (double a : {0.0, 1.0, 4.0}) {
      InterferometerParams p{T, 1.0, a, 1e-6, 0.0};
      const auto scan = fringe_scan(p, phi);
      ASSERT_EQ(scan.size(), phi.size());
      const double scale = counting_rate(p).total();
      for (const auto& pt : scan) {
        p.dphi = pt.dphi;
        EXPECT_NEAR(pt.rate, counting_rate(p).total(), 1e-10 * scale);
      }
    }
}

TEST(Fringe, DarkFringeWithoutSeed) {
  const std::vector<double> phi{0.0, std::numbers::pi};
  const auto scan = fringe_scan({1.0, 1.0, 0.0, 1e-6, 0.0}, phi);
  EXPECT_LT(scan[1].rate, 1e-12 * scan[0].rate);
}

TEST(Fringe, VisibilityAtUnitTransmittance) {
  std::vector<double> phi{0.0, std::numbers::pi / 2, std::numbers::pi};
  for (double a : {0.0, 1.0, 4.0, 9.0}) {
    const auto scan = fringe_scan({1.0, 1.0, a, 1e-6, 0.0}, phi);
    EXPECT_NEAR(fringe_visibility(scan), visibility(1.0, a, 1.0), 1e-10);
  }
}

TEST(Fringe, PeriodicInTwoPi) {
  const std::vector<double> phi{0.3, 1.7, 4.0};
  std::vector<double> shifted;
  for (double x : phi) shifted.push_back(x + 2 * std::numbers::pi);
  const InterferometerParams p{0.6, 1.0, 2.0, 1e-6, 0.0};
  const auto a = fringe_scan(p, phi), b = fringe_scan(p, shifted);
  for (std::size_t k = 0; k < phi.size(); ++k) EXPECT_NEAR(a[k].rate, b[k].rate, 1e-12 * a[k].rate);
}

TEST(Chain, NoSqueezingNoIdlers) {
  const auto res = nonperturbative_chain({0, 1.0, {}}, {0, 1.0, {}}, 0.5, 1.0, 0.0);
  EXPECT_EQ(res.rate, 0.0);
}

TEST(Chain, UnseededUnitTransmittanceFullContrast) {
  const SourceParams cell{0.05, 0.0, {}};
  const double bright = nonperturbative_chain(cell, cell, 1.0, 0.0, 0.0).rate;
  const double dark = nonperturbative_chain(cell, cell, 1.0, 0.0, std::numbers::pi).rate;
  EXPECT_NEAR((bright - dark) / (bright + dark), 1.0, 1e-3);
}

TEST(Chain, MetricsCloseToClosedForm) {
  const cd alpha(1.0, 0.0);
  const auto res = nonperturbative_chain({0.05, alpha, {}}, {0.05, alpha, {}}, 0.5, alpha, 0.0);
  const auto m = metrics_from_density(idler_reduced_density(res.joint));
  const auto c = duality_metrics(0.5, 1.0, 1.0);
  EXPECT_NEAR(m.V, c.V, 5e-3);
  EXPECT_NEAR(m.K, c.K, 5e-3);
  EXPECT_NEAR(m.P, c.P, 5e-3);
  EXPECT_NEAR(m.C, c.C, 5e-3);
  EXPECT_LT(res.joint.state.leakage(), 1e-8);
}

TEST(Chain, ErrorContractsWhenSqueezingHalves) {
  const cd alpha(1.0, 0.0);
  auto error = [&](double r) {
    const auto res = nonperturbative_chain({r, alpha, {}}, {r, alpha, {}}, 0.5, alpha, 0.0);
    const auto m = metrics_from_density(idler_reduced_density(res.joint));
    const auto c = duality_metrics(0.5, 1.0, 1.0);
    return std::max({std::abs(m.V - c.V), std::abs(m.K - c.K), std::abs(m.P - c.P), std::abs(m.C - c.C)});
  };
  EXPECT_LE(error(0.025), 0.3 * error(0.05));
}

TEST(Chain, RateMatchesSmallSqueezingLimit) {
  // For small r the chain rate approaches r^2 times the closed-form rate.
  const double r = 0.01, a = 1.0, T = 0.7;
  const cd alpha(std::sqrt(a), 0);
  for (double phi : {0.0, 2.0}) {
    const auto res = nonperturbative_chain({r, alpha, {}}, {r, alpha, {}}, T, alpha, phi);
    InterferometerParams p{T, 1.0, a, r * r, phi};
    EXPECT_NEAR(res.rate / counting_rate(p).total(), 1.0, 5e-3);
  }
}

TEST(Chain, ThrowsOnInsufficientCutoff) {
  const cd alpha(2.0, 0.0);
  EXPECT_THROW(nonperturbative_chain({0.05, alpha, {}}, {0.05, alpha, {}}, 0.5, alpha, 0.0, 4), TruncationError);
}
