#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "icsim/closed_form.hpp"
#include "icsim/detector_model.hpp"

using namespace icsim;

namespace {

constexpr double kNs = 1e-9;

DetectorSpec quoted_jitter_detector() { return {per_detector_sigma(0.4 * kNs, JitterConvention::combined_std), 2e-11, 3 * kNs}; }

// Direct quadrature of the Gaussian kernel against |g1|^2 (trapezoid on a wide grid).
double convolve_numerically(double tau, double tau_c, double sigma, LineShape shape) {
  const G2Profile p{2.0, tau_c, shape};
  const double span = 12 * sigma + 40 * tau_c;
  const int n = 400000;
  const double h = 2 * span / n;
  double sum = 0;
  for (int k = 0; k <= n; ++k) {
    const double u = -span + k * h;
    const double kernel = std::exp(-u * u / (2 * sigma * sigma)) / (sigma * std::sqrt(2 * std::numbers::pi));
    sum += (k == 0 || k == n ? 0.5 : 1.0) * kernel * p.bunching(tau - u);
  }
  return sum * h;
}

// Upper-tail z score of a chi-square statistic (Wilson-Hilferty).
double chi_square_z(double chi2, double dof) {
  const double v = 2.0 / (9.0 * dof);
  return (std::cbrt(chi2 / dof) - (1.0 - v)) / std::sqrt(v);
}

}  // namespace

TEST(Profile, IdealPeaks) {
  EXPECT_DOUBLE_EQ(ideal_profile(0.0, kNs).peak, 2.0);
  EXPECT_NEAR(ideal_profile(4.0, kNs).peak, 1.36, 1e-15);
  const auto p = ideal_profile(0.0, kNs);
  EXPECT_NEAR(p.value(50 * kNs), 1.0, 1e-15);
  EXPECT_NEAR(ideal_profile(0.0, kNs, LineShape::exponential).value(50 * kNs), 1.0, 1e-15);
  EXPECT_THROW(ideal_profile(0.0, 0.0), std::invalid_argument);
}

TEST(Jitter, GaussianClosedForm) {
  const double tau_c = 0.7 * kNs, s = 0.3 * kNs;
  EXPECT_NEAR(jitter_reduction(tau_c, s, LineShape::gaussian), tau_c / std::sqrt(tau_c * tau_c + 2 * s * s), 1e-14);
}

TEST(Jitter, ConvolutionMatchesQuadrature) {
  const double tau_c = 0.6 * kNs, s = 0.35 * kNs;
  for (auto shape : {LineShape::gaussian, LineShape::exponential})
    for (double tau : {0.0, 0.2 * kNs, -0.5 * kNs, 1.5 * kNs})
      EXPECT_NEAR(jittered_bunching(tau, tau_c, s, shape), convolve_numerically(tau, tau_c, s, shape), 1e-7)
          << to_string(shape) << " tau=" << tau;
}

TEST(Jitter, ExponentialFarTailStable) {
  const double v = jittered_bunching(0.0, 1e-12, 1e-9, LineShape::exponential);
  EXPECT_TRUE(std::isfinite(v));
  EXPECT_NEAR(v, 1e-12 / (1e-9 * std::sqrt(2 * std::numbers::pi)), 1e-3 * v);
}

TEST(Jitter, ZeroJitterKeepsPeak) {
  const auto jp = apply_jitter(ideal_profile(0.0, kNs), {0.0, 1e-11, 3 * kNs});
  EXPECT_EQ(jp.peak(), 2.0);
}

TEST(Jitter, LargeJitterWashesOutBunching) {
  const auto jp = apply_jitter(ideal_profile(0.0, 1e-12), {1e-9, 1e-11, 3 * kNs});
  EXPECT_NEAR(jp.peak(), 1.0, 1e-2);
}

TEST(Jitter, ReductionIndependentOfPeak) {
  const auto det = quoted_jitter_detector();
  const double base = apply_jitter({1.2, 0.5 * kNs, LineShape::gaussian}, det).reduction;
  for (double peak : {1.5, 2.0}) EXPECT_EQ(apply_jitter({peak, 0.5 * kNs, LineShape::gaussian}, det).reduction, base);
}

TEST(Jitter, MonotoneInJitterAndCoherenceTime) {
  double previous = 3.0;
  for (double s : {0.1, 0.2, 0.4, 0.8}) {
    const double m = apply_jitter(ideal_profile(0.0, 0.5 * kNs), {s * kNs, 1e-11, 3 * kNs}).peak();
    EXPECT_LT(m, previous);
    previous = m;
  }
  previous = 1.0;
  for (double tc : {0.1, 0.3, 0.9, 2.7}) {
    const double m = apply_jitter(ideal_profile(0.0, tc * kNs, LineShape::exponential), quoted_jitter_detector()).peak();
    EXPECT_GT(m, previous);
    previous = m;
  }
}

TEST(Jitter, FittedCoherenceTimeGivesMeasuredPeak) {
  const auto det = quoted_jitter_detector();
  for (auto shape : {LineShape::gaussian, LineShape::exponential}) {
    const double tau_c = fit_coherence_time(0.75, det, shape);
    EXPECT_NEAR(apply_jitter(ideal_profile(0.0, tau_c, shape), det).peak(), 1.75, 1e-12);
  }
  // Gaussian inverse of rho = tau_c / sqrt(tau_c^2 + 2 s_k^2).
  const double s_k = det.kernel_sigma();
  EXPECT_NEAR(fit_coherence_time(0.75, det, LineShape::gaussian), std::sqrt(2.0) * s_k * 0.75 / std::sqrt(1 - 0.5625),
              1e-12 * s_k);
}

TEST(Reconstruct, RoundTrip) {
  const auto det = quoted_jitter_detector();
  const double tau_c = fit_coherence_time(0.75, det, LineShape::gaussian);
  EXPECT_NEAR(reconstruct_peak(1.75, det, tau_c, LineShape::gaussian), 2.0, 1e-12);
  EXPECT_EQ(reconstruct_peak(1.0, det, tau_c, LineShape::gaussian), 1.0);
  for (int k = 0; k <= 20; ++k) {
    const double peak = 1.0 + k / 20.0;
    const double measured = apply_jitter({peak, tau_c, LineShape::gaussian}, det).peak();
    EXPECT_NEAR(reconstruct_peak(measured, det, tau_c, LineShape::gaussian), peak, 1e-9);
  }
  EXPECT_THROW(reconstruct_peak(0.9, det, tau_c, LineShape::gaussian), std::domain_error);
}

TEST(Conventions, PerDetectorSigma) {
  EXPECT_NEAR(per_detector_sigma(1.0, JitterConvention::per_detector_std), 1.0, 0);
  EXPECT_NEAR(per_detector_sigma(1.0, JitterConvention::combined_std), 1 / std::sqrt(2.0), 1e-15);
  EXPECT_NEAR(per_detector_sigma(2.3548200450309493, JitterConvention::per_detector_fwhm), 1.0, 1e-12);
  EXPECT_THROW(jitter_convention_from_string("fuzzy"), std::invalid_argument);
  EXPECT_THROW(line_shape_from_string("lorentz"), std::invalid_argument);
}

TEST(MonteCarlo, DeterministicPerSeed) {
  const auto det = quoted_jitter_detector();
  const auto p = ideal_profile(0.0, 0.5 * kNs);
  const auto a = simulate_coincidences(p, det, 1e4, 100, 10, 42);
  const auto b = simulate_coincidences(p, det, 1e4, 100, 10, 42);
  const auto c = simulate_coincidences(p, det, 1e4, 100, 10, 43);
  EXPECT_EQ(a.counts, b.counts);
  EXPECT_EQ(a.values, b.values);
  EXPECT_NE(a.counts, c.counts);
}

TEST(MonteCarlo, FlatWithoutBunching) {
  const DetectorSpec det{0.2 * kNs, 1e-10, 3 * kNs};
  const auto curve = simulate_coincidences({1.0, 0.5 * kNs, LineShape::gaussian}, det, 2e5, 0, 1, 7);
  ASSERT_FALSE(curve.counts.empty());
  for (std::size_t k = 0; k < curve.counts.size(); ++k)
    EXPECT_LT(std::abs(double(curve.counts[k]) - curve.background_per_bin), 3.0 * std::sqrt(curve.background_per_bin) + 1);
}

TEST(MonteCarlo, HistogramConsistentWithProfile) {
  const auto det = quoted_jitter_detector();
  const double tau_c = fit_coherence_time(0.75, det, LineShape::gaussian);
  const auto p = ideal_profile(0.0, tau_c);
  const auto curve = simulate_coincidences(p, det, 1e5, 2e4, 10, 11);
  EXPECT_EQ(curve.total_pairs, 1000000u);
  const auto expected = expected_g2_curve(p, det, 1e5, 2e4, 10);
  ASSERT_EQ(expected.size(), curve.counts.size());
  double chi2 = 0;
  for (std::size_t k = 0; k < expected.size(); ++k) {
    const double mu = expected[k] * curve.background_per_bin;
    chi2 += std::pow(double(curve.counts[k]) - mu, 2) / mu;
  }
  // p > 0.001 for the upper tail.
  EXPECT_LT(chi_square_z(chi2, double(expected.size())), 3.09);
}

TEST(MonteCarlo, FittedPeakNearAnalytic) {
  const auto det = quoted_jitter_detector();
  const double tau_c = fit_coherence_time(0.75, det, LineShape::gaussian);
  const auto p = ideal_profile(0.0, tau_c);
  const auto curve = simulate_coincidences(p, det, 1e5, 0, 10, 5);
  EXPECT_NEAR(fit_peak(curve, p, det), apply_jitter(p, det).peak(), 0.03);
}

TEST(MonteCarlo, EmptyRunIsAnError) {
  EXPECT_THROW(simulate_coincidences(ideal_profile(0.0, kNs), quoted_jitter_detector(), 1.0, 0, 0.1, 1), std::domain_error);
}

TEST(MonteCarlo, WarnsOnCoarseBins) {
  const auto curve = simulate_coincidences(ideal_profile(0.0, 0.1 * kNs), {0.1 * kNs, 0.05 * kNs, 2 * kNs}, 1e4, 0, 1, 1);
  EXPECT_FALSE(curve.warnings.empty());
}
