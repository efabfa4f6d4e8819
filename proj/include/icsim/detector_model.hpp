#pragma once

// Phenomenological detection layer: g2(tau) line shapes, Gaussian timing-jitter
// convolution of the bunching term, peak reconstruction and a seeded Monte
// Carlo coincidence histogram.

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace icsim {

// Line shape of |g1(tau)|^2:
//   gaussian     exp(-tau^2 / tau_c^2)
//   exponential  exp(-2 |tau| / tau_c)   (Lorentzian spectrum, |g1| = exp(-|tau|/tau_c))
enum class LineShape { gaussian, exponential };

std::string_view to_string(LineShape shape);
LineShape line_shape_from_string(std::string_view name);

// g2(tau) = 1 + (peak - 1) |g1(tau)|^2
struct G2Profile {
  double peak = 2;
  double tau_c = 1e-9;
  LineShape shape = LineShape::gaussian;

  double bunching(double tau) const;  // |g1(tau)|^2
  double value(double tau) const { return 1.0 + (peak - 1.0) * bunching(tau); }
};

G2Profile ideal_profile(double alpha_sq, double tau_c, LineShape shape = LineShape::gaussian);

struct DetectorSpec {
  double jitter_sigma = 0;  // per-detector Gaussian std (s)
  double bin_width = 0;     // histogram bin (s)
  double window = 0;        // max |tau| (s)

  // Std of the delay-difference kernel, sqrt(2) * jitter_sigma.
  double kernel_sigma() const;
};

// How a quoted jitter figure maps onto the per-detector std.
enum class JitterConvention { combined_std, combined_fwhm, per_detector_std, per_detector_fwhm };

std::string_view to_string(JitterConvention convention);
JitterConvention jitter_convention_from_string(std::string_view name);
double per_detector_sigma(double quoted, JitterConvention convention);

// Normalized Gaussian kernel (std sigma) convolved with |g1|^2, evaluated at tau.
double jittered_bunching(double tau, double tau_c, double sigma, LineShape shape);

// Measured-to-ideal ratio of the bunching amplitude at tau = 0. Depends only on
// (tau_c, kernel sigma, shape).
double jitter_reduction(double tau_c, double kernel_sigma, LineShape shape);

struct JitteredProfile {
  G2Profile ideal;
  double kernel_sigma = 0;
  double reduction = 1;  // (measured - 1) / (peak - 1)

  double peak() const { return 1.0 + (ideal.peak - 1.0) * reduction; }
  double value(double tau) const;
};

JitteredProfile apply_jitter(const G2Profile& profile, const DetectorSpec& det);

// Inverts the affine jitter map: ideal = 1 + (measured - 1) / reduction.
double reconstruct_peak(double measured, const DetectorSpec& det, double tau_c, LineShape shape);

// Coherence time at which the jitter kernel of `det` reduces the bunching
// amplitude by `reduction` (bisection on the monotone reduction curve).
double fit_coherence_time(double reduction, const DetectorSpec& det, LineShape shape);

struct G2Curve {
  std::vector<double> taus;            // bin centers (s)
  std::vector<double> values;          // counts / expected flat background
  std::vector<std::uint64_t> counts;   // raw coincidences per bin
  std::uint64_t total_pairs = 0;
  std::uint64_t total_accidentals = 0;
  double background_per_bin = 0;      // expected flat level used for normalization
  std::vector<std::string> warnings;
};

// Pair delays are drawn from the jittered g2 density over the window
// (including its flat floor); accidentals are uniform over the window. The
// histogram has one bin centered on tau = 0 and spans
// [-(n + 1/2) b, (n + 1/2) b] with n = floor(window / b - 1/2).
// Pair and accidental counts are round(rate * duration).
G2Curve simulate_coincidences(const G2Profile& profile, const DetectorSpec& det, double pair_rate,
                              double accidental_rate, double duration, std::uint64_t seed);

// Expected normalized histogram for the same inputs (bin-averaged).
std::vector<double> expected_g2_curve(const G2Profile& profile, const DetectorSpec& det, double pair_rate,
                                      double accidental_rate, double duration);

// Peak g2(0) of the jittered profile shape fitted to a histogram by weighted
// one-parameter least squares on the bunching amplitude (accidental-free model).
double fit_peak(const G2Curve& curve, const G2Profile& profile, const DetectorSpec& det);

}  // namespace icsim
