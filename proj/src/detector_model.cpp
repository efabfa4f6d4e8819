#include "icsim/detector_model.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>
#include <stdexcept>

#include "icsim/closed_form.hpp"

namespace icsim {

namespace {

constexpr double kSqrt2 = std::numbers::sqrt2;

// exp(x^2) erfc(x) for large positive x.
double erfcx_asymptotic(double x) {
  const double inv = 1.0 / (x * x);
  return (1.0 - 0.5 * inv + 0.75 * inv * inv - 1.875 * inv * inv * inv) / (x * std::sqrt(std::numbers::pi));
}

// exp(l^2 s^2 / 2 - l tau) erfc((l s^2 - tau) / (s sqrt 2))
double exp_gauss_branch(double tau, double lambda, double sigma) {
  const double u = (lambda * sigma * sigma - tau) / (sigma * kSqrt2);
  if (u < 25.0) return std::exp(0.5 * lambda * lambda * sigma * sigma - lambda * tau) * std::erfc(u);
  return std::exp(-tau * tau / (2.0 * sigma * sigma)) * erfcx_asymptotic(u);
}

// Integral of |g1|^2 over the real line.
double bunching_area(double tau_c, LineShape shape) {
  return shape == LineShape::gaussian ? tau_c * std::sqrt(std::numbers::pi) : tau_c;
}

template <typename F>
double simpson(F f, double a, double b, int intervals) {
  if (intervals % 2) ++intervals;
  const double h = (b - a) / intervals;
  double sum = f(a) + f(b);
  for (int k = 1; k < intervals; ++k) sum += f(a + k * h) * (k % 2 ? 4.0 : 2.0);
  return sum * h / 3.0;
}

void check_profile(const G2Profile& p) {
  if (!(p.peak >= 1.0 && p.peak <= 3.0)) throw std::invalid_argument("G2Profile: peak must lie in [1, 3]");
  if (!(p.tau_c > 0.0)) throw std::invalid_argument("G2Profile: tau_c must be positive");
}

struct Binning {
  long half = 0;        // bins on each side of the central one
  double width = 0;
  double half_span = 0;

  long count() const { return 2 * half + 1; }
  double center(long k) const { return (k - half) * width; }
};

Binning make_binning(const DetectorSpec& det) {
  if (!(det.bin_width > 0.0)) throw std::invalid_argument("DetectorSpec: bin_width must be positive");
  if (!(det.window >= 0.5 * det.bin_width)) throw std::invalid_argument("DetectorSpec: window must cover at least one bin");
  Binning b;
  b.half = static_cast<long>(std::floor(det.window / det.bin_width - 0.5 + 1e-9));
  b.width = det.bin_width;
  b.half_span = (b.half + 0.5) * det.bin_width;
  return b;
}

// Normalization of the pair-delay density over the histogram span.
double window_integral(const JitteredProfile& jp, double half_span) {
  const double excess =
      simpson([&](double t) { return jittered_bunching(t, jp.ideal.tau_c, jp.kernel_sigma, jp.ideal.shape); }, -half_span,
              half_span, 20000);
  return 2.0 * half_span + (jp.ideal.peak - 1.0) * excess;
}

double bin_average(const JitteredProfile& jp, double center, double width) {
  return simpson([&](double t) { return jittered_bunching(t, jp.ideal.tau_c, jp.kernel_sigma, jp.ideal.shape); },
                 center - 0.5 * width, center + 0.5 * width, 16) /
         width;
}

}  // namespace

std::string_view to_string(LineShape shape) { return shape == LineShape::gaussian ? "gaussian" : "exponential"; }

LineShape line_shape_from_string(std::string_view name) {
  if (name == "gaussian") return LineShape::gaussian;
  if (name == "exponential") return LineShape::exponential;
  throw std::invalid_argument("unknown line shape '" + std::string(name) + "'");
}

std::string_view to_string(JitterConvention c) {
  switch (c) {
    case JitterConvention::combined_std: return "combined_std";
    case JitterConvention::combined_fwhm: return "combined_fwhm";
    case JitterConvention::per_detector_std: return "per_detector_std";
    case JitterConvention::per_detector_fwhm: return "per_detector_fwhm";
  }
  return "combined_std";
}

JitterConvention jitter_convention_from_string(std::string_view name) {
  for (auto c : {JitterConvention::combined_std, JitterConvention::combined_fwhm, JitterConvention::per_detector_std,
                 JitterConvention::per_detector_fwhm})
    if (to_string(c) == name) return c;
  throw std::invalid_argument("unknown jitter convention '" + std::string(name) + "'");
}

double per_detector_sigma(double quoted, JitterConvention convention) {
  if (!(quoted >= 0.0)) throw std::invalid_argument("jitter must be non-negative");
  const double fwhm_to_std = 1.0 / (2.0 * std::sqrt(2.0 * std::numbers::ln2));
  switch (convention) {
    case JitterConvention::combined_std: return quoted / kSqrt2;
    case JitterConvention::combined_fwhm: return quoted * fwhm_to_std / kSqrt2;
    case JitterConvention::per_detector_std: return quoted;
    case JitterConvention::per_detector_fwhm: return quoted * fwhm_to_std;
  }
  return quoted;
}

double G2Profile::bunching(double tau) const {
  if (shape == LineShape::gaussian) return std::exp(-(tau * tau) / (tau_c * tau_c));
  return std::exp(-2.0 * std::abs(tau) / tau_c);
}

G2Profile ideal_profile(double alpha_sq, double tau_c, LineShape shape) {
  if (!(tau_c > 0.0)) throw std::invalid_argument("ideal_profile: tau_c must be positive");
  return {g2_idler(alpha_sq), tau_c, shape};
}

double DetectorSpec::kernel_sigma() const { return kSqrt2 * jitter_sigma; }

double jittered_bunching(double tau, double tau_c, double sigma, LineShape shape) {
  if (!(tau_c > 0.0)) throw std::invalid_argument("jittered_bunching: tau_c must be positive");
  if (!(sigma >= 0.0)) throw std::invalid_argument("jittered_bunching: sigma must be non-negative");
  if (sigma == 0.0) return G2Profile{2.0, tau_c, shape}.bunching(tau);
  if (shape == LineShape::gaussian) {
    const double s0_sq = 0.5 * tau_c * tau_c;
    const double var = s0_sq + sigma * sigma;
    return std::sqrt(s0_sq / var) * std::exp(-tau * tau / (2.0 * var));
  }
  const double lambda = 2.0 / tau_c;
  return 0.5 * (exp_gauss_branch(tau, lambda, sigma) + exp_gauss_branch(-tau, lambda, sigma));
}

double jitter_reduction(double tau_c, double kernel_sigma, LineShape shape) {
  return jittered_bunching(0.0, tau_c, kernel_sigma, shape);
}

double JitteredProfile::value(double tau) const {
  return 1.0 + (ideal.peak - 1.0) * jittered_bunching(tau, ideal.tau_c, kernel_sigma, ideal.shape);
}

JitteredProfile apply_jitter(const G2Profile& profile, const DetectorSpec& det) {
  check_profile(profile);
  if (!(det.jitter_sigma >= 0.0)) throw std::invalid_argument("apply_jitter: jitter_sigma must be non-negative");
  JitteredProfile out;
  out.ideal = profile;
  out.kernel_sigma = det.kernel_sigma();
  out.reduction = jitter_reduction(profile.tau_c, out.kernel_sigma, profile.shape);
  return out;
}

double reconstruct_peak(double measured, const DetectorSpec& det, double tau_c, LineShape shape) {
  if (!(measured >= 1.0)) throw std::domain_error("reconstruct_peak: measured g2(0) below 1 has no bunching to rescale");
  if (!(det.jitter_sigma >= 0.0)) throw std::invalid_argument("reconstruct_peak: jitter_sigma must be non-negative");
  return 1.0 + (measured - 1.0) / jitter_reduction(tau_c, det.kernel_sigma(), shape);
}

double fit_coherence_time(double reduction, const DetectorSpec& det, LineShape shape) {
  if (!(reduction > 0.0 && reduction < 1.0)) throw std::invalid_argument("fit_coherence_time: reduction must lie in (0, 1)");
  const double sigma = det.kernel_sigma();
  if (!(sigma > 0.0)) throw std::invalid_argument("fit_coherence_time: needs a nonzero jitter");
  double lo = std::log(sigma * 1e-6), hi = std::log(sigma * 1e6);
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (jitter_reduction(std::exp(mid), sigma, shape) < reduction)
      lo = mid;
    else
      hi = mid;
  }
  return std::exp(0.5 * (lo + hi));
}

G2Curve simulate_coincidences(const G2Profile& profile, const DetectorSpec& det, double pair_rate,
                              double accidental_rate, double duration, std::uint64_t seed) {
  check_profile(profile);
  if (!(pair_rate >= 0.0) || !(accidental_rate >= 0.0)) throw std::invalid_argument("simulate_coincidences: rates must be non-negative");
  if (!(duration > 0.0)) throw std::invalid_argument("simulate_coincidences: duration must be positive");
  const Binning bins = make_binning(det);
  const auto jp = apply_jitter(profile, det);

  G2Curve curve;
  curve.total_pairs = static_cast<std::uint64_t>(std::llround(pair_rate * duration));
  curve.total_accidentals = static_cast<std::uint64_t>(std::llround(accidental_rate * duration));
  if (curve.total_pairs + curve.total_accidentals == 0)
    throw std::domain_error("simulate_coincidences: no events (duration too short for the given rates)");
  if (det.bin_width >= profile.tau_c / 3.0) {
    std::ostringstream msg;
    msg << "bin_width " << det.bin_width << " s is not below tau_c/3 = " << profile.tau_c / 3.0 << " s";
    curve.warnings.push_back(msg.str());
  }

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_real_distribution<double> flat(-bins.half_span, bins.half_span);
  std::normal_distribution<double> jitter(0.0, jp.kernel_sigma > 0.0 ? jp.kernel_sigma : 1.0);
  std::normal_distribution<double> gauss_shape(0.0, profile.tau_c / kSqrt2);
  std::exponential_distribution<double> exp_shape(2.0 / profile.tau_c);

  const double flat_weight = 2.0 * bins.half_span;
  const double bunch_weight = (profile.peak - 1.0) * bunching_area(profile.tau_c, profile.shape);
  const double flat_fraction = flat_weight / (flat_weight + bunch_weight);

  std::vector<std::uint64_t> counts(static_cast<std::size_t>(bins.count()), 0);
  auto record = [&](double tau) {
    long k = static_cast<long>(std::floor((tau + bins.half_span) / bins.width));
    k = std::clamp(k, 0L, bins.count() - 1);
    ++counts[static_cast<std::size_t>(k)];
  };

  for (std::uint64_t i = 0; i < curve.total_pairs; ++i) {
    for (;;) {
      if (unit(rng) < flat_fraction) {
        record(flat(rng));
        break;
      }
      double tau = profile.shape == LineShape::gaussian ? gauss_shape(rng)
                                                        : (unit(rng) < 0.5 ? -1.0 : 1.0) * exp_shape(rng);
      if (jp.kernel_sigma > 0.0) tau += jitter(rng);
      if (std::abs(tau) <= bins.half_span) {
        record(tau);
        break;
      }
    }
  }
  for (std::uint64_t i = 0; i < curve.total_accidentals; ++i) record(flat(rng));

  const double z = window_integral(jp, bins.half_span);
  curve.background_per_bin = static_cast<double>(curve.total_pairs) * bins.width / z +
                             static_cast<double>(curve.total_accidentals) * bins.width / (2.0 * bins.half_span);
  curve.counts = std::move(counts);
  for (long k = 0; k < bins.count(); ++k) {
    curve.taus.push_back(bins.center(k));
    curve.values.push_back(static_cast<double>(curve.counts[static_cast<std::size_t>(k)]) / curve.background_per_bin);
  }
  return curve;
}

std::vector<double> expected_g2_curve(const G2Profile& profile, const DetectorSpec& det, double pair_rate,
                                      double accidental_rate, double duration) {
  check_profile(profile);
  const Binning bins = make_binning(det);
  const auto jp = apply_jitter(profile, det);
  const double pairs = std::round(pair_rate * duration);
  const double accidentals = std::round(accidental_rate * duration);
  const double z = window_integral(jp, bins.half_span);
  const double acc_per_bin = accidentals * bins.width / (2.0 * bins.half_span);
  const double background = pairs * bins.width / z + acc_per_bin;
  if (!(background > 0.0)) throw std::domain_error("expected_g2_curve: no events");
  std::vector<double> out;
  for (long k = 0; k < bins.count(); ++k) {
    const double mean_value = 1.0 + (profile.peak - 1.0) * bin_average(jp, bins.center(k), bins.width);
    out.push_back((pairs * bins.width * mean_value / z + acc_per_bin) / background);
  }
  return out;
}

double fit_peak(const G2Curve& curve, const G2Profile& profile, const DetectorSpec& det) {
  check_profile(profile);
  if (curve.taus.empty() || curve.taus.size() != curve.values.size())
    throw std::invalid_argument("fit_peak: malformed curve");
  const auto jp = apply_jitter(profile, det);
  std::vector<double> basis;
  basis.reserve(curve.taus.size());
  for (double tau : curve.taus) basis.push_back(bin_average(jp, tau, det.bin_width));

  auto solve = [&](auto weight) {
    double num = 0, den = 0;
    for (std::size_t k = 0; k < basis.size(); ++k) {
      const double w = weight(k);
      num += w * basis[k] * (curve.values[k] - 1.0);
      den += w * basis[k] * basis[k];
    }
    if (!(den > 0.0)) throw std::domain_error("fit_peak: bunching shape vanishes on the histogram");
    return num / den;
  };
  const double first = solve([](std::size_t) { return 1.0; });
  const double amplitude = solve([&](std::size_t k) { return 1.0 / std::max(1e-12, 1.0 + first * basis[k]); });
  return 1.0 + amplitude * jp.reduction;
}

}  // namespace icsim
