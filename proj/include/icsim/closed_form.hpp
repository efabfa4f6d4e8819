#pragma once

// Closed-form photon statistics, counting rates and complementarity metrics of
// the dual four-wave-mixing interferometer. All formulas take the mean seed
// photon number |alpha|^2; the phase of alpha never enters.

#include <algorithm>
#include <cmath>
#include <complex>
#include <concepts>
#include <stdexcept>

namespace icsim {

template <std::floating_point Real>
struct BasicInterferometerParams {
  std::complex<Real> T{1};   // signal-path transmittance coefficient, |T| <= 1
  Real gamma = 1;            // vacuum-field correlation (mode overlap), [0, 1]
  Real alpha_sq = 0;         // mean seed photon number
  Real coupling_sq = 1;      // |g t A|^2, overall rate scale
  Real dphi = 0;             // idler phase difference (rad)
};

using InterferometerParams = BasicInterferometerParams<double>;

template <std::floating_point Real>
struct BasicDualityMetrics {
  Real V = 0;
  Real K = 0;
  Real P = 0;
  Real C = 0;
  Real residual_VK = 0;   // |V^2 + K^2 - 1| with the ideal-overlap visibility
  Real residual_KPC = 0;  // |K^2 - P^2 - C^2|
};

using DualityMetrics = BasicDualityMetrics<double>;

template <std::floating_point Real>
struct BasicCountingRate {
  Real induced = 0;
  Real stimulated = 0;
  Real total() const { return induced + stimulated; }
};

using CountingRate = BasicCountingRate<double>;

namespace detail {

template <std::floating_point Real>
void check_transmittance(Real t) {
  if (!(std::abs(t) <= Real(1) + Real(1e-12))) throw std::invalid_argument("|T| must not exceed 1");
}

template <std::floating_point Real>
void check_alpha_sq(Real alpha_sq) {
  if (!(alpha_sq >= Real(0))) throw std::invalid_argument("|alpha|^2 must be non-negative");
}

template <std::floating_point Real>
void check_gamma(Real gamma) {
  if (!(gamma >= Real(0) && gamma <= Real(1))) throw std::invalid_argument("gamma must lie in [0, 1]");
}

// 2 + |alpha|^2 + |alpha T|^2, shared by the visibility and all which-path metrics.
template <std::floating_point Real>
Real which_path_denominator(Real t, Real alpha_sq) {
  return Real(2) + alpha_sq + alpha_sq * t * t;
}

}  // namespace detail

template <std::floating_point Real>
Real mean_idler_photons(Real alpha_sq, Real r) {
  detail::check_alpha_sq(alpha_sq);
  const Real s = std::sinh(std::abs(r));
  return (alpha_sq + 1) * s * s;
}

template <std::floating_point Real>
Real mean_signal_photons(Real alpha_sq, Real r) {
  detail::check_alpha_sq(alpha_sq);
  const Real s = std::sinh(std::abs(r)), c = std::cosh(std::abs(r));
  return alpha_sq * c * c + s * s;
}

// Zero-delay second-order coherence of the signal mode of S(r)|0>|alpha>.
template <std::floating_point Real>
Real g2_signal(Real alpha_sq, Real r) {
  detail::check_alpha_sq(alpha_sq);
  const Real s2 = std::pow(std::sinh(std::abs(r)), 2);
  const Real c2 = std::pow(std::cosh(std::abs(r)), 2);
  const Real mean = alpha_sq * c2 + s2;
  if (!(mean > Real(0))) throw std::domain_error("g2_signal: vacuum input (alpha = 0, r = 0) has no photons");
  const Real num = alpha_sq * alpha_sq * c2 * c2 + 4 * alpha_sq * c2 * s2 + 2 * s2 * s2;
  return num / (mean * mean);
}

// Zero-delay second-order coherence of the idler mode; independent of r.
template <std::floating_point Real>
Real g2_idler(Real alpha_sq) {
  detail::check_alpha_sq(alpha_sq);
  const Real d = alpha_sq + 1;
  return Real(1) + (2 * alpha_sq + 1) / (d * d);
}

// Idler single-count rate split into the induced (spontaneous, gamma-weighted)
// and stimulated (seed-driven) contributions.
template <std::floating_point Real>
BasicCountingRate<Real> counting_rate(const BasicInterferometerParams<Real>& p) {
  const Real t = std::abs(p.T);
  detail::check_transmittance(t);
  detail::check_gamma(p.gamma);
  detail::check_alpha_sq(p.alpha_sq);
  const Real c = std::cos(p.dphi);
  return {p.coupling_sq * (2 + 2 * t * p.gamma * c), p.coupling_sq * p.alpha_sq * (t * t + 1 + 2 * t * c)};
}

// Single-count rate for identical cells with perfect signal overlap.
template <std::floating_point Real>
Real counting_rate_full_overlap(const BasicInterferometerParams<Real>& p) {
  const Real t = std::abs(p.T);
  detail::check_transmittance(t);
  detail::check_alpha_sq(p.alpha_sq);
  return p.coupling_sq * (p.alpha_sq * (t * t + 1) + 2 + 2 * t * (p.alpha_sq + 1) * std::cos(p.dphi));
}

template <std::floating_point Real>
Real visibility(Real T, Real alpha_sq, Real gamma) {
  const Real t = std::abs(T);
  detail::check_transmittance(t);
  detail::check_alpha_sq(alpha_sq);
  detail::check_gamma(gamma);
  return 2 * t * (alpha_sq + gamma) / (alpha_sq * (1 + t * t) + 2);
}

template <std::floating_point Real>
Real distinguishability(Real T, Real alpha_sq) {
  const Real t = std::min(std::abs(T), Real(1));
  detail::check_transmittance(std::abs(T));
  detail::check_alpha_sq(alpha_sq);
  const Real d = detail::which_path_denominator(t, alpha_sq);
  // 1 - (2t(a+1)/d)^2 factored as (1-t)(a(1-t)+2)(d + 2t(a+1)) / d^2, which
  // keeps full relative accuracy as t -> 1.
  const Real u = 1 - t;
  const Real k2 = u * (alpha_sq * u + 2) * (d + 2 * t * (alpha_sq + 1));
  return std::sqrt(std::max(Real(0), k2)) / d;
}

template <std::floating_point Real>
Real predictability(Real T, Real alpha_sq) {
  const Real t = std::min(std::abs(T), Real(1));
  detail::check_transmittance(std::abs(T));
  detail::check_alpha_sq(alpha_sq);
  return alpha_sq * (1 - t * t) / detail::which_path_denominator(t, alpha_sq);
}

template <std::floating_point Real>
Real concurrence(Real T, Real alpha_sq) {
  const Real t = std::min(std::abs(T), Real(1));
  detail::check_transmittance(std::abs(T));
  detail::check_alpha_sq(alpha_sq);
  return 2 * std::sqrt((1 - t * t) * (1 + alpha_sq)) / detail::which_path_denominator(t, alpha_sq);
}

// V carries gamma; the identity residuals always use the gamma = 1 visibility,
// since the complementarity identities hold only for ideal overlap.
template <std::floating_point Real>
BasicDualityMetrics<Real> duality_metrics(Real T, Real alpha_sq, Real gamma) {
  BasicDualityMetrics<Real> m;
  m.V = visibility(T, alpha_sq, gamma);
  m.K = distinguishability(T, alpha_sq);
  m.P = predictability(T, alpha_sq);
  m.C = concurrence(T, alpha_sq);
  const Real v_ideal = visibility(T, alpha_sq, Real(1));
  m.residual_VK = std::abs(v_ideal * v_ideal + m.K * m.K - 1);
  m.residual_KPC = std::abs(m.K * m.K - m.P * m.P - m.C * m.C);
  return m;
}

}  // namespace icsim
