#include "icsim/interferometer.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace icsim {

namespace {

struct IdlerMoments {
  double n1 = 0;
  double n2 = 0;
  std::complex<double> cross{};  // <a_i1^dag a_i2>
};

IdlerMoments idler_moments(const TruncatedState& s) {
  return {mean_photon(s, kIdler1), mean_photon(s, kIdler2), correlation(s, kIdler1, kIdler2)};
}

double rate_at(const IdlerMoments& m, double dphi, double scale) {
  return scale * (m.n1 + m.n2 + 2.0 * (std::polar(1.0, dphi) * m.cross).real());
}

TruncatedState vacuum_mode(const char* label, Index dim) { return fock_state<double>(0, dim, label); }

// Smallest cutoff (at least the generic default) whose Poisson tail, weighted
// by the photon number it would shift, is below double precision.
Index seed_cutoff(double alpha_sq) {
  Index d = default_cutoff(alpha_sq, 0.0);
  if (alpha_sq == 0.0) return d;
  const auto log_p = [&](double n) { return n * std::log(alpha_sq) - alpha_sq - std::lgamma(n + 1.0); };
  for (;; ++d) {
    double tail = 0;
    for (Index n = d;; ++n) {
      const double term = (double(n) + 1.0) * std::exp(log_p(double(n)));
      tail += term;
      if (double(n) > alpha_sq && term < 1e-3 * tail + 1e-300) break;
    }
    if (tail < 1e-17) return d;
  }
}

}  // namespace

bool is_valid_density(const Eigen::Matrix2cd& rho, double tol) {
  if ((rho - rho.adjoint()).cwiseAbs().maxCoeff() > tol) return false;
  if (std::abs(rho.trace() - std::complex<double>(1.0)) > tol) return false;
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2cd> solver(rho, Eigen::EigenvaluesOnly);
  return solver.eigenvalues().minCoeff() >= -tol;
}

JointState build_perturbative_state(const SourceParams& cell1, const SourceParams& cell2, std::complex<double> T,
                                    std::complex<double> alpha, std::optional<Index> signal_dim) {
  const double refl = beam_splitter_matrix(T)(1, 0).real();
  const double alpha_sq = std::norm(alpha);
  const Index ds = signal_dim.value_or(seed_cutoff(alpha_sq));

  auto seed = resize_mode(coherent_state<double>(alpha, ds, kSignal1), kSignal1, ds + 1);
  const auto base = tensor(tensor(tensor(vacuum_mode(kIdler1, 2), vacuum_mode(kIdler2, 2)), seed), vacuum_mode(kSignal0, 2));

  const auto seeded_pair = apply_creation(base, kSignal1);
  const auto from_cell1 = cell1.coupling * apply_creation(seeded_pair, kIdler1);
  const auto from_cell2_transmitted = (cell2.coupling * std::conj(T)) * apply_creation(seeded_pair, kIdler2);
  const auto from_cell2_reflected =
      (cell2.coupling * refl) * apply_creation(apply_creation(base, kSignal0), kIdler2);

  const auto psi = base + from_cell1 + from_cell2_transmitted + from_cell2_reflected;

  std::vector<std::string> warnings;
  for (const auto& [name, c] : {std::pair{"cell1", cell1.coupling}, std::pair{"cell2", cell2.coupling}}) {
    const double strength = std::abs(c * alpha);
    if (strength > 0.1) {
      std::ostringstream msg;
      msg << "build_perturbative_state: |c alpha| = " << strength << " for " << name
          << " exceeds 0.1; first-order expansion is unreliable";
      warnings.push_back(msg.str());
    }
  }

  const auto unit = normalized(psi);
  JointState joint{unit.with_amplitudes(unit.amplitudes(), 0.0, std::move(warnings))};
  joint.c1 = cell1.coupling;
  joint.c2 = cell2.coupling;
  joint.alpha = alpha;
  joint.T = T;
  joint.construction = Construction::perturbative;
  joint.unnormalized_norm_sq = psi.norm_squared();
  return joint;
}

IdlerPathDensity idler_reduced_density(const JointState& joint) {
  const auto full = partial_trace(joint.state, {kIdler1, kIdler2});
  const std::vector<Index> one_zero{1, 0}, zero_one{0, 1};
  const Index a = full.basis_position(one_zero);
  const Index b = full.basis_position(zero_one);
  Eigen::Matrix2cd sub;
  sub << full.entries()(a, a), full.entries()(a, b), full.entries()(b, a), full.entries()(b, b);
  const double weight = sub.trace().real();
  if (!(weight > 1e-300)) throw std::domain_error("idler_reduced_density: state has no single-idler component");

  IdlerPathDensity out;
  out.rho = sub / weight;
  out.sector_weight = weight;
  out.normalization = std::norm(joint.c1) / (weight * joint.unnormalized_norm_sq);
  return out;
}

DualityMetrics metrics_from_density(const IdlerPathDensity& density) {
  const auto& rho = density.rho;
  const double coherence = std::abs(rho(0, 1));
  const double det = (rho(0, 0) * rho(1, 1) - rho(0, 1) * rho(1, 0)).real();
  DualityMetrics m;
  m.V = 2.0 * coherence;
  m.K = std::sqrt(std::max(0.0, 1.0 - 4.0 * coherence * coherence));
  m.P = std::abs(rho(0, 0).real() - rho(1, 1).real());
  m.C = 2.0 * std::sqrt(std::max(0.0, det));
  m.residual_VK = std::abs(m.V * m.V + m.K * m.K - 1.0);
  m.residual_KPC = std::abs(m.K * m.K - m.P * m.P - m.C * m.C);
  return m;
}

double idler_rate(const JointState& joint, double dphi) {
  return rate_at(idler_moments(joint.state), dphi, joint.unnormalized_norm_sq);
}

std::vector<FringePoint> fringe_scan(const InterferometerParams& p, std::span<const double> phi_grid) {
  if (phi_grid.empty()) throw std::invalid_argument("fringe_scan: empty phase grid");
  if (!(p.coupling_sq >= 0.0)) throw std::invalid_argument("fringe_scan: coupling_sq must be non-negative");
  if (!(p.alpha_sq >= 0.0)) throw std::invalid_argument("fringe_scan: alpha_sq must be non-negative");
  SourceParams cell;
  cell.coupling = std::sqrt(p.coupling_sq);
  const auto joint = build_perturbative_state(cell, cell, p.T, std::sqrt(p.alpha_sq));
  const auto moments = idler_moments(joint.state);
  std::vector<FringePoint> out;
  out.reserve(phi_grid.size());
  for (double phi : phi_grid) out.push_back({phi, rate_at(moments, phi, joint.unnormalized_norm_sq)});
  return out;
}

double fringe_visibility(std::span<const FringePoint> fringe) {
  if (fringe.empty()) throw std::invalid_argument("fringe_visibility: empty fringe");
  const auto [lo, hi] =
      std::minmax_element(fringe.begin(), fringe.end(), [](const auto& a, const auto& b) { return a.rate < b.rate; });
  const double sum = hi->rate + lo->rate;
  return sum > 0.0 ? (hi->rate - lo->rate) / sum : 0.0;
}

ChainResult nonperturbative_chain(const SourceParams& cell1, const SourceParams& cell2, std::complex<double> T,
                                  std::complex<double> alpha, double dphi, std::optional<Index> dim,
                                  const TruncationPolicy& policy) {
  beam_splitter_matrix(T);
  const Index d = dim.value_or(default_cutoff(std::norm(alpha), std::max(std::abs(cell1.r), std::abs(cell2.r))));
  const auto seed = coherent_state<double>(alpha, d, kSignal1);
  if (seed.leakage() > policy.epsilon)
    throw TruncationError("nonperturbative_chain: seed leakage " + std::to_string(seed.leakage()) +
                          " exceeds tolerance; increase dim");

  auto s = tensor(tensor(tensor(vacuum_mode(kIdler1, d), vacuum_mode(kIdler2, d)), seed), vacuum_mode(kSignal0, d));
  s = two_mode_squeeze(s, std::complex<double>(cell1.r), {kIdler1, kSignal1}, policy);
  s = beam_splitter(s, T, {kSignal1, kSignal0}, policy);
  s = two_mode_squeeze(s, std::complex<double>(cell2.r), {kIdler2, kSignal1}, policy);

  JointState joint{std::move(s)};
  joint.c1 = cell1.r;
  joint.c2 = cell2.r;
  joint.alpha = alpha;
  joint.T = T;
  joint.construction = Construction::nonperturbative;
  joint.unnormalized_norm_sq = 1.0;
  const double rate = idler_rate(joint, dphi);
  return {rate, std::move(joint)};
}

}  // namespace icsim
