#pragma once

// Truncated Fock-space states and operations. Every multi-mode state is a dense
// amplitude tensor flattened row-major (first mode varies slowest).

#include <algorithm>
#include <cmath>
#include <complex>
#include <initializer_list>
#include <limits>
#include <numbers>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include "icsim/types.hpp"

namespace icsim {

struct TruncationPolicy {
  double epsilon = 1e-8;
};

// Default per-mode cutoff for a scenario carrying |alpha|^2 seed photons and
// squeezing r.
inline Index default_cutoff(double alpha_sq, double r) {
  const double s = std::sinh(std::abs(r));
  const double wanted = std::ceil(6.0 * (alpha_sq + s * s) + 6.0);
  return std::max<Index>(12, static_cast<Index>(wanted));
}

using ModePair = std::pair<std::string, std::string>;

template <typename Real>
class BasicTruncatedState {
 public:
  using RealScalar = Real;
  using Scalar = std::complex<Real>;
  using Vector = VectorC<Real>;

  BasicTruncatedState(std::vector<std::string> labels, std::vector<Index> dims, Vector amplitudes,
                      Real leakage = Real(0), std::vector<std::string> warnings = {})
      : labels_(std::move(labels)),
        dims_(std::move(dims)),
        amplitudes_(std::move(amplitudes)),
        leakage_(leakage),
        warnings_(std::move(warnings)) {
    if (labels_.empty()) throw std::invalid_argument("TruncatedState: at least one mode is required");
    if (labels_.size() != dims_.size())
      throw std::invalid_argument("TruncatedState: labels and dims differ in length");
    for (std::size_t m = 0; m < labels_.size(); ++m) {
      if (dims_[m] < 2) throw std::invalid_argument("TruncatedState: mode '" + labels_[m] + "' has dim < 2");
      for (std::size_t k = 0; k < m; ++k)
        if (labels_[k] == labels_[m]) throw std::invalid_argument("TruncatedState: duplicate mode label '" + labels_[m] + "'");
    }
    Index total = 1;
    for (Index d : dims_) total *= d;
    if (amplitudes_.size() != total) throw std::invalid_argument("TruncatedState: amplitude count does not match dims");
    strides_.assign(dims_.size(), 1);
    for (Index m = static_cast<Index>(dims_.size()) - 2; m >= 0; --m) strides_[m] = strides_[m + 1] * dims_[m + 1];
  }

  static BasicTruncatedState vacuum(std::vector<std::string> labels, std::vector<Index> dims) {
    Index total = 1;
    for (Index d : dims) total *= d;
    Vector amps = Vector::Zero(total);
    if (total > 0) amps(0) = Scalar(1);
    return BasicTruncatedState(std::move(labels), std::move(dims), std::move(amps));
  }

  Index mode_count() const { return static_cast<Index>(labels_.size()); }
  const std::vector<std::string>& labels() const { return labels_; }
  const std::vector<Index>& dims() const { return dims_; }
  Index dim(Index mode) const { return dims_.at(mode); }
  Index stride(Index mode) const { return strides_.at(mode); }
  Index size() const { return amplitudes_.size(); }
  const Vector& amplitudes() const { return amplitudes_; }
  Real leakage() const { return leakage_; }
  const std::vector<std::string>& warnings() const { return warnings_; }

  Index mode_index(std::string_view label) const {
    for (std::size_t m = 0; m < labels_.size(); ++m)
      if (labels_[m] == label) return static_cast<Index>(m);
    throw std::invalid_argument("unknown mode label '" + std::string(label) + "'");
  }

  Index occupation_of(Index flat, Index mode) const { return (flat / strides_[mode]) % dims_[mode]; }

  std::vector<Index> occupation(Index flat) const {
    std::vector<Index> occ(dims_.size());
    for (std::size_t m = 0; m < dims_.size(); ++m) occ[m] = occupation_of(flat, static_cast<Index>(m));
    return occ;
  }

  Index flat_index(std::span<const Index> occupation) const {
    if (occupation.size() != dims_.size()) throw std::invalid_argument("flat_index: occupation has wrong rank");
    Index flat = 0;
    for (std::size_t m = 0; m < dims_.size(); ++m) {
      if (occupation[m] < 0 || occupation[m] >= dims_[m]) throw std::out_of_range("flat_index: occupation outside cutoff");
      flat += occupation[m] * strides_[m];
    }
    return flat;
  }

  Scalar amplitude(std::initializer_list<Index> occupation) const {
    return amplitudes_(flat_index(std::span<const Index>(occupation.begin(), occupation.size())));
  }

  Real norm_squared() const { return amplitudes_.squaredNorm(); }

  // Same basis, new amplitudes; leakage accumulates.
  BasicTruncatedState with_amplitudes(Vector amplitudes, Real extra_leakage = Real(0),
                                      std::vector<std::string> extra_warnings = {}) const {
    auto warnings = warnings_;
    warnings.insert(warnings.end(), extra_warnings.begin(), extra_warnings.end());
    return BasicTruncatedState(labels_, dims_, std::move(amplitudes), leakage_ + extra_leakage, std::move(warnings));
  }

  bool same_basis(const BasicTruncatedState& other) const { return labels_ == other.labels_ && dims_ == other.dims_; }

 private:
  std::vector<std::string> labels_;
  std::vector<Index> dims_;
  std::vector<Index> strides_;
  Vector amplitudes_;
  Real leakage_;
  std::vector<std::string> warnings_;
};

using TruncatedState = BasicTruncatedState<double>;

template <typename Real>
class BasicDensityMatrix {
 public:
  using Matrix = MatrixC<Real>;

  BasicDensityMatrix(Matrix entries, std::vector<std::string> mode_labels, std::vector<Index> dims,
                     std::vector<std::vector<Index>> basis)
      : entries_(std::move(entries)), mode_labels_(std::move(mode_labels)), dims_(std::move(dims)), basis_(std::move(basis)) {}

  const Matrix& entries() const { return entries_; }
  const std::vector<std::string>& mode_labels() const { return mode_labels_; }
  const std::vector<Index>& dims() const { return dims_; }
  // Occupation tuple of each basis row, ordered like mode_labels().
  const std::vector<std::vector<Index>>& basis_labels() const { return basis_; }

  std::complex<Real> entry(std::span<const Index> row, std::span<const Index> col) const {
    return entries_(basis_position(row), basis_position(col));
  }

  Index basis_position(std::span<const Index> occupation) const {
    Index pos = 0;
    for (std::size_t m = 0; m < dims_.size(); ++m) pos = pos * dims_[m] + occupation[m];
    return pos;
  }

  Real trace() const { return entries_.trace().real(); }
  Real purity() const { return (entries_ * entries_).trace().real(); }

  Real hermiticity_error() const { return (entries_ - entries_.adjoint()).cwiseAbs().maxCoeff(); }

  Eigen::Matrix<Real, Eigen::Dynamic, 1> eigenvalues() const {
    Eigen::SelfAdjointEigenSolver<Matrix> solver(entries_, Eigen::EigenvaluesOnly);
    return solver.eigenvalues();
  }

 private:
  Matrix entries_;
  std::vector<std::string> mode_labels_;
  std::vector<Index> dims_;
  std::vector<std::vector<Index>> basis_;
};

using DensityMatrix = BasicDensityMatrix<double>;

// ---------------------------------------------------------------------------
// State construction

// Single-mode coherent state, normalized over the truncated basis. The
// reported leakage is the Poisson weight sum_{n >= dim} e^{-|a|^2}|a|^{2n}/n!.
template <typename Real>
BasicTruncatedState<Real> coherent_state(std::complex<Real> alpha, Index dim, std::string label = "a") {
  if (dim < 2) throw std::invalid_argument("coherent_state: dim must be >= 2");
  using std::abs, std::arg, std::exp, std::log, std::lgamma, std::polar;
  const Real mag = abs(alpha);
  const Real mean = mag * mag;
  VectorC<Real> amps = VectorC<Real>::Zero(dim);
  Real leakage = 0;
  if (mag == Real(0)) {
    amps(0) = 1;
  } else {
    const Real log_mag = log(mag);
    const Real phase = arg(alpha);
    for (Index n = 0; n < dim; ++n) {
      const Real log_c = Real(n) * log_mag - Real(0.5) * lgamma(Real(n + 1)) - Real(0.5) * mean;
      amps(n) = polar(exp(log_c), Real(n) * phase);
    }
    // Tail of the Poisson distribution, summed until the terms stop mattering.
    for (Index n = dim;; ++n) {
      const Real p = exp(Real(2 * n) * log_mag - lgamma(Real(n + 1)) - mean);
      leakage += p;
      if (Real(n) > mean && p < std::numeric_limits<Real>::epsilon() * std::max(leakage, std::numeric_limits<Real>::min()))
        break;
      if (n > dim + 100000) break;
    }
    amps /= amps.norm();
  }
  std::vector<std::string> warnings;
  if (mean > Real(dim) / Real(4))
    warnings.push_back("coherent_state: |alpha|^2 = " + std::to_string(static_cast<double>(mean)) +
                       " exceeds dim/4 = " + std::to_string(static_cast<double>(dim) / 4.0) +
                       "; truncation unreliable");
  return BasicTruncatedState<Real>({std::move(label)}, {dim}, std::move(amps), leakage, std::move(warnings));
}

// Single-mode number state |n>.
template <typename Real>
BasicTruncatedState<Real> fock_state(Index n, Index dim, std::string label = "a") {
  if (n < 0 || n >= dim) throw std::invalid_argument("fock_state: n outside cutoff");
  VectorC<Real> amps = VectorC<Real>::Zero(dim);
  amps(n) = 1;
  return BasicTruncatedState<Real>({std::move(label)}, {dim}, std::move(amps));
}

// Product state a (x) b, modes of `a` first.
template <typename Real>
BasicTruncatedState<Real> tensor(const BasicTruncatedState<Real>& a, const BasicTruncatedState<Real>& b) {
  auto labels = a.labels();
  labels.insert(labels.end(), b.labels().begin(), b.labels().end());
  auto dims = a.dims();
  dims.insert(dims.end(), b.dims().begin(), b.dims().end());
  VectorC<Real> amps(a.size() * b.size());
  for (Index i = 0; i < a.size(); ++i) amps.segment(i * b.size(), b.size()) = a.amplitudes()(i) * b.amplitudes();
  auto warnings = a.warnings();
  warnings.insert(warnings.end(), b.warnings().begin(), b.warnings().end());
  return BasicTruncatedState<Real>(std::move(labels), std::move(dims), std::move(amps), a.leakage() + b.leakage(),
                                   std::move(warnings));
}

template <typename Real>
BasicTruncatedState<Real> normalized(const BasicTruncatedState<Real>& s) {
  const Real n = s.amplitudes().norm();
  if (n == Real(0)) throw std::domain_error("normalized: zero vector");
  return s.with_amplitudes(s.amplitudes() / n);
}

template <typename Real>
BasicTruncatedState<Real> operator+(const BasicTruncatedState<Real>& a, const BasicTruncatedState<Real>& b) {
  if (!a.same_basis(b)) throw std::invalid_argument("state sum: bases differ");
  auto warnings = a.warnings();
  for (const auto& w : b.warnings())
    if (std::find(warnings.begin(), warnings.end(), w) == warnings.end()) warnings.push_back(w);
  return BasicTruncatedState<Real>(a.labels(), a.dims(), a.amplitudes() + b.amplitudes(),
                                   std::max(a.leakage(), b.leakage()), std::move(warnings));
}

template <typename Real>
BasicTruncatedState<Real> operator*(std::complex<Real> c, const BasicTruncatedState<Real>& s) {
  return s.with_amplitudes(c * s.amplitudes());
}

// Changes the cutoff of one mode; shrinking drops (and reports) the weight above
// the new cutoff.
template <typename Real>
BasicTruncatedState<Real> resize_mode(const BasicTruncatedState<Real>& s, std::string_view label, Index new_dim) {
  if (new_dim < 2) throw std::invalid_argument("resize_mode: dim must be >= 2");
  const Index m = s.mode_index(label);
  auto dims = s.dims();
  dims[m] = new_dim;
  auto out = BasicTruncatedState<Real>::vacuum(s.labels(), dims);
  VectorC<Real> amps = VectorC<Real>::Zero(out.size());
  Real dropped = 0;
  for (Index f = 0; f < s.size(); ++f) {
    auto occ = s.occupation(f);
    if (occ[m] >= new_dim) {
      dropped += std::norm(s.amplitudes()(f));
      continue;
    }
    amps(out.flat_index(occ)) = s.amplitudes()(f);
  }
  return BasicTruncatedState<Real>(s.labels(), std::move(dims), std::move(amps), s.leakage() + dropped, s.warnings());
}

// ---------------------------------------------------------------------------
// Ladder operators (unnormalized results)

template <typename Real>
BasicTruncatedState<Real> apply_annihilation(const BasicTruncatedState<Real>& s, std::string_view label) {
  const Index m = s.mode_index(label);
  const Index stride = s.stride(m);
  VectorC<Real> out = VectorC<Real>::Zero(s.size());
  for (Index f = 0; f < s.size(); ++f) {
    const Index n = s.occupation_of(f, m);
    if (n > 0) out(f - stride) += std::sqrt(Real(n)) * s.amplitudes()(f);
  }
  return s.with_amplitudes(std::move(out));
}

// a^dagger on the truncated space: the component pushed above the cutoff is lost.
template <typename Real>
BasicTruncatedState<Real> apply_creation(const BasicTruncatedState<Real>& s, std::string_view label) {
  const Index m = s.mode_index(label);
  const Index stride = s.stride(m);
  const Index d = s.dim(m);
  VectorC<Real> out = VectorC<Real>::Zero(s.size());
  for (Index f = 0; f < s.size(); ++f) {
    const Index n = s.occupation_of(f, m);
    if (n + 1 < d) out(f + stride) += std::sqrt(Real(n + 1)) * s.amplitudes()(f);
  }
  return s.with_amplitudes(std::move(out));
}

template <typename Real>
std::complex<Real> inner_product(const BasicTruncatedState<Real>& bra, const BasicTruncatedState<Real>& ket) {
  if (!bra.same_basis(ket)) throw std::invalid_argument("inner_product: bases differ");
  return bra.amplitudes().dot(ket.amplitudes());
}

template <typename Real>
Real fidelity(const BasicTruncatedState<Real>& a, const BasicTruncatedState<Real>& b) {
  const Real na = a.norm_squared(), nb = b.norm_squared();
  return std::norm(inner_product(a, b)) / (na * nb);
}

// ---------------------------------------------------------------------------
// Two-mode unitaries

namespace detail {

// Unitary on a two-mode local space, stored as the diagonal blocks of a
// conserved charge.
template <typename Real>
struct BlockUnitary {
  std::vector<std::vector<Index>> indices;
  std::vector<MatrixC<Real>> blocks;
};

// `generator(np, nq, emit)` must call emit(mp, mq, coefficient) for every
// nonzero <mp,mq|G|np,nq>; entries outside the cutoff are never requested.
template <typename Real, typename Charge, typename Generator>
BlockUnitary<Real> exponentiate_blockwise(Index dp, Index dq, Charge charge, Generator generator) {
  std::vector<std::pair<Index, Index>> order;  // (charge, local index)
  for (Index np = 0; np < dp; ++np)
    for (Index nq = 0; nq < dq; ++nq) order.emplace_back(charge(np, nq), np * dq + nq);
  std::stable_sort(order.begin(), order.end(), [](auto& a, auto& b) { return a.first < b.first; });

  BlockUnitary<Real> out;
  std::size_t start = 0;
  while (start < order.size()) {
    std::size_t end = start;
    while (end < order.size() && order[end].first == order[start].first) ++end;
    std::vector<Index> idx;
    for (std::size_t k = start; k < end; ++k) idx.push_back(order[k].second);
    std::sort(idx.begin(), idx.end());
    const Index n = static_cast<Index>(idx.size());
    MatrixC<Real> g = MatrixC<Real>::Zero(n, n);
    auto position = [&](Index local) {
      return static_cast<Index>(std::lower_bound(idx.begin(), idx.end(), local) - idx.begin());
    };
    for (Index col = 0; col < n; ++col) {
      const Index np = idx[col] / dq, nq = idx[col] % dq;
      generator(np, nq, [&](Index mp, Index mq, std::complex<Real> c) {
        if (mp < 0 || mq < 0 || mp >= dp || mq >= dq) return;
        g(position(mp * dq + mq), col) += c;
      });
    }
    out.blocks.push_back(g.exp());
    out.indices.push_back(std::move(idx));
    start = end;
  }
  return out;
}

// Applies `u` to modes (p, q) and returns the new amplitudes together with the
// output weight sitting on the top level of either mode.
template <typename Real>
std::pair<VectorC<Real>, Real> apply_two_mode(const BasicTruncatedState<Real>& s, Index p, Index q,
                                              const BlockUnitary<Real>& u) {
  const Index dq = s.dim(q);
  const Index sp = s.stride(p), sq = s.stride(q);
  const Index dp = s.dim(p);
  const auto& in = s.amplitudes();
  VectorC<Real> out = VectorC<Real>::Zero(s.size());
  std::vector<VectorC<Real>> buffers(u.blocks.size());
  for (std::size_t b = 0; b < u.blocks.size(); ++b) buffers[b].resize(static_cast<Index>(u.indices[b].size()));

  for (Index base = 0; base < s.size(); ++base) {
    if (s.occupation_of(base, p) != 0 || s.occupation_of(base, q) != 0) continue;
    for (std::size_t b = 0; b < u.blocks.size(); ++b) {
      const auto& idx = u.indices[b];
      auto& v = buffers[b];
      bool any = false;
      for (std::size_t k = 0; k < idx.size(); ++k) {
        const Index local = idx[k];
        v(static_cast<Index>(k)) = in(base + (local / dq) * sp + (local % dq) * sq);
        any = any || v(static_cast<Index>(k)) != std::complex<Real>(0);
      }
      if (!any) continue;
      const VectorC<Real> w = u.blocks[b] * v;
      for (std::size_t k = 0; k < idx.size(); ++k) {
        const Index local = idx[k];
        out(base + (local / dq) * sp + (local % dq) * sq) = w(static_cast<Index>(k));
      }
    }
  }

  Real edge = 0;
  for (Index f = 0; f < s.size(); ++f)
    if (s.occupation_of(f, p) == dp - 1 || s.occupation_of(f, q) == dq - 1) edge += std::norm(out(f));
  const Real total = out.squaredNorm();
  return {std::move(out), total > Real(0) ? edge / total : Real(0)};
}

template <typename Real>
std::pair<Index, Index> resolve_pair(const BasicTruncatedState<Real>& s, const ModePair& modes) {
  const Index p = s.mode_index(modes.first);
  const Index q = s.mode_index(modes.second);
  if (p == q) throw std::invalid_argument("two-mode operation needs two distinct modes");
  return {p, q};
}

template <typename Real>
BasicTruncatedState<Real> finish_unitary(const BasicTruncatedState<Real>& s, std::pair<VectorC<Real>, Real> result,
                                         const TruncationPolicy& policy, const char* what) {
  if (result.second > Real(policy.epsilon))
    throw TruncationError(std::string(what) + ": weight at the cutoff " + std::to_string(static_cast<double>(result.second)) +
                          " exceeds tolerance " + std::to_string(policy.epsilon) + "; increase dim");
  return s.with_amplitudes(std::move(result.first), result.second);
}

}  // namespace detail

// exp(r a_p^dag a_q^dag - r^* a_p a_q), exponentiated densely on the truncated
// generator (block diagonal in n_p - n_q).
template <typename Real>
BasicTruncatedState<Real> two_mode_squeeze(const BasicTruncatedState<Real>& s, std::complex<Real> r, const ModePair& modes,
                                           const TruncationPolicy& policy = {}) {
  const auto [p, q] = detail::resolve_pair(s, modes);
  if (r == std::complex<Real>(0)) return s;
  const auto u = detail::exponentiate_blockwise<Real>(
      s.dim(p), s.dim(q), [](Index np, Index nq) { return np - nq; },
      [&](Index np, Index nq, auto emit) {
        emit(np + 1, nq + 1, r * std::sqrt(Real((np + 1) * (nq + 1))));
        if (np > 0 && nq > 0) emit(np - 1, nq - 1, -std::conj(r) * std::sqrt(Real(np * nq)));
      });
  return detail::finish_unitary(s, detail::apply_two_mode(s, p, q, u), policy, "two_mode_squeeze");
}

// Single-particle matrix of the beam splitter: column j is the image of a_j^dag,
//   a_p^dag -> T^* a_p^dag + R a_q^dag,   a_q^dag -> -R a_p^dag + T a_q^dag,
// with R = sqrt(1 - |T|^2) real and non-negative.
template <typename Real>
Eigen::Matrix<std::complex<Real>, 2, 2> beam_splitter_matrix(std::complex<Real> transmittance) {
  const Real t = std::abs(transmittance);
  if (t > Real(1) + Real(1e-12)) throw std::invalid_argument("beam_splitter: |T| > 1");
  const Real refl = std::sqrt(std::max(Real(0), Real(1) - t * t));
  Eigen::Matrix<std::complex<Real>, 2, 2> m;
  m << std::conj(transmittance), -refl, refl, transmittance;
  return m;
}

template <typename Real>
BasicTruncatedState<Real> beam_splitter(const BasicTruncatedState<Real>& s, std::complex<Real> transmittance,
                                        const ModePair& modes, const TruncationPolicy& policy = {}) {
  const auto [p, q] = detail::resolve_pair(s, modes);
  const auto m = beam_splitter_matrix(transmittance);
  // m is in SU(2): m = cos(psi) I + (sin(psi)/psi) G with G anti-Hermitian.
  using Mat2 = Eigen::Matrix<std::complex<Real>, 2, 2>;
  const Real cos_psi = std::clamp(m(0, 0).real(), Real(-1), Real(1));
  const Real psi = std::acos(cos_psi);
  const Real sin_psi = std::sin(psi);
  Mat2 g;
  if (sin_psi > Real(1e-14)) {
    g = (m - cos_psi * Mat2::Identity()) * (psi / sin_psi);
  } else if (cos_psi > 0) {
    g.setZero();
  } else {
    g << std::complex<Real>(0, std::numbers::pi_v<Real>), 0, 0, std::complex<Real>(0, -std::numbers::pi_v<Real>);
  }
  if (g.cwiseAbs().maxCoeff() == Real(0)) return s;
  const auto u = detail::exponentiate_blockwise<Real>(
      s.dim(p), s.dim(q), [](Index np, Index nq) { return np + nq; },
      [&](Index np, Index nq, auto emit) {
        emit(np, nq, g(0, 0) * Real(np) + g(1, 1) * Real(nq));
        if (nq > 0) emit(np + 1, nq - 1, g(0, 1) * std::sqrt(Real((np + 1) * nq)));
        if (np > 0) emit(np - 1, nq + 1, g(1, 0) * std::sqrt(Real(np * (nq + 1))));
      });
  return detail::finish_unitary(s, detail::apply_two_mode(s, p, q, u), policy, "beam_splitter");
}

// ---------------------------------------------------------------------------
// Expectation values (normalized by <psi|psi>)

// <a_from^dag a_to>
template <typename Real>
std::complex<Real> correlation(const BasicTruncatedState<Real>& s, std::string_view from, std::string_view to) {
  const auto a_from = apply_annihilation(s, from);
  const auto a_to = apply_annihilation(s, to);
  return inner_product(a_from, a_to) / s.norm_squared();
}

template <typename Real>
Real mean_photon(const BasicTruncatedState<Real>& s, std::string_view mode) {
  return apply_annihilation(s, mode).norm_squared() / s.norm_squared();
}

// <a^dag a^dag a a> / <a^dag a>^2
template <typename Real>
Real g2_zero(const BasicTruncatedState<Real>& s, std::string_view mode) {
  const auto once = apply_annihilation(s, mode);
  const Real norm = s.norm_squared();
  const Real mean = once.norm_squared() / norm;
  if (!(mean > Real(0))) throw std::domain_error("g2_zero: mode '" + std::string(mode) + "' has zero mean photon number");
  const Real second = apply_annihilation(once, mode).norm_squared() / norm;
  return second / (mean * mean);
}

// Reduced state of `keep` (returned in the state's mode order), trace normalized.
template <typename Real>
BasicDensityMatrix<Real> partial_trace(const BasicTruncatedState<Real>& s, const std::vector<std::string>& keep) {
  if (keep.empty()) throw std::invalid_argument("partial_trace: empty keep set");
  std::vector<bool> kept(static_cast<std::size_t>(s.mode_count()), false);
  for (const auto& label : keep) {
    const Index m = s.mode_index(label);
    if (kept[m]) throw std::invalid_argument("partial_trace: duplicate mode '" + label + "'");
    kept[m] = true;
  }
  if (static_cast<Index>(keep.size()) == s.mode_count())
    throw std::invalid_argument("partial_trace: keep set must be a proper subset");

  std::vector<std::string> labels;
  std::vector<Index> dims;
  Index kept_size = 1, traced_size = 1;
  for (Index m = 0; m < s.mode_count(); ++m) {
    if (kept[m]) {
      labels.push_back(s.labels()[m]);
      dims.push_back(s.dim(m));
      kept_size *= s.dim(m);
    } else {
      traced_size *= s.dim(m);
    }
  }

  MatrixC<Real> reshaped = MatrixC<Real>::Zero(kept_size, traced_size);
  for (Index f = 0; f < s.size(); ++f) {
    Index row = 0, col = 0;
    for (Index m = 0; m < s.mode_count(); ++m) {
      const Index n = s.occupation_of(f, m);
      if (kept[m])
        row = row * s.dim(m) + n;
      else
        col = col * s.dim(m) + n;
    }
    reshaped(row, col) = s.amplitudes()(f);
  }
  MatrixC<Real> rho = reshaped * reshaped.adjoint();
  const Real tr = rho.trace().real();
  if (!(tr > Real(0))) throw std::domain_error("partial_trace: zero state");
  rho /= tr;

  std::vector<std::vector<Index>> basis(static_cast<std::size_t>(kept_size));
  for (Index row = 0; row < kept_size; ++row) {
    std::vector<Index> occ(dims.size());
    Index rest = row;
    for (Index k = static_cast<Index>(dims.size()) - 1; k >= 0; --k) {
      occ[k] = rest % dims[k];
      rest /= dims[k];
    }
    basis[row] = std::move(occ);
  }
  return BasicDensityMatrix<Real>(std::move(rho), std::move(labels), std::move(dims), std::move(basis));
}

}  // namespace icsim
