#pragma once

// State-level model of the coupled Mach-Zehnder with two four-wave-mixing
// cells. Mode wiring, in tensor order:
//   i1, i2  idler modes of Cell1 and Cell2
//   s1      Cell1 signal, seeded by |alpha>; after the splitter it is the
//           signal input of Cell2
//   s0      the other port of the signal-path splitter (which-path marker)

#include <complex>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "icsim/closed_form.hpp"
#include "icsim/fock_core.hpp"

namespace icsim {

inline constexpr const char* kIdler1 = "i1";
inline constexpr const char* kIdler2 = "i2";
inline constexpr const char* kSignal1 = "s1";
inline constexpr const char* kSignal0 = "s0";

struct SourceParams {
  double r = 0;                        // squeezing parameter of the cell
  std::complex<double> alpha{};        // seed amplitude (informational; the chain takes alpha explicitly)
  std::complex<double> coupling{};     // c = g A t; used by the perturbative state
};

enum class Construction { perturbative, nonperturbative };

struct JointState {
  TruncatedState state;
  std::complex<double> c1{}, c2{};
  std::complex<double> alpha{};
  std::complex<double> T{1};
  Construction construction = Construction::perturbative;
  // Squared norm of the first-order superposition before normalization (the
  // vacuum term has unit amplitude); 1 for the nonperturbative chain.
  double unnormalized_norm_sq = 1;
};

// 2x2 idler density matrix in the path basis {|1,0>, |0,1>}.
struct IdlerPathDensity {
  Eigen::Matrix2cd rho;
  // Probability of exactly one idler photon (in either arm) before renormalization.
  double sector_weight = 0;
  // |c1|^2 relative to the single-excitation sector; equals 1/(2+|a|^2+|Ta|^2)
  // for identical cells.
  double normalization = 0;
};

// Hermitian check, unit trace, eigenvalues >= 0 within `tol`.
bool is_valid_density(const Eigen::Matrix2cd& rho, double tol = 1e-10);

// First-order (|c alpha| << 1) joint state of both cells:
//   |0,0>|alpha,0> + (c1|1,0> + c2 T^*|0,1>) a_s1^dag|alpha,0> + c2 R |0,1>|alpha,1>,
// normalized. Idler and s0 modes carry dim 2; s1 carries signal_dim + 1 so that
// a^dag acts exactly on the truncated seed; by default signal_dim is large enough
// that the dropped coherent tail is below double precision. Warnings are
// attached to the state when |c alpha| > 0.1.
JointState build_perturbative_state(const SourceParams& cell1, const SourceParams& cell2, std::complex<double> T,
                                    std::complex<double> alpha, std::optional<Index> signal_dim = std::nullopt);

IdlerPathDensity idler_reduced_density(const JointState& joint);

// V = 2|rho12|, K = sqrt(1 - 4|rho12|^2), P = |rho11 - rho22|, C = 2 sqrt(det rho).
DualityMetrics metrics_from_density(const IdlerPathDensity& density);

// Single idler count rate <E E^dag> with E^dag = a_i1 + e^{i dphi} a_i2. For a
// perturbative state the rate refers to the unnormalized first-order state, so
// it matches the closed-form rate with coupling_sq = |c1|^2.
double idler_rate(const JointState& joint, double dphi);

struct FringePoint {
  double dphi = 0;
  double rate = 0;
};

// Rate versus phase on the perturbative state built from `p` (c1 = c2 =
// sqrt(coupling_sq), alpha = sqrt(alpha_sq)). The state model has ideal signal
// overlap, so p.gamma does not enter.
std::vector<FringePoint> fringe_scan(const InterferometerParams& p, std::span<const double> phi_grid);

// (max - min) / (max + min) of a sampled fringe.
double fringe_visibility(std::span<const FringePoint> fringe);

struct ChainResult {
  double rate = 0;
  JointState joint;
};

// Full-unitary chain: S(r1) on (i1, s1) acting on |0>|alpha>, splitter T on
// (s1, s0), S(r2) on (i2, s1), then the idler rate at `dphi`. Every mode uses
// the same cutoff `dim` (default_cutoff of the scenario when not given).
ChainResult nonperturbative_chain(const SourceParams& cell1, const SourceParams& cell2, std::complex<double> T,
                                  std::complex<double> alpha, double dphi, std::optional<Index> dim = std::nullopt,
                                  const TruncationPolicy& policy = {});

}  // namespace icsim
