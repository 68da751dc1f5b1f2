#pragma once

#include <complex>
#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "rydberg/radial.hpp"
#include "rydberg/regimes.hpp"
#include "rydberg/species.hpp"

namespace rydberg {

/// Computational basis: index bit i is atom i, a set bit is |up> (= |r> for
/// the Ising drive). Atom 0 is the least significant bit.
using Complex = std::complex<double>;
using SparseHamiltonian = Eigen::SparseMatrix<Complex>;

inline constexpr int kMaxAtoms = 14;

struct AtomArray {
  /// Positions in um; the quantization axis is z.
  std::vector<Eigen::Vector3d> positions_um;

  int size() const { return static_cast<int>(positions_um.size()); }
  double distance_um(int i, int j) const;
  /// Angle between the i-j axis and z, in [0, pi].
  double theta(int i, int j) const;
  /// Throws DomainError for N = 0, N > 14 or pairs closer than 0.1 um.
  void validate() const;

  static AtomArray chain(int n, double spacing_um, const Eigen::Vector3d& direction = Eigen::Vector3d::UnitZ());
};

enum class PhaseMode {
  Off,
  /// Drive on atom i carries exp(i k.r_i).
  Fixed,
  /// Phases drawn uniformly per realization and averaged in simulate().
  RandomPerShot,
};

/// Resonant or detuned single-frequency drive |g> <-> |r>, shared by all atoms.
/// Detuning delta = omega_laser - omega_0 enters as -delta n_i.
struct DriveParams {
  double rabi_hz = 0.0;
  double detuning_hz = 0.0;
  double duration_s = 0.0;
  PhaseMode phase_mode = PhaseMode::Off;
  Eigen::Vector3d wavevector_per_um = Eigen::Vector3d::Zero();
  int phase_realizations = 16;

  void validate() const;
};

enum class CouplingModel { IsingVdW, XYExchange };
enum class CouplingProvenance { Analytic, Imported, PairInteraction };

/// Symmetric pair couplings in Hz with zero diagonal.
struct CouplingMatrix {
  CouplingModel model = CouplingModel::IsingVdW;
  CouplingProvenance provenance = CouplingProvenance::Imported;
  Eigen::MatrixXd hz;

  int size() const { return static_cast<int>(hz.rows()); }
  void validate() const;

  /// C(theta_ij) / R_ij^6 (Ising) or C(theta_ij) / R_ij^3 (XY); `coefficient`
  /// returns C in Hz*um^6 or Hz*um^3.
  static CouplingMatrix analytic(const AtomArray& array, CouplingModel model,
                                 const std::function<double(double theta)>& coefficient);
  static CouplingMatrix imported(CouplingModel model, Eigen::MatrixXd hz);
};

/// Couplings from the pair-interaction module: C6(theta) of |state, state>
/// for Ising; for XY the exchange element <partner state|V|state partner>.
CouplingMatrix pair_couplings(const RadialSolver& solver, const AtomArray& array, CouplingModel model,
                              const StateLabel& state, const std::optional<StateLabel>& partner = std::nullopt);

/// Classical error channels and damping.
///
/// Detection reads each atom as "present" (down) or "lost" (up): false_loss
/// is P(up | down), false_presence is P(down | up), and an atom lost during
/// the sequence (probability `loss`) always reads up. An atom with a
/// preparation error takes no part in the dynamics and starts (and stays) down.
struct NoiseParams {
  /// Amplitude damping |up> -> |down> at rate 2 pi * damping_hz.
  double damping_hz = 0.0;
  /// Pure dephasing: coherences decay at rate 2 pi * dephasing_hz.
  double dephasing_hz = 0.0;
  double prep_error = 0.05;
  double loss = 0.05;
  double false_loss = 0.03;
  double false_presence = 0.01;

  void validate() const;
  bool coherent() const { return damping_hz == 0.0 && dephasing_hz == 0.0; }

  /// All channels off.
  static NoiseParams none();
  /// Damping from off-resonant scattering through the intermediate level.
  static NoiseParams from_two_photon(const TwoPhotonDrive& drive, NoiseParams base = none());
};

enum class IsingForm {
  /// (Omega/2) sum (|r><g| + h.c.) - delta sum n_i + sum_{i<j} U_ij n_i n_j
  Projector,
  /// (Omega/2) sum sigma_x + sum (B_i/4 - delta/2) sigma_z + sum_{i<j} (U_ij/4) sigma_z sigma_z
  /// with B_i = sum_j U_ij; equal to the projector form up to a constant.
  Spin,
};

/// Sparse Hermitian Hamiltonian in Hz. Atoms outside `present_mask` carry no
/// terms. Throws DomainError for N > 14 or an XY-tagged coupling matrix.
SparseHamiltonian build_ising_hamiltonian(const AtomArray& array, const DriveParams& drive,
                                          const CouplingMatrix& couplings, IsingForm form = IsingForm::Projector,
                                          std::uint32_t present_mask = ~0u,
                                          const std::vector<double>* phases = nullptr);

/// sum_{i<j} J_ij (sigma+_i sigma-_j + h.c.) in Hz; conserves the number of up spins.
SparseHamiltonian build_xy_hamiltonian(const AtomArray& array, const CouplingMatrix& couplings,
                                       std::uint32_t present_mask = ~0u);

Eigen::VectorXcd basis_state(int n_atoms, std::uint32_t bits);

struct EvolutionResult {
  int n_atoms = 0;
  std::vector<double> times_s;
  /// times x 2^N configuration probabilities after damping and preparation
  /// errors, before loss and detection.
  Eigen::MatrixXd populations;
  /// The same after loss and detection errors.
  Eigen::MatrixXd detected;
  /// max |sum(populations) - 1| over the grid.
  double norm_deviation = 0.0;
  /// Preparation-error configurations left out of the mixture (N > 5).
  double prep_weight_dropped = 0.0;
  /// State vectors per time, only for coherent evolve() with keep_states.
  std::vector<Eigen::VectorXcd> states;

  Eigen::VectorXd series(std::uint32_t bits, bool use_detected = false) const;
  Eigen::VectorXd excitation_mean() const;
  Eigen::VectorXd excitation_variance() const;
};

/// Time evolution under a fixed Hamiltonian (Hz).
///
/// Without damping the state vector is propagated exactly: by dense
/// eigendecomposition up to 2^9 states, by a truncated Taylor series on
/// short steps beyond. With damping or dephasing the Lindblad equation is
/// solved for N <= 5 with the exact propagator exp(L dt). Preparation errors
/// need the model and are handled in simulate(); loss and detection are
/// applied here.
EvolutionResult evolve(const SparseHamiltonian& hamiltonian, const Eigen::VectorXcd& initial,
                       const std::vector<double>& times_s, const NoiseParams& noise, bool keep_states = false);

/// Model + initial configuration, so that preparation errors and random
/// laser phases can be averaged over.
struct SpinSystem {
  AtomArray array;
  CouplingMatrix couplings;
  DriveParams drive;  // unused for XY

  SparseHamiltonian hamiltonian(std::uint32_t present_mask = ~0u, const std::vector<double>* phases = nullptr) const;
};

/// Mixture over preparation errors (exact for N <= 5, up to two failed
/// atoms beyond, renormalized) and, in RandomPerShot mode, over laser phases.
EvolutionResult simulate(const SpinSystem& system, std::uint32_t initial_bits, const std::vector<double>& times_s,
                         const NoiseParams& noise, std::uint64_t seed = 0);

/// Applies loss and detection errors to a vector of 2^N probabilities.
Eigen::VectorXd apply_detection(const Eigen::VectorXd& populations, int n_atoms, const NoiseParams& noise);

struct ShotTable {
  int n_atoms = 0;
  std::vector<double> times_s;
  /// outcomes[t][s]: detected configuration of shot s at time t.
  std::vector<std::vector<std::uint32_t>> outcomes;

  double frequency(std::size_t t, std::uint32_t bits) const;
};

/// Projective draws per time point from result.populations followed by the
/// loss and detection channels. Deterministic for a given seed.
ShotTable sample_measurements(const EvolutionResult& result, int shots, const NoiseParams& noise, std::uint64_t seed);

struct InteractionFit {
  double u_hz = 0.0;
  /// One-sigma half width from the curvature of the residual sum.
  double ci_hz = 0.0;
  double rms_residual = 0.0;
  bool identifiable = false;
};

struct FitOptions {
  double u_min_hz = 0.0;  // default: Omega / 100
  double u_max_hz = 0.0;  // default: Omega * 1e3
  int grid_points = 200;
  /// Assumed population resolution when the residual is smaller.
  double sigma_floor = 1e-3;
};

/// Least-squares fit of the blockade shift U in the two-atom model
/// (resonant drive, damping rate gamma) to an observed P_rr(t).
InteractionFit fit_interaction(const std::vector<double>& times_s, const std::vector<double>& p_rr, double rabi_hz,
                               double damping_hz, const FitOptions& options = {});

/// P_rr(t) of the two-atom model used by fit_interaction.
std::vector<double> two_atom_p_rr(const std::vector<double>& times_s, double u_hz, double rabi_hz, double damping_hz);

/// Equilateral triangle of side 12 um with atoms 0 and 2 along z.
AtomArray triangle_array(double side_um = 12.0);
/// Couplings (V01, V12, V02) in Hz; defaults are h x (0.9, 1.1, 2.6) MHz.
CouplingMatrix triangle_couplings(double v01_hz = 0.9e6, double v12_hz = 1.1e6, double v02_hz = 2.6e6);

/// Three atoms from |ggg> under a resonant drive with the triangle couplings.
EvolutionResult simulate_three_atom_ising(double rabi_hz, const CouplingMatrix& couplings,
                                          const std::vector<double>& times_s, const NoiseParams& noise);

/// Three-atom chain along z (spacing 20 um) from |up down down>, couplings
/// from the exchange element between `up` and `down` at theta = 0.
EvolutionResult simulate_xy_chain(const RadialSolver& solver, const StateLabel& up, const StateLabel& down,
                                  const std::vector<double>& times_s, const NoiseParams& noise,
                                  double spacing_um = 20.0);

std::vector<double> linspace(double a, double b, int points);

}  // namespace rydberg
