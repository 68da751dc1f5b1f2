#pragma once

#include <cstddef>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "rydberg/radial.hpp"
#include "rydberg/species.hpp"
#include "rydberg/stark.hpp"

namespace rydberg {

/// |first> (x) |second>; both atoms of the same species.
struct PairState {
  StateLabel first;
  StateLabel second;

  PairState() = default;
  PairState(StateLabel a, StateLabel b);

  double energy(const SpeciesTable& table) const;
  int total_two_m() const { return first.two_mj + second.two_mj; }
  std::string to_string() const;
  auto operator<=>(const PairState&) const = default;
};

struct PairBasisOptions {
  double window_hz = 30e9;
  int delta_n = 4;
  int delta_l = 2;
  /// Keep only pair states with the target's m_j1 + m_j2 (valid for theta = 0).
  bool conserve_m = false;
  std::size_t hard_cap = 6000;
};

/// Truncated two-atom product basis around a target pair state, ordered by
/// pair energy and then by the state labels.
struct PairBasis {
  PairState target;
  PairBasisOptions options;
  std::vector<PairState> states;
  /// E_pair - E_target in Hz, parallel to `states`.
  std::vector<double> detunings_hz;

  std::size_t size() const { return states.size(); }
  std::optional<std::size_t> index_of(const PairState& p) const;
};

/// Throws DomainError when the basis would exceed options.hard_cap.
PairBasis build_pair_basis(const SpeciesTable& table, const PairState& target, const PairBasisOptions& options = {});

/// Interatomic distance, axis angle to z and static fields.
struct GeometryConfig {
  double r_um = 10.0;
  double theta = 0.0;
  SingleAtomFieldConfig fields;

  void validate() const;
};

/// <a1 a2| V_dd |b1 b2> * R^3 in Hz*um^3 for the axis at angle theta to z:
///   V = [d1.d2 - 3 (d1.n)(d2.n)] / R^3.
double vdd_element(const RadialSolver& solver, const StateLabel& a1, const StateLabel& a2, const StateLabel& b1,
                   const StateLabel& b2, double theta);

/// Dipole-dipole operator on the basis (Hz), exactly proportional to 1/R^3.
Eigen::MatrixXd assemble_vdd(const RadialSolver& solver, const PairBasis& basis, const GeometryConfig& geometry);

/// Full pair Hamiltonian relative to the target energy: pair detunings,
/// single-atom Stark/Zeeman terms of both atoms and V_dd.
Eigen::MatrixXd pair_hamiltonian(const RadialSolver& solver, const PairBasis& basis, const GeometryConfig& geometry);

/// Pair component driven by the excitation lasers. Weights in diagonalize()
/// are |<eigvec|laser>|^2 with the amplitudes normalized. The default is the
/// target pair state itself (sigma+ sigma+ excitation of the stretched level).
struct LaserCoupling {
  std::vector<std::pair<PairState, double>> amplitudes;
};

struct InteractionSpectrum {
  GeometryConfig geometry;
  /// Pair energies relative to the target, ascending (Hz).
  Eigen::VectorXd eigenvalues;
  /// |<target|eigvec>|^2; sums to 1.
  Eigen::VectorXd overlaps;
  Eigen::VectorXd weights;

  /// Index of the eigenvector with the largest target overlap.
  Eigen::Index target_branch() const;
};

InteractionSpectrum diagonalize(const RadialSolver& solver, const PairBasis& basis, const GeometryConfig& geometry,
                                const LaserCoupling& laser = {});

struct C6Options {
  double window_hz = 30e9;
  int delta_n = 4;
  /// Energy denominators smaller than this raise NearResonanceError.
  double resonance_guard_hz = 1e6;
};

struct C6Manifold {
  /// Eigenvalues of the second-order operator on the |m1, m2> manifold,
  /// in GHz*um^6, ascending.
  std::vector<double> eigenvalues_ghz_um6;
  /// Squared overlap of each eigenvector with the laser-coupled |m, m>.
  std::vector<double> laser_weights;
  /// Weighted average of the eigenvalues = <m m|H_eff|m m>.
  double effective_ghz_um6 = 0.0;
  /// Manifold ordering: (2 m1, 2 m2) pairs.
  std::vector<std::pair<int, int>> manifold;
  Eigen::MatrixXd operator_ghz_um6;
  std::size_t intermediate_pairs = 0;
};

/// Second-order effective interaction within the (2j+1)^2 Zeeman manifold of
/// |state, state>. The laser-coupled component is |m_j, m_j> with m_j taken
/// from `state` (stretched by default in the parser).
C6Manifold c6_effective_manifold(const RadialSolver& solver, const StateLabel& state, double theta,
                                 const C6Options& options = {});

/// Signed C6 (GHz*um^6, positive = repulsive) for |state, state>: the
/// second-order shift of the laser-coupled pair state, identical to the
/// effective manifold value.
double c6_perturbative(const RadialSolver& solver, const StateLabel& state, double theta,
                       const C6Options& options = {});

/// C3 = R^3 <to| V_dd |from> in GHz*um^3 (0 for forbidden channels).
double c3_coefficient(const RadialSolver& solver, const PairState& from, const PairState& to, double theta);

struct ForsterChannel {
  /// Unordered pair of levels; m_j chosen to maximise |C3| at theta = 0.
  PairState channel;
  /// E_beta + E_gamma - 2 E_alpha (Hz).
  double defect_hz = 0.0;
  /// R^3 <beta gamma|V|alpha alpha> for the chosen m_j (GHz*um^3).
  double c3_ghz_um3 = 0.0;
};

/// Dipole-coupled channels |alpha alpha> -> |beta gamma> with |defect| <=
/// window, sorted by |defect|.
std::vector<ForsterChannel> forster_search(const RadialSolver& solver, const StateLabel& state, double window_hz,
                                           int delta_n = 4);

struct ResonanceOptions {
  double field_min_v_cm = 0.0;
  double field_max_v_cm = 1.0;
  int scan_points = 21;
  double tolerance_v_cm = 1e-6;
  /// Stark basis half-width in n for each single-atom level.
  int stark_delta_n = 2;
};

struct ForsterResonance {
  bool found = false;
  double field_v_cm = 0.0;
  /// Defect at zero field and at the located field (Hz).
  double defect_zero_field_hz = 0.0;
  double defect_at_field_hz = 0.0;
  /// Coupling between |alpha alpha> and the symmetric (|beta gamma> +
  /// |gamma beta>)/sqrt(2); equals C3/R^3 times sqrt(2) when beta != gamma.
  double coupling_hz = 0.0;
  /// Avoided-crossing gap 2 * coupling_hz.
  double gap_hz = 0.0;
  /// Weights of the two dressed states on |alpha alpha> at the crossing.
  double weight_lower = 0.0;
  double weight_upper = 0.0;
};

/// Defect of the channel at field E (V/cm), from single-atom Stark shifts.
double channel_defect(const RadialSolver& solver, const StateLabel& state, const PairState& channel, double e_v_cm,
                      int stark_delta_n = 2);

/// Locates E* where the channel defect vanishes by scan + bisection. Returns
/// found = false when no sign change lies in the field range.
ForsterResonance stark_tune_resonance(const RadialSolver& solver, const StateLabel& state, const PairState& channel,
                                      double r_um, const ResonanceOptions& options = {});

struct CrossoverRadius {
  double r_um = std::numeric_limits<double>::infinity();
  /// Set when the defect is exactly zero: the pair is resonant at all R.
  bool resonant = false;
};

/// R_c = (|C3| / |defect|)^(1/3) with C3 in Hz*um^3 and defect in Hz.
CrossoverRadius crossover_radius(double c3_hz_um3, double defect_hz);
CrossoverRadius crossover_radius(const ForsterChannel& channel);

}  // namespace rydberg
