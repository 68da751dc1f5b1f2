#pragma once

#include <vector>

#include <Eigen/Dense>

#include "rydberg/radial.hpp"
#include "rydberg/species.hpp"

namespace rydberg {

/// Static fields along the quantization axis z.
struct SingleAtomFieldConfig {
  double electric_v_cm = 0.0;
  double magnetic_gauss = 0.0;

  void validate() const;
};

/// All levels with |n - n0| <= delta_n and every l < n (up to l_max when
/// l_max >= 0) that contain the target's m_j. A z-aligned field conserves
/// m_j, so the list is closed under the Stark coupling. Ordered by energy,
/// then l, j, m_j.
std::vector<StateLabel> stark_basis(const SpeciesTable& table, const StateLabel& target, int delta_n,
                                    int l_max = -1);

/// Single-atom Hamiltonian (E/h, Hz) on `basis`: diagonal state energies plus
/// Zeeman shifts, off-diagonal -E <a|d_0|b>. Real symmetric.
Eigen::MatrixXd stark_hamiltonian(const RadialSolver& solver, const std::vector<StateLabel>& basis,
                                  const SingleAtomFieldConfig& fields);

struct StarkShift {
  double shift_hz = 0.0;       // eigenvalue minus zero-field energy of the target
  double overlap = 0.0;        // |<target|eigenvector>|^2
  std::size_t basis_size = 0;
};

/// Diagonalizes stark_hamiltonian and follows the eigenvector with the
/// largest target overlap.
StarkShift stark_shift(const RadialSolver& solver, const StateLabel& target, const SingleAtomFieldConfig& fields,
                       int delta_n = 5, int l_max = -1);

struct Polarizability {
  /// Static polarizability in GHz/(V/cm)^2 with shift = -(alpha/2) E^2.
  double alpha_ghz = 0.0;
  /// Same sum over a window widened by 5 in n, for the convergence monitor.
  double alpha_wide_ghz = 0.0;
  double relative_change = 0.0;
  bool converged = false;
  int delta_n = 0;
};

/// Second-order sum over dipole-coupled levels with |dn| <= delta_n.
/// `converged` is set when widening the window by 5 changes alpha < 1%.
Polarizability polarizability(const RadialSolver& solver, const StateLabel& state, int delta_n = 6);

}  // namespace rydberg
