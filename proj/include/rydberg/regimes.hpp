#pragma once

#include <string>

namespace rydberg {

/// R_b = (C6 / Omega)^(1/6) in um, with C6 / h in Hz*um^6 and Omega / 2pi
/// in Hz. Both factors of h (and of 2pi) cancel in the ratio.
double blockade_radius(double c6_hz_um6, double rabi_hz);

/// The blockade is only resolved when the shift exceeds the excitation
/// linewidth: |U| > margin * linewidth.
bool blockade_resolved(double shift_hz, double linewidth_hz, double margin = 10.0);

/// Red + blue excitation through an intermediate level |e>.
///
/// Sign conventions: the intermediate detuning is Delta = omega_e - omega_red
/// and the two-photon detuning delta = omega_red + omega_blue - omega_r, so
/// the rotating-frame Hamiltonian on (g, e, r) reads
///   diag(0, Delta, -delta) + (Omega_R / 2) |g><e| + (Omega_B / 2) |e><r| + h.c.
/// All quantities are Hz (angular frequency / 2pi).
struct TwoPhotonDrive {
  double rabi_red_hz = 0.0;
  double rabi_blue_hz = 0.0;
  double detuning_hz = 0.0;
  double two_photon_detuning_hz = 0.0;
  double linewidth_hz = 0.0;

  /// |Delta| / max(Omega_R, Omega_B); below 10 the reduction is approximate.
  double detuning_ratio() const;
};

struct EffectiveDrive {
  double rabi_hz = 0.0;
  double detuning_hz = 0.0;
  /// Empty when |Delta| >= 10 max(Omega_R, Omega_B).
  std::string warning;
};

/// Adiabatic elimination of |e>:
///   Omega_eff = Omega_R Omega_B / (2 Delta),
///   delta_eff = delta - (Omega_R^2 - Omega_B^2) / (4 Delta).
EffectiveDrive effective_two_photon(const TwoPhotonDrive& drive);

/// Off-resonant scattering through |e>: Gamma (Omega_R^2 + Omega_B^2) / (4 Delta^2).
double scattering_rate(const TwoPhotonDrive& drive);

/// Ground-state dressing of a blockaded pair by one laser with Rabi
/// frequency Omega and detuning Delta = omega_laser - omega_r (Hz).
struct DressingParams {
  double rabi_hz = 0.0;
  double detuning_dress_hz = 0.0;
};

struct DressedInteraction {
  /// (1/2)[Delta + sgn(Delta)(sqrt(Delta^2 + 2 Omega^2) - sqrt(Delta^2 + Omega^2))],
  /// the closed form as usually quoted. Its Omega -> 0 limit is Delta / 2.
  double j_formula_hz = 0.0;
  /// Pair light shift minus twice the single-atom light shift, from the exact
  /// blockaded model; zero without light.
  double j_oracle_hz = 0.0;
  /// j_formula_hz - sgn(Delta) sqrt(Delta^2 + Omega^2) / 2: the closed form
  /// with the single-atom shift counted twice, which must equal j_oracle_hz.
  double j_reconciled_hz = 0.0;
  bool consistent = false;
};

/// Closed form plus oracle. The oracle value is authoritative. Throws
/// DomainError for Delta = 0 or negative Omega.
DressedInteraction dressed_interaction(const DressingParams& p);

/// Adiabatic-branch eigenvalue difference E_gg(pair) - 2 E_g(single) from
/// numerically diagonalizing the blockaded pair model {|gg>, |psi+>} with
/// coupling sqrt(2) Omega / 2 and the single atom {|g>, |r>} with coupling
/// Omega / 2, both with the Rydberg component at -Delta.
double dressed_interaction_oracle(const DressingParams& p);

}  // namespace rydberg
