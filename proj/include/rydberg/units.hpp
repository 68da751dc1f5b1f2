#pragma once

// Physical constants (CODATA 2018) and the unit conventions used across the
// library. Energies are exchanged as E/h in Hz, Rabi frequencies as
// Omega/2pi in Hz, distances between atoms in micrometres, radial
// coordinates in Bohr radii and dipole matrix elements in e*a0.

namespace rydberg::units {

inline constexpr double kPi = 3.14159265358979323846;

inline constexpr double kRydbergInfinityHz = 3.2898419602508e15;
inline constexpr double kHartreeHz = 6.579683920502e15;
inline constexpr double kBohrRadiusM = 5.29177210903e-11;
inline constexpr double kBohrRadiusUm = 5.29177210903e-5;
inline constexpr double kBohrRadiusNm = 5.29177210903e-2;
inline constexpr double kElementaryCharge = 1.602176634e-19;
inline constexpr double kPlanck = 6.62607015e-34;
inline constexpr double kBoltzmann = 1.380649e-23;
inline constexpr double kElectronMassU = 5.48579909065e-4;
inline constexpr double kInverseFineStructure = 137.035999084;
inline constexpr double kAtomicTimeS = 2.4188843265857e-17;
/// Bohr magneton over h, in Hz per gauss.
inline constexpr double kBohrMagnetonHzPerG = 1.39962449361e6;
inline constexpr double kElectronSpinG = 2.0023;

/// (e a0)^2 / (4 pi eps0 * 1 um^3) / h: converts a product of two dipole
/// elements in e*a0 into Hz at R = 1 um.
inline constexpr double kDipoleDipoleHzUm3 =
    kHartreeHz * kBohrRadiusUm * kBohrRadiusUm * kBohrRadiusUm;

/// e * a0 * (1 V/cm) / h in Hz.
inline constexpr double kDipoleFieldHzPerVcm =
    kElementaryCharge * kBohrRadiusM * 100.0 / kPlanck;

}  // namespace rydberg::units
