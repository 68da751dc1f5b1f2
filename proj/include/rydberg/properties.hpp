#pragma once

#include "rydberg/radial.hpp"
#include "rydberg/species.hpp"

namespace rydberg {

enum class RadiusMethod { Numerov, Hydrogenic };

/// <r> in nm, from the Numerov wavefunction or the closed-form estimate
/// (a0/2)(3 n*^2 - l(l+1)).
double mean_radius_nm(const RadialSolver& solver, const StateLabel& state,
                      RadiusMethod method = RadiusMethod::Numerov);

struct Lifetime {
  double lifetime_us = 0.0;
  /// Spontaneous decay rate summed over all lower levels, 1/s.
  double radiative_rate = 0.0;
  /// Blackbody-stimulated rate (up and down), 1/s; zero at T = 0.
  double blackbody_rate = 0.0;
};

/// Radiative lifetime at temperature T (K). Spontaneous emission runs over
/// every dipole-allowed lower level; blackbody transfer over levels with
/// |dn| <= blackbody_window. Continuum channels are not included.
Lifetime lifetime(const RadialSolver& solver, const StateLabel& state, double temperature_k,
                  int blackbody_window = 20);

}  // namespace rydberg
