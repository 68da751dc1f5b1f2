#include "rydberg/properties.hpp"

#include <algorithm>
#include <cmath>

#include "rydberg/dipole.hpp"
#include "rydberg/errors.hpp"
#include "rydberg/units.hpp"

namespace rydberg {

double mean_radius_nm(const RadialSolver& solver, const StateLabel& state, RadiusMethod method) {
  if (method == RadiusMethod::Hydrogenic) {
    solver.table().validate(state);
    return hydrogenic_mean_radius(solver.table().effective_n(state), state.l) * units::kBohrRadiusNm;
  }
  return solver.wavefunction(state)->expectation(1) * units::kBohrRadiusNm;
}

Lifetime lifetime(const RadialSolver& solver, const StateLabel& state, double temperature_k, int blackbody_window) {
  if (!(temperature_k >= 0.0)) throw DomainError("temperature must be non-negative");
  const SpeciesTable& table = solver.table();
  const SpeciesData& data = table.at(state.species);
  const double e0 = table.energy(state);
  const double c3 = std::pow(units::kInverseFineStructure, 3);

  Lifetime out;
  for (int lp : {state.l - 1, state.l + 1}) {
    if (lp < 0) continue;
    for (int two_jp : {2 * lp - 1, 2 * lp + 1}) {
      if (two_jp < 1 || std::abs(two_jp - state.two_j) > 2) continue;
      const double ang = reduced_angular_factor(lp, two_jp, state.l, state.two_j);
      if (ang == 0.0) continue;
      const int n_lo = std::max(lp + 1, lp <= 3 ? data.min_n[static_cast<std::size_t>(lp)] : 1);
      for (int np = n_lo; np <= state.n + blackbody_window; ++np) {
        const StateLabel other = StateLabel::from_twice(state.species, np, lp, two_jp, two_jp);
        const double de = e0 - table.energy(other);  // > 0 for lower levels
        const bool in_window = std::abs(np - state.n) <= blackbody_window;
        if (de <= 0.0 && !(temperature_k > 0.0 && in_window)) continue;
        // Sum over final m and q of |<b|d_q|a>|^2 is |<b||d||a>|^2 / (2j_a + 1).
        const double radial = solver.matrix_element(state, other, 1);
        const double d2 = radial * radial * ang * ang / (state.two_j + 1.0);
        const double w_au = std::abs(de) / units::kHartreeHz;
        const double a_rate = 4.0 * w_au * w_au * w_au * d2 / (3.0 * c3) / units::kAtomicTimeS;
        if (de > 0.0) out.radiative_rate += a_rate;
        if (temperature_k > 0.0 && in_window) {
          const double x = units::kPlanck * std::abs(de) / (units::kBoltzmann * temperature_k);
          const double occupation = 1.0 / std::expm1(x);
          // Both stimulated emission and absorption are n_bar times the
          // spontaneous rate summed over the final sublevels.
          out.blackbody_rate += a_rate * occupation;
        }
      }
    }
  }
  const double total = out.radiative_rate + out.blackbody_rate;
  if (!(total > 0.0)) throw SolverError(state.to_string(false) + ": no decay channels found");
  out.lifetime_us = 1e6 / total;
  return out;
}

}  // namespace rydberg
