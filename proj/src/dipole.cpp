#include "rydberg/dipole.hpp"

#include <cmath>
#include <cstdlib>

#include "rydberg/errors.hpp"
#include "rydberg/units.hpp"
#include "rydberg/wigner.hpp"

namespace rydberg {

namespace {
double parity(int twice_exponent) { return (std::abs(twice_exponent / 2) % 2 == 0) ? 1.0 : -1.0; }
}  // namespace

double reduced_angular_factor(int l, int two_j, int lp, int two_jp) {
  if (std::abs(l - lp) != 1 || std::abs(two_j - two_jp) > 2) return 0.0;
  // spin-orbit decoupling: <l s j || d || l' s j'>
  const double six = wigner6j_twice(2 * l, two_j, 1, two_jp, 2 * lp, 2);
  const double orbital = parity(2 * l) * std::sqrt((2.0 * l + 1.0) * (2.0 * lp + 1.0)) *
                         wigner3j_twice(2 * l, 2, 2 * lp, 0, 0, 0);
  return parity(2 * l + 1 + two_jp + 2) * std::sqrt((two_j + 1.0) * (two_jp + 1.0)) * six * orbital;
}

double angular_factor(const StateLabel& a, const StateLabel& b, int q) {
  if (q < -1 || q > 1) throw DomainError("dipole component q must be -1, 0 or +1");
  if (a.species != b.species) return 0.0;
  if (a.two_mj != b.two_mj + 2 * q) return 0.0;
  const double reduced = reduced_angular_factor(a.l, a.two_j, b.l, b.two_j);
  if (reduced == 0.0) return 0.0;
  return parity(a.two_j - a.two_mj) * wigner3j_twice(a.two_j, 2, b.two_j, -a.two_mj, 2 * q, b.two_mj) * reduced;
}

double dipole_matrix_element(const RadialSolver& solver, const StateLabel& a, const StateLabel& b, int q) {
  const double ang = angular_factor(a, b, q);
  if (ang == 0.0) return 0.0;
  return ang * solver.matrix_element(a, b, 1);
}

double lande_gj(int l, int two_j) {
  const double j = 0.5 * two_j;
  const double s = 0.5;
  const double jj = j * (j + 1.0);
  const double ll = l * (l + 1.0);
  const double ss = s * (s + 1.0);
  const double gl = 1.0;
  const double gs = units::kElectronSpinG;
  return gl * (jj - ss + ll) / (2.0 * jj) + gs * (jj + ss - ll) / (2.0 * jj);
}

double zeeman_shift(const StateLabel& state, double b_gauss) {
  if (b_gauss < 0.0) throw DomainError("magnetic field magnitude must be non-negative");
  return lande_gj(state.l, state.two_j) * units::kBohrMagnetonHzPerG * b_gauss * state.mj();
}

}  // namespace rydberg
