#include <cmath>
#include <random>
#include <vector>

#include "doctest.h"
#include "rydberg/dipole.hpp"
#include "rydberg/units.hpp"
#include "rydberg/wigner.hpp"

using namespace rydberg;

namespace {

const SpeciesTable& table() { return SpeciesTable::bundled(); }

// Clebsch-Gordan <l ml, 1/2 ms | j m> (doubled arguments) via its 3j form.
double clebsch(int l2, int ml2, int ms2, int j2, int m2) {
  const int exponent = (l2 - 1 + m2) / 2;
  const double sign = (std::abs(exponent) % 2 == 0) ? 1.0 : -1.0;
  return sign * std::sqrt(j2 + 1.0) * wigner3j_twice(l2, 1, j2, ml2, ms2, -m2);
}

// <l ml | C^1_q | l' ml'> in the uncoupled orbital basis.
double orbital_element(int l, int ml, int lp, int mlp, int q) {
  const double sign = (std::abs(ml) % 2 == 0) ? 1.0 : -1.0;
  return sign * std::sqrt((2.0 * l + 1.0) * (2.0 * lp + 1.0)) * wigner3j(l, 1, lp, -ml, q, mlp) *
         wigner3j(l, 1, lp, 0, 0, 0);
}

// Independent angular factor: expand both states in |l ml>|s ms> and sum.
double uncoupled_angular(const StateLabel& a, const StateLabel& b, int q) {
  double sum = 0.0;
  for (int ms2 : {-1, 1}) {
    const int mla2 = a.two_mj - ms2;
    const int mlb2 = b.two_mj - ms2;
    if (std::abs(mla2) > 2 * a.l || std::abs(mlb2) > 2 * b.l) continue;
    sum += clebsch(2 * a.l, mla2, ms2, a.two_j, a.two_mj) * clebsch(2 * b.l, mlb2, ms2, b.two_j, b.two_mj) *
           orbital_element(a.l, mla2 / 2, b.l, mlb2 / 2, q);
  }
  return sum;
}

std::vector<StateLabel> sublevels(Species sp, int n, int l) {
  std::vector<StateLabel> out;
  for (int two_j : {2 * l - 1, 2 * l + 1}) {
    if (two_j < 1) continue;
    for (int m = -two_j; m <= two_j; m += 2) out.push_back(StateLabel::from_twice(sp, n, l, two_j, m));
  }
  return out;
}

}  // namespace

TEST_CASE("angular factor matches the uncoupled-basis expansion") {
  for (int l = 0; l <= 4; ++l) {
    for (int lp : {l - 1, l + 1}) {
      if (lp < 0) continue;
      for (const auto& a : sublevels(Species::Rb87, 30, l)) {
        for (const auto& b : sublevels(Species::Rb87, 31, lp)) {
          for (int q = -1; q <= 1; ++q) {
            INFO(a.to_string() << " q=" << q << " " << b.to_string());
            CHECK(angular_factor(a, b, q) == doctest::Approx(uncoupled_angular(a, b, q)).epsilon(1e-12).scale(1.0));
          }
        }
      }
    }
  }
}

TEST_CASE("selection rules and hermiticity") {
  RadialSolver solver(table());
  const StateLabel d = parse_state("Rb:62D3/2:3/2");
  const StateLabel p = parse_state("Rb:63P1/2:1/2");
  CHECK(dipole_matrix_element(solver, d, p, 0) == 0.0);
  CHECK(dipole_matrix_element(solver, d, p, -1) == 0.0);
  CHECK(dipole_matrix_element(solver, d, parse_state("Rb:63S1/2:1/2"), 1) == 0.0);     // dl = 2
  CHECK(dipole_matrix_element(solver, d, parse_state("Rb:60F7/2:1/2"), 1) == 0.0);     // dj = 2
  CHECK_THROWS(angular_factor(d, p, 2));

  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 300; ++trial) {
    const int l = static_cast<int>(rng() % 4);
    const int lp = (l == 0 || rng() % 2) ? l + 1 : l - 1;
    const auto la = sublevels(Species::Rb87, 40, l);
    const auto lb = sublevels(Species::Rb87, 41, lp);
    const StateLabel& a = la[rng() % la.size()];
    const StateLabel& b = lb[rng() % lb.size()];
    for (int q = -1; q <= 1; ++q) {
      const double lhs = angular_factor(a, b, q);
      const double rhs = ((q % 2 == 0) ? 1.0 : -1.0) * angular_factor(b, a, -q);
      CHECK(lhs == doctest::Approx(rhs).epsilon(1e-13).scale(1.0));
    }
  }
}

TEST_CASE("microwave element between 62D3/2 and 63P1/2") {
  RadialSolver solver(table());
  const double d = dipole_matrix_element(solver, parse_state("Rb:62D3/2:3/2"), parse_state("Rb:63P1/2:1/2"), 1);
  CHECK(std::abs(std::abs(d) / 2858.0 - 1.0) < 0.02);
  // angular part: stretched D3/2 -> P1/2 carries 1/sqrt(3)
  CHECK(std::abs(angular_factor(parse_state("Rb:62D3/2:3/2"), parse_state("Rb:63P1/2:1/2"), 1)) ==
        doctest::Approx(1.0 / std::sqrt(3.0)).epsilon(1e-12));
}

TEST_CASE("neighbouring-state element grows as n^2") {
  RadialSolver solver(table());
  std::vector<double> xs, ys;
  for (int n = 40; n <= 90; n += 10) {
    const double d = dipole_matrix_element(solver, StateLabel::from_twice(Species::Rb87, n, 0, 1, 1),
                                           StateLabel::from_twice(Species::Rb87, n, 1, 3, 1), 0);
    xs.push_back(std::log(n));
    ys.push_back(std::log(std::abs(d)));
  }
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) mx += xs[i], my += ys[i];
  mx /= xs.size();
  my /= ys.size();
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) sxy += (xs[i] - mx) * (ys[i] - my), sxx += (xs[i] - mx) * (xs[i] - mx);
  const double slope = sxy / sxx;
  CHECK(slope > 1.9);
  CHECK(slope < 2.1);
}

TEST_CASE("Zeeman shifts") {
  CHECK(lande_gj(0, 1) == doctest::Approx(units::kElectronSpinG));
  CHECK(lande_gj(1, 1) == doctest::Approx(2.0 / 3.0).epsilon(1e-3));
  CHECK(lande_gj(2, 3) == doctest::Approx(0.8).epsilon(1e-3));

  const StateLabel d = parse_state("Rb:62D3/2:3/2");
  // hand evaluation: g_J = 1.2 - 0.2 * 2.0023, mu_B/h = 1.39962449361 MHz/G
  const double g = 1.2 - 0.2 * 2.0023;
  CHECK(zeeman_shift(d, 6.6) == doctest::Approx(g * 1.39962449361e6 * 6.6 * 1.5).epsilon(1e-12));
  CHECK(std::abs(zeeman_shift(d, 6.6) / 11.1e6 - 1.0) < 0.01);
  CHECK(zeeman_shift(d, 0.0) == 0.0);
  CHECK(zeeman_shift(d, 3.0) == -zeeman_shift(d.with_mj(-3), 3.0));
  CHECK_THROWS(zeeman_shift(d, -1.0));
}
