#pragma once

#include "rydberg/radial.hpp"
#include "rydberg/species.hpp"

namespace rydberg {

/// Angular part of the reduced element <l j || d || l' j'> for a single
/// valence electron with s = 1/2 (radial integral factored out).
double reduced_angular_factor(int l, int two_j, int lp, int two_jp);

/// Angular factor of <a| d_q |b>, q in {-1, 0, +1}:
///   (-1)^(j - m) (j 1 j'; -m q m') <l j || d || l' j'>.
/// Returns exactly 0 whenever a selection rule fails (m = m' + q, |dl| = 1,
/// |dj| <= 1), which makes the element obey
///   <a|d_q|b> = (-1)^q <b|d_-q|a>.
double angular_factor(const StateLabel& a, const StateLabel& b, int q);

/// Full dipole element <a| d_q |b> in e*a0 (radial integral from the solver).
double dipole_matrix_element(const RadialSolver& solver, const StateLabel& a, const StateLabel& b, int q);

/// Lande factor g_J with g_L = 1 and g_S = 2.0023.
double lande_gj(int l, int two_j);

/// Linear Zeeman shift g_J mu_B B m_j / h in Hz for a field of `b_gauss` along z.
double zeeman_shift(const StateLabel& state, double b_gauss);

}  // namespace rydberg
