#pragma once

namespace rydberg {

/// Wigner 3j symbol (j1 j2 j3; m1 m2 m3). Arguments must be integers or
/// half-integers (DomainError otherwise); symbols violating the triangle or
/// m-sum rules are 0.
double wigner3j(double j1, double j2, double j3, double m1, double m2, double m3);

/// Wigner 6j symbol {j1 j2 j3; j4 j5 j6}; 0 when a triad fails the triangle rule.
double wigner6j(double j1, double j2, double j3, double j4, double j5, double j6);

/// Same symbols with every argument passed doubled (2j, 2m).
double wigner3j_twice(int tj1, int tj2, int tj3, int tm1, int tm2, int tm3);
double wigner6j_twice(int tj1, int tj2, int tj3, int tj4, int tj5, int tj6);

}  // namespace rydberg
