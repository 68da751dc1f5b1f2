#include "rydberg/wigner.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <string>
#include <vector>

#include "rydberg/errors.hpp"

namespace rydberg {

namespace {

// ln(n!) for the Racah sums; long double keeps the alternating sums accurate
// well beyond the range where n! itself would overflow a double.
long double log_factorial(int n) {
  static const std::vector<long double> table = [] {
    std::vector<long double> t(1024);
    t[0] = 0.0L;
    for (std::size_t i = 1; i < t.size(); ++i) t[i] = t[i - 1] + std::log(static_cast<long double>(i));
    return t;
  }();
  if (n < 0) throw DomainError("negative factorial argument");
  if (static_cast<std::size_t>(n) >= table.size()) return std::lgamma(static_cast<long double>(n) + 1.0L);
  return table[static_cast<std::size_t>(n)];
}

int twice(double v, const char* what) {
  const double t = 2.0 * v;
  const double r = std::round(t);
  if (std::abs(t - r) > 1e-9) {
    throw DomainError(std::string(what) + " = " + std::to_string(v) + " is not a half-integer");
  }
  return static_cast<int>(r);
}

bool triangle(int a, int b, int c) {
  return a >= 0 && b >= 0 && c >= 0 && c <= a + b && c >= std::abs(a - b) && (a + b + c) % 2 == 0;
}

// ln Delta(abc) with doubled arguments.
long double log_delta(int a, int b, int c) {
  return 0.5L * (log_factorial((a + b - c) / 2) + log_factorial((a - b + c) / 2) + log_factorial((-a + b + c) / 2) -
                 log_factorial((a + b + c) / 2 + 1));
}

}  // namespace

double wigner3j_twice(int j1, int j2, int j3, int m1, int m2, int m3) {
  if (j1 < 0 || j2 < 0 || j3 < 0) throw DomainError("3j symbol with negative j");
  if ((j1 - m1) % 2 != 0 || (j2 - m2) % 2 != 0 || (j3 - m3) % 2 != 0) {
    throw DomainError("3j symbol: j and m must both be integer or both half-integer");
  }
  if (m1 + m2 + m3 != 0) return 0.0;
  if (std::abs(m1) > j1 || std::abs(m2) > j2 || std::abs(m3) > j3) return 0.0;
  if (!triangle(j1, j2, j3)) return 0.0;

  // Racah formula, all quantities halved back to integers.
  const int a1 = (j3 - j2 + m1) / 2;  // j3 - j2 + m1
  const int a2 = (j3 - j1 - m2) / 2;  // j3 - j1 - m2
  const int b1 = (j1 + j2 - j3) / 2;
  const int b2 = (j1 - m1) / 2;
  const int b3 = (j2 + m2) / 2;
  const int k_min = std::max({0, -a1, -a2});
  const int k_max = std::min({b1, b2, b3});
  if (k_min > k_max) return 0.0;

  const long double prefactor =
      log_delta(j1, j2, j3) +
      0.5L * (log_factorial((j1 + m1) / 2) + log_factorial((j1 - m1) / 2) + log_factorial((j2 + m2) / 2) +
              log_factorial((j2 - m2) / 2) + log_factorial((j3 + m3) / 2) + log_factorial((j3 - m3) / 2));
  long double sum = 0.0L;
  for (int k = k_min; k <= k_max; ++k) {
    const long double log_den = log_factorial(k) + log_factorial(a1 + k) + log_factorial(a2 + k) +
                                log_factorial(b1 - k) + log_factorial(b2 - k) + log_factorial(b3 - k);
    const long double term = std::exp(prefactor - log_den);
    sum += (k % 2 == 0) ? term : -term;
  }
  const int phase = (j1 - j2 - m3) / 2;
  return static_cast<double>(((phase % 2) == 0 ? 1.0L : -1.0L) * sum);
}

double wigner6j_twice(int j1, int j2, int j3, int j4, int j5, int j6) {
  if (j1 < 0 || j2 < 0 || j3 < 0 || j4 < 0 || j5 < 0 || j6 < 0) throw DomainError("6j symbol with negative j");
  if (!triangle(j1, j2, j3) || !triangle(j1, j5, j6) || !triangle(j4, j2, j6) || !triangle(j4, j5, j3)) return 0.0;

  const int t1 = (j1 + j2 + j3) / 2;
  const int t2 = (j1 + j5 + j6) / 2;
  const int t3 = (j4 + j2 + j6) / 2;
  const int t4 = (j4 + j5 + j3) / 2;
  const int p1 = (j1 + j2 + j4 + j5) / 2;
  const int p2 = (j2 + j3 + j5 + j6) / 2;
  const int p3 = (j3 + j1 + j6 + j4) / 2;
  const int k_min = std::max({t1, t2, t3, t4});
  const int k_max = std::min({p1, p2, p3});
  if (k_min > k_max) return 0.0;

  const long double prefactor = log_delta(j1, j2, j3) + log_delta(j1, j5, j6) + log_delta(j4, j2, j6) +
                                log_delta(j4, j5, j3);
  long double sum = 0.0L;
  for (int k = k_min; k <= k_max; ++k) {
    const long double log_term = prefactor + log_factorial(k + 1) -
                                 (log_factorial(k - t1) + log_factorial(k - t2) + log_factorial(k - t3) +
                                  log_factorial(k - t4) + log_factorial(p1 - k) + log_factorial(p2 - k) +
                                  log_factorial(p3 - k));
    const long double term = std::exp(log_term);
    sum += (k % 2 == 0) ? term : -term;
  }
  return static_cast<double>(sum);
}

double wigner3j(double j1, double j2, double j3, double m1, double m2, double m3) {
  return wigner3j_twice(twice(j1, "j1"), twice(j2, "j2"), twice(j3, "j3"), twice(m1, "m1"), twice(m2, "m2"),
                        twice(m3, "m3"));
}

double wigner6j(double j1, double j2, double j3, double j4, double j5, double j6) {
  return wigner6j_twice(twice(j1, "j1"), twice(j2, "j2"), twice(j3, "j3"), twice(j4, "j4"), twice(j5, "j5"),
                        twice(j6, "j6"));
}

}  // namespace rydberg
