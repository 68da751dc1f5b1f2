#include "rydberg/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "rydberg/errors.hpp"

namespace rydberg {

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw DomainError("loglog_slope: need two or more (x, y) pairs");
  const auto n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0) || y[i] == 0.0) throw DomainError("loglog_slope: x must be positive and y nonzero");
    mx += std::log(x[i]);
    my += std::log(std::abs(y[i]));
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = std::log(x[i]) - mx;
    sxy += dx * (std::log(std::abs(y[i])) - my);
    sxx += dx * dx;
  }
  if (sxx == 0.0) throw DomainError("loglog_slope: x values are all equal");
  return sxy / sxx;
}

namespace {

// Linear least squares for fixed f; returns the residual sum.
double solve_linear(const Eigen::VectorXd& y, double dt, double f, double& a, double& b) {
  const Eigen::Index n = y.size();
  double sc = 0.0, scc = 0.0, sy = 0.0, syc = 0.0;
  Eigen::VectorXd c(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    c[i] = std::cos(2.0 * std::numbers::pi * f * dt * static_cast<double>(i));
    sc += c[i];
    scc += c[i] * c[i];
    sy += y[i];
    syc += y[i] * c[i];
  }
  const double s1 = static_cast<double>(n);
  const double det = s1 * scc - sc * sc;
  if (std::abs(det) < 1e-300) {
    a = sy / s1;
    b = 0.0;
  } else {
    a = (sy * scc - sc * syc) / det;
    b = (s1 * syc - sc * sy) / det;
  }
  return (y.array() - a - b * c.array()).square().sum();
}

}  // namespace

OscillationFit fit_oscillation(const Eigen::VectorXd& y, double dt, double f_lo, double f_hi) {
  if (y.size() < 4) throw DomainError("fit_oscillation: need at least 4 samples");
  if (!(dt > 0.0) || !(f_lo > 0.0) || !(f_hi > f_lo)) throw DomainError("fit_oscillation: bad grid or bracket");
  // Coarse scan first: the residual has one local minimum per alias of f.
  constexpr int kCoarse = 400;
  const double step = (f_hi - f_lo) / kCoarse;
  double a = 0.0, b = 0.0, best = f_lo, best_rss = std::numeric_limits<double>::infinity();
  for (int i = 0; i <= kCoarse; ++i) {
    const double f = f_lo + step * i;
    const double rss = solve_linear(y, dt, f, a, b);
    if (rss < best_rss) {
      best_rss = rss;
      best = f;
    }
  }
  const double g = (std::sqrt(5.0) - 1.0) / 2.0;
  double lo = std::max(f_lo, best - step), hi = std::min(f_hi, best + step);
  for (int it = 0; it < 80; ++it) {
    const double m1 = hi - g * (hi - lo), m2 = lo + g * (hi - lo);
    if (solve_linear(y, dt, m1, a, b) < solve_linear(y, dt, m2, a, b)) hi = m2;
    else lo = m1;
  }
  OscillationFit fit;
  fit.frequency_hz = 0.5 * (lo + hi);
  const double rss = solve_linear(y, dt, fit.frequency_hz, a, b);
  fit.offset = a;
  fit.cosine = b;
  fit.rms_residual = std::sqrt(rss / static_cast<double>(y.size()));
  return fit;
}

std::vector<double> autocorrelation(const Eigen::VectorXd& x) {
  const Eigen::VectorXd d = x.array() - x.mean();
  const double c0 = d.squaredNorm();
  // rounding residue of a constant series is not a signal
  const bool constant = d.size() == 0 || d.cwiseAbs().maxCoeff() <= 1e-12 * std::max(1.0, std::abs(x.mean()));
  std::vector<double> out;
  for (Eigen::Index lag = 0; lag < d.size() / 2; ++lag) {
    if (constant) {
      out.push_back(lag == 0 ? 1.0 : 0.0);
      continue;
    }
    out.push_back(d.head(d.size() - lag).dot(d.tail(d.size() - lag)) / c0);
  }
  return out;
}

RevivalSignature revival_signature(const std::vector<double>& ac, double rise) {
  RevivalSignature sig;
  std::size_t k = 1;
  while (k + 1 < ac.size() && !(ac[k] < ac[k - 1] && ac[k] <= ac[k + 1])) ++k;
  if (k + 1 >= ac.size()) return sig;
  sig.collapse_lag = static_cast<int>(k);
  sig.collapse_value = ac[k];
  sig.revival_lag = sig.collapse_lag;
  sig.revival_value = ac[k];
  for (std::size_t i = k; i < ac.size(); ++i) {
    if (ac[i] > sig.revival_value) {
      sig.revival_value = ac[i];
      sig.revival_lag = static_cast<int>(i);
    }
  }
  sig.present = sig.collapse_value < 0.0 && sig.revival_value > sig.collapse_value + rise;
  return sig;
}

}  // namespace rydberg
