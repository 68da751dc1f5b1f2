#pragma once

#include <vector>

#include <Eigen/Dense>

namespace rydberg {

/// Least-squares slope of log|y| against log x. Throws DomainError for fewer
/// than two points, non-positive x or zero y.
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

struct OscillationFit {
  double frequency_hz = 0.0;
  double offset = 0.0;
  /// Coefficient b of y = offset + b cos(2 pi f t).
  double cosine = 0.0;
  double rms_residual = 0.0;
};

/// Fits y = a + b cos(2 pi f t) on a uniform grid of step dt; f is refined
/// by a coarse scan of [f_lo, f_hi] and golden section around the best cell.
OscillationFit fit_oscillation(const Eigen::VectorXd& y, double dt, double f_lo, double f_hi);

/// Normalized autocorrelation of the mean-removed series for lags
/// 0 .. size/2 - 1. A constant series (to rounding) gives zeros past lag 0.
std::vector<double> autocorrelation(const Eigen::VectorXd& x);

struct RevivalSignature {
  bool present = false;
  /// Lag (in samples) and value of the first local minimum.
  int collapse_lag = 0;
  double collapse_value = 0.0;
  /// Largest value after the collapse and its lag.
  int revival_lag = 0;
  double revival_value = 0.0;
};

/// Collapse and revival: the autocorrelation falls to a negative first
/// minimum and later climbs back by more than `rise`.
RevivalSignature revival_signature(const std::vector<double>& autocorr, double rise = 0.5);

}  // namespace rydberg
