#pragma once

#include <stdexcept>
#include <string>

namespace rydberg {

/// Invalid quantum numbers, parameters outside their domain, malformed input.
class DomainError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Numerical failure (divergent wavefunction, eigensolver trouble, ...).
class SolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A perturbative sum hit an energy denominator below the resonance guard.
class NearResonanceError : public SolverError {
 public:
  NearResonanceError(const std::string& what, std::string channel, double defect_hz)
      : SolverError(what), channel_(std::move(channel)), defect_hz_(defect_hz) {}

  const std::string& channel() const noexcept { return channel_; }
  double defect_hz() const noexcept { return defect_hz_; }

 private:
  std::string channel_;
  double defect_hz_;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace rydberg
