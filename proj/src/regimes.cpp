#include "rydberg/regimes.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <Eigen/Dense>

#include "rydberg/errors.hpp"

namespace rydberg {

namespace {

constexpr double kFarDetunedRatio = 10.0;

void require_detuned(double delta, const char* what) {
  if (delta == 0.0 || !std::isfinite(delta)) {
    throw DomainError(std::string(what) + ": detuning must be finite and nonzero");
  }
}

// Eigenvalue of [[0, c], [c, -delta]] continuously connected to 0 as c -> 0.
double adiabatic_ground(double coupling, double delta) {
  Eigen::Matrix2d h;
  h << 0.0, coupling, coupling, -delta;
  const Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> eig(h, Eigen::EigenvaluesOnly);
  return delta > 0.0 ? eig.eigenvalues()(1) : eig.eigenvalues()(0);
}

}  // namespace

double blockade_radius(double c6_hz_um6, double rabi_hz) {
  if (!(c6_hz_um6 > 0.0) || !(rabi_hz > 0.0)) {
    throw DomainError("blockade_radius: C6 and Omega must be positive");
  }
  return std::pow(c6_hz_um6 / rabi_hz, 1.0 / 6.0);
}

bool blockade_resolved(double shift_hz, double linewidth_hz, double margin) {
  if (linewidth_hz < 0.0 || margin <= 0.0) throw DomainError("blockade_resolved: negative linewidth or margin");
  return std::abs(shift_hz) > margin * linewidth_hz;
}

double TwoPhotonDrive::detuning_ratio() const {
  const double omega = std::max(std::abs(rabi_red_hz), std::abs(rabi_blue_hz));
  return omega == 0.0 ? std::numeric_limits<double>::infinity() : std::abs(detuning_hz) / omega;
}

EffectiveDrive effective_two_photon(const TwoPhotonDrive& drive) {
  require_detuned(drive.detuning_hz, "effective_two_photon");
  const double d = drive.detuning_hz;
  EffectiveDrive out;
  out.rabi_hz = drive.rabi_red_hz * drive.rabi_blue_hz / (2.0 * d);
  out.detuning_hz = drive.two_photon_detuning_hz -
                    (drive.rabi_red_hz * drive.rabi_red_hz - drive.rabi_blue_hz * drive.rabi_blue_hz) / (4.0 * d);
  if (const double ratio = drive.detuning_ratio(); ratio < kFarDetunedRatio) {
    std::ostringstream os;
    os << "|Delta|/Omega = " << ratio << " < " << kFarDetunedRatio
       << ": intermediate state not far detuned, effective drive is approximate";
    out.warning = os.str();
  }
  return out;
}

double scattering_rate(const TwoPhotonDrive& drive) {
  require_detuned(drive.detuning_hz, "scattering_rate");
  if (drive.linewidth_hz < 0.0) throw DomainError("scattering_rate: negative linewidth");
  const double d = drive.detuning_hz;
  return drive.linewidth_hz * (drive.rabi_red_hz * drive.rabi_red_hz + drive.rabi_blue_hz * drive.rabi_blue_hz) /
         (4.0 * d * d);
}

double dressed_interaction_oracle(const DressingParams& p) {
  require_detuned(p.detuning_dress_hz, "dressed_interaction_oracle");
  if (p.rabi_hz < 0.0) throw DomainError("dressed_interaction_oracle: negative Rabi frequency");
  const double pair = adiabatic_ground(std::sqrt(2.0) * p.rabi_hz / 2.0, p.detuning_dress_hz);
  const double single = adiabatic_ground(p.rabi_hz / 2.0, p.detuning_dress_hz);
  return pair - 2.0 * single;
}

DressedInteraction dressed_interaction(const DressingParams& p) {
  require_detuned(p.detuning_dress_hz, "dressed_interaction");
  if (p.rabi_hz < 0.0) throw DomainError("dressed_interaction: negative Rabi frequency");
  const double d = p.detuning_dress_hz;
  const double o2 = p.rabi_hz * p.rabi_hz;
  const double sgn = d > 0.0 ? 1.0 : -1.0;
  const double root1 = std::sqrt(d * d + o2);
  const double root2 = std::sqrt(d * d + 2.0 * o2);

  DressedInteraction out;
  out.j_formula_hz = 0.5 * (d + sgn * (root2 - root1));
  out.j_oracle_hz = dressed_interaction_oracle(p);
  out.j_reconciled_hz = out.j_formula_hz - 0.5 * sgn * root1;
  // Both sides are differences of O(Delta) numbers.
  const double tol = 1e-6 * std::abs(out.j_oracle_hz) + 1e-13 * (std::abs(d) + p.rabi_hz);
  out.consistent = std::abs(out.j_reconciled_hz - out.j_oracle_hz) <= tol;
  return out;
}

}  // namespace rydberg
