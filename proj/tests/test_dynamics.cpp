#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "doctest.h"
#include "fit.hpp"
#include "oracles.hpp"
#include "rydberg/dynamics.hpp"
#include "rydberg/errors.hpp"
#include "rydberg/species.hpp"

using namespace rydberg;

namespace {

constexpr double kPi = std::numbers::pi;

SpinSystem ising_system(const AtomArray& array, const Eigen::MatrixXd& u, double rabi_hz, double detuning_hz = 0.0) {
  SpinSystem s;
  s.array = array;
  s.couplings = CouplingMatrix::imported(CouplingModel::IsingVdW, u);
  s.drive.rabi_hz = rabi_hz;
  s.drive.detuning_hz = detuning_hz;
  return s;
}

Eigen::MatrixXd all_to_all(int n, double u) {
  Eigen::MatrixXd m = Eigen::MatrixXd::Constant(n, n, u);
  m.diagonal().setZero();
  return m;
}

std::vector<double> as_vector(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

}  // namespace

TEST_CASE("single atom Rabi oscillation is exact") {
  const auto sys = ising_system(AtomArray::chain(1, 1.0), Eigen::MatrixXd::Zero(1, 1), 1.3e6);
  const auto times = linspace(0.0, 5e-6, 401);
  const auto r = evolve(sys.hamiltonian(), basis_state(1, 0), times, NoiseParams::none());
  for (std::size_t k = 0; k < times.size(); ++k) {
    const double expected = std::pow(std::sin(kPi * 1.3e6 * times[k]), 2);
    CHECK(std::abs(r.populations(static_cast<Eigen::Index>(k), 1) - expected) < 1e-8);
  }
}

TEST_CASE("projector and spin forms differ by a constant") {
  const AtomArray a{{Eigen::Vector3d(0, 0, 0), Eigen::Vector3d(3, 0, 1), Eigen::Vector3d(-1, 4, 2)}};
  Eigen::MatrixXd u(3, 3);
  u << 0, 2.1e6, 0.4e6, 2.1e6, 0, 0.9e6, 0.4e6, 0.9e6, 0;
  DriveParams d;
  d.rabi_hz = 1.1e6;
  d.detuning_hz = 0.3e6;
  const auto c = CouplingMatrix::imported(CouplingModel::IsingVdW, u);
  const Eigen::MatrixXcd hp(build_ising_hamiltonian(a, d, c, IsingForm::Projector));
  const Eigen::MatrixXcd hs(build_ising_hamiltonian(a, d, c, IsingForm::Spin));
  const Eigen::MatrixXcd diff = hp - hs;
  const Complex offset = diff(0, 0);
  CHECK((diff - offset * Eigen::MatrixXcd::Identity(8, 8)).cwiseAbs().maxCoeff() < 1e-6);
  // offset = -N delta / 2 + sum_{i<j} U_ij / 4
  CHECK(offset.real() == doctest::Approx(-3 * 0.3e6 / 2 + (2.1e6 + 0.4e6 + 0.9e6) / 4));

  const auto times = linspace(0.0, 3e-6, 61);
  const auto rp = evolve(SparseHamiltonian(hp.sparseView()), basis_state(3, 0), times, NoiseParams::none(), true);
  const auto rs = evolve(SparseHamiltonian(hs.sparseView()), basis_state(3, 0), times, NoiseParams::none(), true);
  double worst = 0.0;
  for (std::size_t k = 0; k < times.size(); ++k) {
    const Complex ov = rp.states[k].dot(rs.states[k]);
    const Eigen::VectorXcd aligned = rs.states[k] * std::conj(ov) / std::abs(ov);
    worst = std::max(worst, (rp.states[k] - aligned).cwiseAbs().maxCoeff());
  }
  CHECK(worst < 1e-10);
}

TEST_CASE("blockaded pair oscillates at sqrt(2) Omega") {
  const double om = 1e6;
  for (double ratio : {100.0, 1e3, 1e4}) {
    const auto sys = ising_system(AtomArray::chain(2, 5.0), all_to_all(2, ratio * om), om);
    const auto times = linspace(0.0, 4e-6, 2001);
    const auto r = evolve(sys.hamiltonian(), basis_state(2, 0), times, NoiseParams::none());
    INFO("U / Omega = " << ratio);
    CHECK(r.series(0b11).maxCoeff() < 1e-3);
    if (ratio >= 1e3) {
      const auto fit = fit_rabi(r.series(0b00), times[1], 1.2 * om, 1.6 * om);
      CHECK(fit.frequency_hz / om == doctest::Approx(std::sqrt(2.0)).epsilon(1e-3));
    }
  }
}

TEST_CASE("collective frequency follows sqrt(N)") {
  const double om = 1e6;
  for (int n : {2, 3, 5, 8}) {
    const auto sys = ising_system(AtomArray::chain(n, 3.0), all_to_all(n, 1e4 * om), om);
    const double w = std::sqrt(static_cast<double>(n)) * om;
    const auto times = linspace(0.0, 4.0 / w, 801);
    const auto r = evolve(sys.hamiltonian(), basis_state(n, 0), times, NoiseParams::none());
    const auto fit = fit_rabi(r.series(0), times[1], 0.8 * w, 1.2 * w);
    INFO("N = " << n);
    CHECK(fit.frequency_hz / w == doctest::Approx(1.0).epsilon(0.01));
  }
}

TEST_CASE("partial blockade matches a fine-step integrator") {
  const double om = 1e6, u = 1.3e6;
  const auto sys = ising_system(AtomArray::chain(2, 5.0), all_to_all(2, u), om);
  const auto times = linspace(0.0, 6e-6, 121);
  const auto r = evolve(sys.hamiltonian(), basis_state(2, 0), times, NoiseParams::none());
  const auto ref = rk4_populations(two_atom_hamiltonian(om, u), basis_state(2, 0), times, 1e-10);
  CHECK((r.populations - ref).cwiseAbs().maxCoeff() < 1e-6);

  // and with damping, against RK4 on the master equation
  NoiseParams noise = NoiseParams::none();
  noise.damping_hz = 0.05e6;
  const auto rd = evolve(sys.hamiltonian(), basis_state(2, 0), times, noise);
  const double g = std::sqrt(2.0 * kPi * noise.damping_hz);
  Eigen::MatrixXcd s0 = Eigen::MatrixXcd::Zero(4, 4), s1 = Eigen::MatrixXcd::Zero(4, 4);
  s0(0, 1) = s0(2, 3) = g;  // atom 0 decays: rg -> gg, rr -> gr
  s1(0, 2) = s1(1, 3) = g;
  Eigen::MatrixXcd rho0 = Eigen::MatrixXcd::Zero(4, 4);
  rho0(0, 0) = 1.0;
  const auto refd = rk4_lindblad(two_atom_hamiltonian(om, u), {s0, s1}, rho0, times, 1e-10);
  CHECK((rd.populations - refd).cwiseAbs().maxCoeff() < 1e-6);
  CHECK(rd.norm_deviation < 1e-10);

  // beating between incommensurate frequencies: no single sinusoid fits P_rr
  const Eigen::VectorXd prr = r.series(0b11);
  const auto fit = fit_rabi(prr, times[1], 0.2 * om, 3.0 * om);
  const double mean = prr.mean();
  double resid = 0.0, spread = 0.0;
  for (Eigen::Index k = 0; k < prr.size(); ++k) {
    const double t = times[static_cast<std::size_t>(k)];
    const double model = mean - 0.5 * fit.amplitude * std::cos(2 * kPi * fit.frequency_hz * t);
    resid += std::pow(prr(k) - model, 2);
    spread += std::pow(prr(k) - mean, 2);
  }
  CHECK(resid > 0.1 * spread);
}

TEST_CASE("norm and energy are conserved over 10^4 steps") {
  Eigen::MatrixXd u(3, 3);
  u << 0, 2e6, 0.5e6, 2e6, 0, 1e6, 0.5e6, 1e6, 0;
  const auto sys = ising_system(AtomArray::chain(3, 4.0), u, 1.5e6, 0.2e6);
  const auto times = linspace(0.0, 20e-6, 10001);
  const auto h = sys.hamiltonian();
  const auto r = evolve(h, basis_state(3, 0b010), times, NoiseParams::none(), true);
  CHECK(r.norm_deviation < 1e-8);
  const Eigen::MatrixXcd hd(h);
  const double e0 = r.states.front().dot(hd * r.states.front()).real();
  double drift = 0.0;
  for (const auto& psi : r.states) drift = std::max(drift, std::abs(psi.dot(hd * psi).real() - e0));
  CHECK(drift < 1e-6 * std::abs(e0));
}

TEST_CASE("large arrays use the Taylor propagator") {
  const int n = 10;
  const double om = 0.7e6;
  const auto sys = ising_system(AtomArray::chain(n, 3.0), Eigen::MatrixXd::Zero(n, n), om);
  const auto times = linspace(0.0, 2e-6, 9);
  const auto r = evolve(sys.hamiltonian(), basis_state(n, 0), times, NoiseParams::none());
  for (std::size_t k = 0; k < times.size(); ++k) {
    const double p = std::pow(std::cos(kPi * om * times[k]), 2 * n);
    CHECK(std::abs(r.populations(static_cast<Eigen::Index>(k), 0) - p) < 1e-9);
  }
  CHECK(r.norm_deviation < 1e-9);
}

TEST_CASE("XY exchange between two atoms") {
  const double j = 0.3e6;
  Eigen::MatrixXd c(2, 2);
  c << 0, j, j, 0;
  const auto h = build_xy_hamiltonian(AtomArray::chain(2, 10.0), CouplingMatrix::imported(CouplingModel::XYExchange, c));
  const auto times = linspace(0.0, 5e-6, 201);
  const auto r = evolve(h, basis_state(2, 0b01), times, NoiseParams::none());
  for (std::size_t k = 0; k < times.size(); ++k) {
    CHECK(std::abs(r.populations(static_cast<Eigen::Index>(k), 0b01) - std::pow(std::cos(2 * kPi * j * times[k]), 2)) <
          1e-10);
  }
  CHECK(r.excitation_variance().maxCoeff() < 1e-10);
}

TEST_CASE("XY chain with couplings J, J, J/8 is aperiodic") {
  const double j = 0.2e6;
  Eigen::MatrixXd c(3, 3);
  c << 0, j, j / 8, j, 0, j, j / 8, j, 0;
  const auto h = build_xy_hamiltonian(AtomArray::chain(3, 20.0), CouplingMatrix::imported(CouplingModel::XYExchange, c));
  const auto times = linspace(0.0, 50.0 / j, 20001);
  const auto r = evolve(h, basis_state(3, 0b001), times, NoiseParams::none());
  CHECK((r.excitation_mean().array() - 1.0).abs().maxCoeff() < 1e-10);
  CHECK(r.excitation_variance().maxCoeff() < 1e-10);
  // no exact revival of the initial state within 50 / J
  double best_return = 0.0;
  for (std::size_t k = 0; k < times.size(); ++k) {
    if (times[k] > 0.1 / j) best_return = std::max(best_return, r.populations(static_cast<Eigen::Index>(k), 0b001));
  }
  CHECK(best_return < 1.0 - 1e-6);
  // the single-excitation spectrum has no small rational gap ratios
  Eigen::Matrix3d block;
  block << 0, j, j / 8, j, 0, j, j / 8, j, 0;
  const Eigen::Vector3d e = Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d>(block).eigenvalues();
  const double ratio = (e(2) - e(1)) / (e(1) - e(0));
  double closest = 1.0;
  for (int q = 1; q <= 50; ++q) closest = std::min(closest, std::abs(ratio * q - std::round(ratio * q)) / q);
  CHECK(closest > 1e-6);
}

TEST_CASE("Lindblad damping of a single atom") {
  NoiseParams noise = NoiseParams::none();
  noise.damping_hz = 0.2e6;
  const auto sys = ising_system(AtomArray::chain(1, 1.0), Eigen::MatrixXd::Zero(1, 1), 0.0);
  SpinSystem s = sys;
  const auto times = linspace(0.0, 3e-6, 31);
  // free decay from |r>: exp(-2 pi gamma t)
  const auto r = evolve(s.hamiltonian(), basis_state(1, 1), times, noise);
  for (std::size_t k = 0; k < times.size(); ++k) {
    CHECK(r.populations(static_cast<Eigen::Index>(k), 1) ==
          doctest::Approx(std::exp(-2 * kPi * noise.damping_hz * times[k])).epsilon(1e-9));
  }
  // driven: steady state of the optical Bloch equations
  s.drive.rabi_hz = 1e6;
  const auto rs = evolve(s.hamiltonian(), basis_state(1, 0), {40e-6}, noise);
  const double om = 2 * kPi * 1e6, g = 2 * kPi * noise.damping_hz;
  CHECK(rs.populations(0, 1) == doctest::Approx(om * om / 4 / (om * om / 2 + g * g / 4)).epsilon(1e-6));

  noise.dephasing_hz = 0.1e6;
  CHECK_THROWS_AS(evolve(ising_system(AtomArray::chain(6, 3.0), Eigen::MatrixXd::Zero(6, 6), 1e6).hamiltonian(),
                         basis_state(6, 0), times, noise),
                  DomainError);
}

TEST_CASE("input validation") {
  CHECK_THROWS_AS(AtomArray::chain(15, 3.0), DomainError);
  CHECK_THROWS_AS(AtomArray::chain(2, 0.05), DomainError);
  Eigen::MatrixXd bad(2, 2);
  bad << 0, 1, 2, 0;
  CHECK_THROWS_AS(CouplingMatrix::imported(CouplingModel::IsingVdW, bad), DomainError);
  const auto sys = ising_system(AtomArray::chain(2, 3.0), all_to_all(2, 1e6), 1e6);
  Eigen::VectorXcd psi = basis_state(2, 0) * 1.1;
  CHECK_THROWS_AS(evolve(sys.hamiltonian(), psi, {0.0}, NoiseParams::none()), DomainError);
  CHECK_THROWS_AS(evolve(sys.hamiltonian(), basis_state(2, 0), {1.0, 0.5}, NoiseParams::none()), DomainError);
  NoiseParams n = NoiseParams::none();
  n.loss = 1.5;
  CHECK_THROWS_AS(n.validate(), DomainError);
  const auto xy = CouplingMatrix::imported(CouplingModel::XYExchange, all_to_all(2, 1e6));
  CHECK_THROWS_AS(build_ising_hamiltonian(AtomArray::chain(2, 3.0), DriveParams{}, xy), DomainError);
}

TEST_CASE("detection channel composition") {
  NoiseParams n = NoiseParams::none();
  n.false_loss = 0.03;
  n.false_presence = 0.01;
  n.loss = 0.05;
  Eigen::VectorXd p(2);
  p << 0.7, 0.3;
  const Eigen::VectorXd d = apply_detection(p, 1, n);
  const double up_given_down = 0.05 + 0.95 * 0.03, down_given_up = 0.95 * 0.01;
  CHECK(d(1) == doctest::Approx(0.7 * up_given_down + 0.3 * (1 - down_given_up)).epsilon(1e-14));
  CHECK(d.sum() == doctest::Approx(1.0).epsilon(1e-14));
  // two atoms: channels act independently
  Eigen::VectorXd p2 = Eigen::VectorXd::Zero(4);
  p2(0) = 1.0;
  const Eigen::VectorXd d2 = apply_detection(p2, 2, n);
  CHECK(d2(3) == doctest::Approx(up_given_down * up_given_down).epsilon(1e-14));
}

TEST_CASE("preparation errors and default noise") {
  const NoiseParams defaults;
  CHECK(defaults.prep_error == 0.05);
  CHECK(defaults.loss == 0.05);
  CHECK(defaults.false_loss == 0.03);
  CHECK(defaults.false_presence == 0.01);
  const auto sys = ising_system(AtomArray::chain(2, 3.0), all_to_all(2, 1e12), 1e6);
  const auto times = linspace(0.0, 2e-6, 101);
  NoiseParams prep = NoiseParams::none();
  prep.prep_error = 0.1;
  const auto r = simulate(sys, 0, times, prep);
  // P(one atom up) is (1 - e)^2 * blockaded + 2 e (1 - e) * single-atom oscillation
  for (std::size_t k = 0; k < times.size(); ++k) {
    const double t = times[k];
    const double s2 = std::pow(std::sin(kPi * std::sqrt(2.0) * 1e6 * t), 2);
    const double s1 = std::pow(std::sin(kPi * 1e6 * t), 2);
    const double expected = 0.81 * s2 + 0.18 * s1;
    const auto row = static_cast<Eigen::Index>(k);
    CHECK(std::abs(r.populations(row, 1) + r.populations(row, 2) - expected) < 1e-6);
  }
  CHECK(r.prep_weight_dropped == doctest::Approx(0.0).scale(1.0));
  CHECK(std::abs(r.populations.rowwise().sum().maxCoeff() - 1.0) < 1e-8);
}

TEST_CASE("random laser phases leave Ising populations unchanged") {
  Eigen::MatrixXd u(3, 3);
  u << 0, 2e6, 0.5e6, 2e6, 0, 1e6, 0.5e6, 1e6, 0;
  auto sys = ising_system(AtomArray::chain(3, 4.0), u, 1.5e6);
  const auto times = linspace(0.0, 3e-6, 31);
  const auto plain = simulate(sys, 0, times, NoiseParams::none());
  sys.drive.phase_mode = PhaseMode::RandomPerShot;
  sys.drive.phase_realizations = 4;
  const auto random = simulate(sys, 0, times, NoiseParams::none(), 7);
  CHECK((plain.populations - random.populations).cwiseAbs().maxCoeff() < 1e-10);
  sys.drive.phase_mode = PhaseMode::Fixed;
  sys.drive.wavevector_per_um = Eigen::Vector3d(0, 0, 8.0);
  const Eigen::MatrixXcd h(sys.hamiltonian());
  CHECK(std::abs(h(1, 0) - std::polar(0.75e6, 0.0)) < 1e-6);
  CHECK(std::abs(h(2, 0) - std::polar(0.75e6, 32.0)) < 1e-6);
}

TEST_CASE("measurement sampling") {
  const auto sys = ising_system(AtomArray::chain(2, 5.0), all_to_all(2, 1.3e6), 1e6);
  const std::vector<double> times{0.3e-6, 0.7e-6};
  NoiseParams noise = NoiseParams::none();
  noise.false_loss = 0.03;
  noise.false_presence = 0.01;
  noise.loss = 0.02;
  const auto r = simulate(sys, 0, times, noise);
  const int shots = 1000000;
  const auto table = sample_measurements(r, shots, noise, 42);
  for (std::size_t t = 0; t < times.size(); ++t) {
    for (std::uint32_t x = 0; x < 4; ++x) {
      const double p = r.detected(static_cast<Eigen::Index>(t), x);
      const double sigma = std::sqrt(p * (1 - p) / shots);
      CHECK(std::abs(table.frequency(t, x) - p) < 3 * sigma + 1e-12);
    }
  }
  const auto again = sample_measurements(r, 1000, noise, 42);
  const auto same = sample_measurements(r, 1000, noise, 42);
  const auto other = sample_measurements(r, 1000, noise, 43);
  CHECK(again.outcomes == same.outcomes);
  CHECK(again.outcomes != other.outcomes);
  CHECK_THROWS_AS(sample_measurements(r, 0, noise, 1), DomainError);
}

TEST_CASE("fit recovers the blockade shift") {
  const double om = 1e6;
  const auto times = linspace(0.0, 5e-6, 151);
  const auto data = two_atom_p_rr(times, 2e6, om, 0.0);
  const auto fit = fit_interaction(times, data, om, 0.0);
  CHECK(fit.identifiable);
  CHECK(fit.u_hz == doctest::Approx(2e6).epsilon(0.02));
  CHECK(fit.ci_hz < 0.1 * fit.u_hz);

  const auto saturated = two_atom_p_rr(times, 1e10, om, 0.0);
  CHECK_FALSE(fit_interaction(times, saturated, om, 0.0).identifiable);

  // 1/R^6 scaling through the fitter
  const double c6 = 1e6 * std::pow(10.0, 6);
  const auto d10 = two_atom_p_rr(times, c6 / std::pow(10.0, 6), om, 0.02e6);
  const auto d88 = two_atom_p_rr(times, c6 / std::pow(8.8, 6), om, 0.02e6);
  const double u10 = fit_interaction(times, d10, om, 0.02e6).u_hz;
  const double u88 = fit_interaction(times, d88, om, 0.02e6).u_hz;
  CHECK(u88 / u10 == doctest::Approx(std::pow(8.8 / 10.0, -6)).epsilon(0.05));
}

TEST_CASE("three-atom Ising suppression pattern") {
  const auto times = linspace(0.0, 4e-6, 401);
  const auto couplings = triangle_couplings();
  const auto slow = simulate_three_atom_ising(0.8e6, couplings, times, NoiseParams::none());
  const auto fast = simulate_three_atom_ising(1.6e6, couplings, times, NoiseParams::none());
  const double p101 = slow.series(0b101).maxCoeff();
  const double p011 = slow.series(0b011).maxCoeff();
  const double p110 = slow.series(0b110).maxCoeff();
  MESSAGE("peaks at 0.8 MHz: P(101) = " << p101 << ", P(011) = " << p011 << ", P(110) = " << p110);
  CHECK(p101 < 0.3 * std::min(p011, p110));
  CHECK(fast.series(0b111).maxCoeff() > slow.series(0b111).maxCoeff());

  // brute-force reference on the 8-level problem
  SpinSystem sys;
  sys.array = triangle_array();
  sys.couplings = couplings;
  sys.drive.rabi_hz = 0.8e6;
  const auto ref = rk4_populations(Eigen::MatrixXcd(sys.hamiltonian()), basis_state(3, 0), times, 2e-10);
  CHECK((slow.populations - ref).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("triangle geometry") {
  const auto a = triangle_array();
  CHECK(a.distance_um(0, 1) == doctest::Approx(12.0));
  CHECK(a.distance_um(1, 2) == doctest::Approx(12.0));
  CHECK(a.theta(0, 2) == doctest::Approx(0.0));
  CHECK(a.theta(0, 1) == doctest::Approx(kPi / 3));
}

namespace {

RadialSolver& solver() {
  static RadialSolver s(SpeciesTable::bundled());
  return s;
}

// Normalized autocorrelation of the mean-removed series at integer lags.
std::vector<double> autocorrelation(const Eigen::VectorXd& x) {
  const Eigen::VectorXd d = x.array() - x.mean();
  const double c0 = d.squaredNorm();
  std::vector<double> out;
  for (Eigen::Index lag = 0; lag < d.size() / 2; ++lag) {
    out.push_back(d.head(d.size() - lag).dot(d.tail(d.size() - lag)) / c0);
  }
  return out;
}

}  // namespace

TEST_CASE("XY chain from exchange couplings") {
  const StateLabel up = parse_state("Rb:62D3/2:3/2"), down = parse_state("Rb:63P1/2:1/2");
  const auto array = AtomArray::chain(3, 20.0);
  const auto c = pair_couplings(solver(), array, CouplingModel::XYExchange, up, down);
  CHECK(c.provenance == CouplingProvenance::PairInteraction);
  CHECK(c.hz(0, 1) / c.hz(0, 2) == doctest::Approx(8.0).epsilon(1e-12));
  CHECK(c.hz(0, 1) == c.hz(1, 2));

  const double j = std::abs(c.hz(0, 1));
  const auto times = linspace(0.0, 20.0 / j, 2001);
  const auto clean = simulate_xy_chain(solver(), up, down, times, NoiseParams::none());
  CHECK((clean.excitation_mean().array() - 1.0).abs().maxCoeff() < 1e-10);
  CHECK(clean.excitation_variance().maxCoeff() < 1e-10);

  // collapse and revival: after the first deep minimum the autocorrelation
  // of P(up down down) rises to a secondary maximum
  const auto ac = autocorrelation(clean.series(0b001));
  std::size_t k = 1;
  while (k + 1 < ac.size() && !(ac[k] < ac[k - 1] && ac[k] <= ac[k + 1])) ++k;
  REQUIRE(k + 1 < ac.size());
  CHECK(ac[k] < 0.0);
  const double later = *std::max_element(ac.begin() + static_cast<std::ptrdiff_t>(k), ac.end());
  CHECK(later > ac[k] + 0.5);

  // default noise: the initial and middle-site peaks drop by the preparation-error fraction
  const NoiseParams noisy;
  const auto dirty = simulate_xy_chain(solver(), up, down, times, noisy);
  CHECK(dirty.populations(0, 0b001) == doctest::Approx(1.0 - noisy.prep_error).epsilon(1e-12));
  const double ratio = dirty.series(0b010).maxCoeff() / clean.series(0b010).maxCoeff();
  CHECK(std::abs(ratio - (1.0 - noisy.prep_error)) < 0.02);
}

TEST_CASE("two-atom exchange frequency scales as 1/R^3") {
  const StateLabel up = parse_state("Rb:62D3/2:3/2"), down = parse_state("Rb:63P1/2:1/2");
  std::vector<double> rs, fs;
  for (double r : {15.0, 20.0, 30.0, 40.0, 50.0}) {
    const auto array = AtomArray::chain(2, r);
    SpinSystem sys;
    sys.array = array;
    sys.couplings = pair_couplings(solver(), array, CouplingModel::XYExchange, up, down);
    const double j = std::abs(sys.couplings.hz(0, 1));
    const auto times = linspace(0.0, 3.0 / j, 1201);
    const auto res = simulate(sys, 0b01, times, NoiseParams::none());
    // P(up down) = cos^2(2 pi J t) oscillates at 2 J
    const auto fit = fit_rabi(res.series(0b01), times[1], 1.5 * j, 2.5 * j);
    rs.push_back(r);
    fs.push_back(fit.frequency_hz);
  }
  CHECK(loglog_slope(rs, fs) == doctest::Approx(-3.0).epsilon(0.05 / 3.0));
}

TEST_CASE("triangle couplings from the pair module are within a factor 2 of the injected ones") {
  const auto c = pair_couplings(solver(), triangle_array(), CouplingModel::IsingVdW, parse_state("Rb:82D3/2"));
  const auto injected = triangle_couplings();
  for (auto [i, j] : {std::pair{0, 1}, std::pair{1, 2}, std::pair{0, 2}}) {
    const double ratio = std::abs(c.hz(i, j)) / injected.hz(i, j);
    INFO("pair " << i << j << ": " << c.hz(i, j) << " Hz");
    CHECK(ratio > 0.5);
    CHECK(ratio < 2.0);
  }
  // the side along z is the strongest
  CHECK(std::abs(c.hz(0, 2)) > 1.5 * std::abs(c.hz(0, 1)));
}
