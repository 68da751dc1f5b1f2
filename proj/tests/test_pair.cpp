#include <bit>
#include <cmath>
#include <numbers>
#include <vector>

#include "doctest.h"
#include "fit.hpp"
#include "rydberg/errors.hpp"
#include "rydberg/pair.hpp"

using namespace rydberg;

namespace {

const SpeciesTable& table() { return SpeciesTable::bundled(); }

RadialSolver& solver() {
  static RadialSolver s(table());
  return s;
}

PairState doubled(const char* spec) { return PairState(parse_state(spec), parse_state(spec)); }

PairBasisOptions small_basis(bool conserve_m) {
  PairBasisOptions o;
  o.window_hz = 5e9;
  o.delta_n = 2;
  o.conserve_m = conserve_m;
  return o;
}

}  // namespace

TEST_CASE("zero window keeps exactly the degenerate manifold") {
  PairBasisOptions o;
  o.window_hz = 0.0;
  const auto basis = build_pair_basis(table(), doubled("Rb:62D3/2"), o);
  CHECK(basis.size() == 16);
  for (const auto& p : basis.states) {
    CHECK(LevelKey(p.first) == LevelKey(parse_state("Rb:62D3/2")));
    CHECK(LevelKey(p.second) == LevelKey(parse_state("Rb:62D3/2")));
  }
  o.conserve_m = true;
  CHECK(build_pair_basis(table(), doubled("Rb:62D3/2"), o).size() == 1);
}

TEST_CASE("Forster partner appears inside a 25 GHz window") {
  PairBasisOptions o;
  o.window_hz = 25e9;
  o.conserve_m = true;
  const auto basis = build_pair_basis(table(), doubled("Rb:59D3/2"), o);
  bool found = false;
  for (const auto& p : basis.states) {
    found = found || (LevelKey(p.first) == LevelKey(parse_state("Rb:61P1/2")) &&
                      LevelKey(p.second) == LevelKey(parse_state("Rb:57F5/2")));
  }
  CHECK(found);
}

TEST_CASE("basis size grows with the window and respects the cap") {
  std::size_t prev = 0;
  for (double w : {2e9, 8e9, 20e9}) {
    PairBasisOptions o;
    o.window_hz = w;
    o.conserve_m = true;
    const auto b = build_pair_basis(table(), doubled("Rb:50S1/2"), o);
    CHECK(b.size() >= prev);
    prev = b.size();
    for (std::size_t i = 1; i < b.size(); ++i) CHECK(b.detunings_hz[i - 1] <= b.detunings_hz[i]);
  }
  PairBasisOptions capped;
  capped.hard_cap = 10;
  CHECK_THROWS_AS(build_pair_basis(table(), doubled("Rb:50S1/2"), capped), DomainError);
}

TEST_CASE("V_dd scales exactly as 1/R^3 and is symmetric") {
  const auto basis = build_pair_basis(table(), doubled("Rb:40D5/2"), small_basis(false));
  GeometryConfig g;
  g.r_um = 7.3;
  g.theta = 0.4;
  const Eigen::MatrixXd v1 = assemble_vdd(solver(), basis, g);
  g.r_um *= 2.0;
  const Eigen::MatrixXd v2 = assemble_vdd(solver(), basis, g);
  bool exact = true;
  for (Eigen::Index i = 0; i < v1.rows(); ++i) {
    for (Eigen::Index k = 0; k < v1.cols(); ++k) {
      exact = exact && std::bit_cast<std::uint64_t>(v1(i, k) / 8.0) == std::bit_cast<std::uint64_t>(v2(i, k));
    }
  }
  CHECK(exact);
  CHECK((v1 - v1.transpose()).cwiseAbs().maxCoeff() == 0.0);
  CHECK(v1.cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("theta = 0 conserves total m_j") {
  const auto basis = build_pair_basis(table(), doubled("Rb:40D3/2"), small_basis(false));
  GeometryConfig g;
  g.r_um = 5.0;
  const Eigen::MatrixXd v = assemble_vdd(solver(), basis, g);
  double leak = 0.0;
  for (Eigen::Index i = 0; i < v.rows(); ++i) {
    for (Eigen::Index k = 0; k < v.cols(); ++k) {
      if (basis.states[static_cast<std::size_t>(i)].total_two_m() != basis.states[static_cast<std::size_t>(k)].total_two_m()) {
        leak = std::max(leak, std::abs(v(i, k)));
      }
    }
  }
  CHECK(leak == 0.0);
  g.theta = 0.3;
  const auto m_basis = build_pair_basis(table(), doubled("Rb:40D3/2"), small_basis(true));
  CHECK_THROWS_AS(assemble_vdd(solver(), m_basis, g), DomainError);
}

TEST_CASE("Forster coupling element matches C3 / R^3") {
  const StateLabel d = parse_state("Rb:59D3/2");
  const auto channels = forster_search(solver(), d, 50e6);
  REQUIRE_FALSE(channels.empty());
  const PairState pf = channels.front().channel;
  PairBasisOptions o;
  o.window_hz = 25e9;
  o.conserve_m = true;
  const auto basis = build_pair_basis(table(), PairState(d, d), o);
  const auto ip = basis.index_of(pf);
  REQUIRE(ip.has_value());
  GeometryConfig g;
  g.r_um = 9.1;
  const Eigen::MatrixXd v = assemble_vdd(solver(), basis, g);
  const double element = v(static_cast<Eigen::Index>(*ip), static_cast<Eigen::Index>(*basis.index_of(basis.target)));
  const double c3 = c3_coefficient(solver(), PairState(d, d), pf, 0.0) * 1e9;
  CHECK(std::abs(element / (c3 / std::pow(9.1, 3)) - 1.0) < 0.2);
}

TEST_CASE("far apart the spectrum is the bare pair energies") {
  const auto basis = build_pair_basis(table(), doubled("Rb:45S1/2"), small_basis(true));
  GeometryConfig g;
  g.r_um = 1e5;
  const auto spec = diagonalize(solver(), basis, g);
  std::vector<double> bare = basis.detunings_hz;
  std::sort(bare.begin(), bare.end());
  for (std::size_t i = 0; i < bare.size(); ++i) {
    CHECK(spec.eigenvalues(static_cast<Eigen::Index>(i)) == doctest::Approx(bare[i]).epsilon(1e-9).scale(1.0));
  }
  CHECK(spec.overlaps.sum() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(spec.overlaps(spec.target_branch()) == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("spectrum symmetric under theta -> -theta and pi - theta") {
  const auto basis = build_pair_basis(table(), doubled("Rb:40P3/2"), small_basis(false));
  GeometryConfig g;
  g.r_um = 4.0;
  g.theta = 0.7;
  const auto a = diagonalize(solver(), basis, g);
  g.theta = -0.7;
  const auto b = diagonalize(solver(), basis, g);
  g.theta = std::numbers::pi - 0.7;
  const auto c = diagonalize(solver(), basis, g);
  const double scale = a.eigenvalues.cwiseAbs().maxCoeff();
  CHECK((a.eigenvalues - b.eigenvalues).cwiseAbs().maxCoeff() < 1e-9 * scale);
  CHECK((a.eigenvalues - c.eigenvalues).cwiseAbs().maxCoeff() < 1e-9 * scale);
  CHECK(a.overlaps.sum() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(a.weights.sum() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("laser weights follow the requested pair component") {
  const auto basis = build_pair_basis(table(), doubled("Rb:40D3/2"), small_basis(false));
  GeometryConfig g;
  g.r_um = 6.0;
  const PairState other(parse_state("Rb:40D3/2:1/2"), parse_state("Rb:40D3/2:1/2"));
  LaserCoupling laser;
  laser.amplitudes = {{other, 1.0}};
  const auto s = diagonalize(solver(), basis, g, laser);
  const auto io = static_cast<Eigen::Index>(*basis.index_of(other));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(pair_hamiltonian(solver(), basis, g));
  CHECK((s.weights - eig.eigenvectors().row(io).transpose().cwiseAbs2()).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("C6 of 80S and its truncation convergence") {
  const double c6 = c6_perturbative(solver(), parse_state("Rb:80S1/2"), 0.0);
  CHECK(c6 > 0.0);
  CHECK(std::abs(c6 / 4000.0 - 1.0) < 0.3);
  C6Options wide;
  wide.window_hz = 45e9;
  CHECK(std::abs(c6_perturbative(solver(), parse_state("Rb:80S1/2"), 0.0, wide) / c6 - 1.0) < 0.05);
  const double c6_62d = c6_perturbative(solver(), parse_state("Rb:62D3/2"), 0.0);
  CHECK(std::abs(c6_perturbative(solver(), parse_state("Rb:62D3/2"), 0.0, wide) / c6_62d - 1.0) < 0.05);
}

TEST_CASE("near-resonant denominators are refused") {
  C6Options o;
  o.resonance_guard_hz = 10e6;  // the 61P1/2 + 57F5/2 channel sits 8.55 MHz away
  try {
    c6_perturbative(solver(), parse_state("Rb:59D3/2"), 0.0, o);
    FAIL("expected NearResonanceError");
  } catch (const NearResonanceError& e) {
    CHECK(std::abs(e.defect_hz()) < 10e6);
    CHECK(e.channel().find("57F5/2") != std::string::npos);
  }
}

TEST_CASE("D-state manifold anisotropy and block structure") {
  const auto m0 = c6_effective_manifold(solver(), parse_state("Rb:82D3/2"), 0.0);
  const auto m90 = c6_effective_manifold(solver(), parse_state("Rb:82D3/2"), std::numbers::pi / 2);
  const double ratio = m0.effective_ghz_um6 / m90.effective_ghz_um6;
  CHECK(ratio > 2.0);
  CHECK(ratio < 4.0);
  // manifold eigenvalues are rotation invariant
  for (std::size_t k = 0; k < m0.eigenvalues_ghz_um6.size(); ++k) {
    CHECK(m0.eigenvalues_ghz_um6[k] == doctest::Approx(m90.eigenvalues_ghz_um6[k]).epsilon(1e-9));
  }
  // at theta = 0 the operator only connects equal m1 + m2
  double leak = 0.0;
  for (std::size_t i = 0; i < m0.manifold.size(); ++i) {
    for (std::size_t k = 0; k < m0.manifold.size(); ++k) {
      if (m0.manifold[i].first + m0.manifold[i].second != m0.manifold[k].first + m0.manifold[k].second) {
        leak = std::max(leak, std::abs(m0.operator_ghz_um6(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k))));
      }
    }
  }
  CHECK(leak == 0.0);
  double wsum = 0.0;
  for (double w : m0.laser_weights) wsum += w;
  CHECK(wsum == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("perturbative C6 agrees with the diagonalized branch for 62D3/2") {
  const StateLabel d = parse_state("Rb:62D3/2");
  const double c6 = c6_perturbative(solver(), d, 0.0);
  PairBasisOptions o;
  o.window_hz = 10e9;
  o.conserve_m = true;
  const auto basis = build_pair_basis(table(), PairState(d, d), o);
  std::vector<double> rs, es;
  for (double r : {12.0, 14.0, 16.0, 18.0, 20.0}) {
    GeometryConfig g;
    g.r_um = r;
    const auto s = diagonalize(solver(), basis, g);
    rs.push_back(r);
    es.push_back(s.eigenvalues(s.target_branch()));
  }
  // least-squares C6 in E = C6 / R^6
  double num = 0, den = 0;
  for (std::size_t i = 0; i < rs.size(); ++i) {
    const double x = std::pow(rs[i], -6.0);
    num += x * es[i];
    den += x * x;
  }
  const double fitted = num / den * 1e-9;
  CHECK(std::abs(fitted / c6 - 1.0) < 0.10);
  const double slope = loglog_slope(rs, es);
  CHECK(slope > -6.3);
  CHECK(slope < -5.7);
}

TEST_CASE("exchange channel 62D3/2 <-> 63P1/2") {
  const PairState dp(parse_state("Rb:62D3/2:3/2"), parse_state("Rb:63P1/2:1/2"));
  const PairState pd(dp.second, dp.first);
  const double c3 = c3_coefficient(solver(), dp, pd, 0.0);
  const double j_hz = std::abs(c3) * 1e9 / std::pow(30.0, 3);
  CHECK(j_hz > 100e3);
  CHECK(j_hz < 400e3);

  // Oracle: integrate the two-state Schroedinger equation with RK4 and time
  // the first full transfer |dp> -> |pd>, expected at t = 1 / (4 J).
  const double w = 2.0 * std::numbers::pi * j_hz;
  double re_a = 1, im_a = 0, re_b = 0, im_b = 0;
  const double dt = 1e-9;
  double t = 0, prev = 0;
  auto deriv = [w](double ra, double ia, double rb, double ib, double* out) {
    // i d/dt (a, b) = w (b, a)
    out[0] = w * ib;
    out[1] = -w * rb;
    out[2] = w * ia;
    out[3] = -w * ra;
  };
  while (true) {
    double k1[4], k2[4], k3[4], k4[4];
    deriv(re_a, im_a, re_b, im_b, k1);
    deriv(re_a + 0.5 * dt * k1[0], im_a + 0.5 * dt * k1[1], re_b + 0.5 * dt * k1[2], im_b + 0.5 * dt * k1[3], k2);
    deriv(re_a + 0.5 * dt * k2[0], im_a + 0.5 * dt * k2[1], re_b + 0.5 * dt * k2[2], im_b + 0.5 * dt * k2[3], k3);
    deriv(re_a + dt * k3[0], im_a + dt * k3[1], re_b + dt * k3[2], im_b + dt * k3[3], k4);
    re_a += dt / 6 * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0]);
    im_a += dt / 6 * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1]);
    re_b += dt / 6 * (k1[2] + 2 * k2[2] + 2 * k3[2] + k4[2]);
    im_b += dt / 6 * (k1[3] + 2 * k2[3] + 2 * k3[3] + k4[3]);
    t += dt;
    const double pb = re_b * re_b + im_b * im_b;
    if (pb < prev) break;
    prev = pb;
  }
  CHECK(t == doctest::Approx(1.0 / (4.0 * j_hz)).epsilon(1e-3));
}

TEST_CASE("magic angle cancels the 1 - 3cos^2 channel") {
  const PairState sp(parse_state("Rb:60S1/2:1/2"), parse_state("Rb:60P1/2:1/2"));
  const PairState ps(sp.second, sp.first);
  const double magic = std::acos(1.0 / std::sqrt(3.0));
  CHECK(std::abs(c3_coefficient(solver(), sp, ps, magic)) < 1e-12 * std::abs(c3_coefficient(solver(), sp, ps, 0.0)));
  CHECK(c3_coefficient(solver(), sp, PairState(sp.first, parse_state("Rb:60P1/2:1/2")), 0.0) == 0.0);
}

TEST_CASE("Forster search") {
  const auto channels = forster_search(solver(), parse_state("Rb:59D3/2"), 2e9);
  REQUIRE(channels.size() > 1);
  for (std::size_t i = 0; i < channels.size(); ++i) {
    CHECK(channels[i].c3_ghz_um3 != 0.0);
    CHECK(channels[i].c3_ghz_um3 ==
          doctest::Approx(c3_coefficient(solver(), doubled("Rb:59D3/2"), channels[i].channel, 0.0)));
    if (i > 0) CHECK(std::abs(channels[i - 1].defect_hz) <= std::abs(channels[i].defect_hz));
  }
  CHECK(forster_search(solver(), parse_state("Rb:70S1/2"), 0.0).empty());
}

TEST_CASE("crossover radius") {
  CHECK(crossover_radius(1e9, 1e9).r_um == doctest::Approx(1.0));
  CHECK(crossover_radius(1e9, -1e9).r_um == doctest::Approx(1.0));
  const auto resonant = crossover_radius(1e9, 0.0);
  CHECK(resonant.resonant);
  CHECK(std::isinf(resonant.r_um));
}

TEST_CASE("vdW to resonant slope change happens near R_c") {
  const StateLabel d = parse_state("Rb:59D3/2");
  const auto channel = forster_search(solver(), d, 50e6).at(0);
  const double rc = crossover_radius(channel).r_um;
  const auto basis = build_pair_basis(table(), PairState(d, d), small_basis(true));
  double prev_e = 0, prev_r = 0, r_mid = 0;
  for (double r = 20.0; r > 2.0; r /= 1.1) {
    GeometryConfig g;
    g.r_um = r;
    const auto s = diagonalize(solver(), basis, g);
    const double e = s.eigenvalues(s.target_branch());
    if (prev_r > 0) {
      const double slope = std::log(std::abs(e / prev_e)) / std::log(r / prev_r);
      if (slope > -4.5 && r_mid == 0.0) r_mid = std::sqrt(r * prev_r);
    }
    prev_e = e;
    prev_r = r;
  }
  REQUIRE(r_mid > 0.0);
  CHECK(r_mid > rc / 2.0);
  CHECK(r_mid < rc * 2.0);
}

TEST_CASE("Stark-tuned resonance") {
  const StateLabel d = parse_state("Rb:59D3/2");
  const auto channel = forster_search(solver(), d, 50e6).at(0);
  ResonanceOptions o;
  o.field_max_v_cm = 0.2;
  o.scan_points = 5;
  o.tolerance_v_cm = 1e-5;
  o.stark_delta_n = 1;
  const auto res = stark_tune_resonance(solver(), d, channel.channel, 9.1, o);
  REQUIRE(res.found);
  CHECK(res.field_v_cm < 1.0);
  CHECK(std::abs(res.weight_lower - 0.5) < 0.02);
  CHECK(std::abs(res.weight_upper - 0.5) < 0.02);
  CHECK(std::abs(res.defect_at_field_hz) < 0.05 * res.gap_hz);

  ResonanceOptions none = o;
  none.field_max_v_cm = 0.01;
  CHECK_FALSE(stark_tune_resonance(solver(), d, channel.channel, 9.1, none).found);
}

TEST_CASE("Cs 64P3/2: laser-weighted branch follows the vdW curve") {
  const StateLabel p = parse_state("Cs:64P3/2");
  const double c6 = c6_perturbative(solver(), p, 0.0);
  PairBasisOptions o;
  o.conserve_m = true;
  const auto basis = build_pair_basis(table(), PairState(p, p), o);
  int crowded_near = 0, crowded_far = 0;
  for (double r : {10.0, 6.0, 4.0, 3.0}) {
    GeometryConfig g;
    g.r_um = r;
    const auto s = diagonalize(solver(), basis, g);
    Eigen::Index best = 0;
    s.weights.maxCoeff(&best);
    const double e = s.eigenvalues(best);
    const double pert = c6 * 1e9 / std::pow(r, 6);
    INFO("R = " << r << ": " << e << " vs " << pert);
    CHECK(std::abs(e / pert - 1.0) < 0.2);
    int within = 0;
    for (Eigen::Index k = 0; k < s.weights.size(); ++k) within += s.weights(k) > 1e-4;
    if (r == 10.0) crowded_far = within;
    if (r == 3.0) crowded_near = within;
  }
  // at short range the laser weight spreads over many molecular lines
  MESSAGE("weighted lines: " << crowded_far << " -> " << crowded_near);
  CHECK(crowded_near > crowded_far);
}
