#include "rydberg/pair.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <sstream>
#include <tuple>

#include "rydberg/dipole.hpp"
#include "rydberg/errors.hpp"
#include "rydberg/units.hpp"

namespace rydberg {

namespace {

constexpr double kSqrtHalf = 0.70710678118654752440;

// d1.d2 - 3 (d1.n)(d2.n) from spherical components indexed q + 1.
double vdd_from_components(const std::array<double, 3>& d1, const std::array<double, 3>& d2, double c, double s) {
  const double dot = -d1[2] * d2[0] - d1[0] * d2[2] + d1[1] * d2[1];
  const double n1 = c * d1[1] + s * kSqrtHalf * (d1[0] - d1[2]);
  const double n2 = c * d2[1] + s * kSqrtHalf * (d2[0] - d2[2]);
  return dot - 3.0 * n1 * n2;
}

std::vector<int> j_values(int l) {
  if (l == 0) return {1};
  return {2 * l - 1, 2 * l + 1};
}

bool level_exists(const SpeciesData& data, int n, int l) {
  if (l < 0 || l >= n) return false;
  return l > 3 || n >= data.min_n[static_cast<std::size_t>(l)];
}

// Levels (m_j = j placeholder) near `center` within the n/l windows.
std::vector<StateLabel> nearby_levels(const SpeciesTable& table, const StateLabel& center, int delta_n, int delta_l) {
  const SpeciesData& data = table.at(center.species);
  std::vector<StateLabel> out;
  for (int n = std::max(1, center.n - delta_n); n <= center.n + delta_n; ++n) {
    for (int l = std::max(0, center.l - delta_l); l <= center.l + delta_l; ++l) {
      if (!level_exists(data, n, l)) continue;
      for (int tj : j_values(l)) out.push_back(StateLabel::from_twice(center.species, n, l, tj, tj));
    }
  }
  return out;
}

// Dipole-coupled partner levels of `s` (l +- 1, |dj| <= 1).
std::vector<StateLabel> dipole_partners(const SpeciesTable& table, const StateLabel& s, int delta_n) {
  const SpeciesData& data = table.at(s.species);
  std::vector<StateLabel> out;
  for (int n = std::max(1, s.n - delta_n); n <= s.n + delta_n; ++n) {
    for (int l : {s.l - 1, s.l + 1}) {
      if (!level_exists(data, n, l)) continue;
      for (int tj : j_values(l)) {
        if (std::abs(tj - s.two_j) <= 2) out.push_back(StateLabel::from_twice(s.species, n, l, tj, tj));
      }
    }
  }
  return out;
}

// Single-atom dipole tables over the distinct single states of a basis.
struct DipoleTables {
  std::map<StateLabel, Eigen::Index> index;
  std::array<Eigen::MatrixXd, 3> d;  // d[q + 1](a, b) = <a|d_q|b> in e*a0

  DipoleTables(const RadialSolver& solver, const PairBasis& basis) {
    for (const auto& p : basis.states) {
      index.emplace(p.first, 0);
      index.emplace(p.second, 0);
    }
    Eigen::Index k = 0;
    std::vector<StateLabel> singles;
    for (auto& [s, i] : index) {
      i = k++;
      singles.push_back(s);
    }
    for (auto& m : d) m = Eigen::MatrixXd::Zero(k, k);
    for (Eigen::Index a = 0; a < k; ++a) {
      for (Eigen::Index b = 0; b < k; ++b) {
        const StateLabel& sa = singles[static_cast<std::size_t>(a)];
        const StateLabel& sb = singles[static_cast<std::size_t>(b)];
        if (std::abs(sa.l - sb.l) != 1) continue;
        const int q = (sa.two_mj - sb.two_mj) / 2;
        if (std::abs(q) > 1) continue;
        d[static_cast<std::size_t>(q + 1)](a, b) = dipole_matrix_element(solver, sa, sb, q);
      }
    }
  }

  std::array<double, 3> components(Eigen::Index a, Eigen::Index b) const {
    return {d[0](a, b), d[1](a, b), d[2](a, b)};
  }
};

}  // namespace

// ---------------------------------------------------------------------------

PairState::PairState(StateLabel a, StateLabel b) : first(a), second(b) {
  if (a.species != b.species) throw DomainError("pair states must share a species");
}

double PairState::energy(const SpeciesTable& table) const { return table.energy(first) + table.energy(second); }

std::string PairState::to_string() const { return "|" + first.to_string() + ", " + second.to_string() + ">"; }

std::optional<std::size_t> PairBasis::index_of(const PairState& p) const {
  const auto it = std::find(states.begin(), states.end(), p);
  if (it == states.end()) return std::nullopt;
  return static_cast<std::size_t>(it - states.begin());
}

PairBasis build_pair_basis(const SpeciesTable& table, const PairState& target, const PairBasisOptions& options) {
  if (!(options.window_hz >= 0.0)) throw DomainError("pair basis window must be non-negative");
  if (options.delta_n < 0 || options.delta_l < 0) throw DomainError("pair basis n/l windows must be non-negative");
  table.validate(target.first);
  table.validate(target.second);

  const double e_target = target.energy(table);
  const auto levels1 = nearby_levels(table, target.first, options.delta_n, options.delta_l);
  const auto levels2 = nearby_levels(table, target.second, options.delta_n, options.delta_l);
  std::vector<double> e2(levels2.size());
  for (std::size_t i = 0; i < levels2.size(); ++i) e2[i] = table.energy(levels2[i]);

  struct Entry {
    double detuning;
    PairState pair;
  };
  std::vector<Entry> entries;
  const int total_m = target.total_two_m();
  for (const auto& a : levels1) {
    const double ea = table.energy(a);
    for (std::size_t ib = 0; ib < levels2.size(); ++ib) {
      const double det = ea + e2[ib] - e_target;
      if (std::abs(det) > options.window_hz) continue;
      const auto& b = levels2[ib];
      for (int ma = -a.two_j; ma <= a.two_j; ma += 2) {
        for (int mb = -b.two_j; mb <= b.two_j; mb += 2) {
          if (options.conserve_m && ma + mb != total_m) continue;
          entries.push_back({det, PairState(a.with_mj(ma), b.with_mj(mb))});
          if (entries.size() > options.hard_cap) {
            throw DomainError("pair basis exceeds the hard cap of " + std::to_string(options.hard_cap) +
                              " states; narrow the window or raise the cap");
          }
        }
      }
    }
  }
  std::sort(entries.begin(), entries.end(),
            [](const Entry& x, const Entry& y) { return std::tie(x.detuning, x.pair) < std::tie(y.detuning, y.pair); });

  PairBasis basis;
  basis.target = target;
  basis.options = options;
  basis.states.reserve(entries.size());
  basis.detunings_hz.reserve(entries.size());
  for (auto& e : entries) {
    basis.states.push_back(e.pair);
    basis.detunings_hz.push_back(e.detuning);
  }
  if (!basis.index_of(target)) throw DomainError("target pair state missing from its own basis");
  return basis;
}

void GeometryConfig::validate() const {
  if (!(r_um > 0.1)) throw DomainError("interatomic distance must exceed 0.1 um (multipole expansion breaks down)");
  if (!std::isfinite(theta)) throw DomainError("axis angle must be finite");
  fields.validate();
}

double vdd_element(const RadialSolver& solver, const StateLabel& a1, const StateLabel& a2, const StateLabel& b1,
                   const StateLabel& b2, double theta) {
  std::array<double, 3> d1{}, d2{};
  for (int q = -1; q <= 1; ++q) {
    d1[static_cast<std::size_t>(q + 1)] = dipole_matrix_element(solver, a1, b1, q);
    d2[static_cast<std::size_t>(q + 1)] = dipole_matrix_element(solver, a2, b2, q);
  }
  return vdd_from_components(d1, d2, std::cos(theta), std::sin(theta)) * units::kDipoleDipoleHzUm3;
}

namespace {

Eigen::MatrixXd vdd_matrix(const DipoleTables& tables, const PairBasis& basis, const GeometryConfig& g) {
  if (basis.options.conserve_m && std::abs(std::sin(g.theta)) > 1e-12) {
    throw DomainError("an m-conserving pair basis is only valid for theta = 0 or pi");
  }
  const auto dim = static_cast<Eigen::Index>(basis.size());
  std::vector<Eigen::Index> i1(basis.size()), i2(basis.size());
  for (std::size_t i = 0; i < basis.size(); ++i) {
    i1[i] = tables.index.at(basis.states[i].first);
    i2[i] = tables.index.at(basis.states[i].second);
  }
  const double c = std::cos(g.theta);
  const double s = std::sin(g.theta);
  const double scale = units::kDipoleDipoleHzUm3 / (g.r_um * g.r_um * g.r_um);
  Eigen::MatrixXd v = Eigen::MatrixXd::Zero(dim, dim);
  for (Eigen::Index i = 0; i < dim; ++i) {
    const auto& pi = basis.states[static_cast<std::size_t>(i)];
    for (Eigen::Index k = i; k < dim; ++k) {
      const auto& pk = basis.states[static_cast<std::size_t>(k)];
      if (std::abs(pi.first.l - pk.first.l) != 1 || std::abs(pi.second.l - pk.second.l) != 1) continue;
      const auto d1 = tables.components(i1[static_cast<std::size_t>(i)], i1[static_cast<std::size_t>(k)]);
      const auto d2 = tables.components(i2[static_cast<std::size_t>(i)], i2[static_cast<std::size_t>(k)]);
      const double val = vdd_from_components(d1, d2, c, s) * scale;
      v(i, k) = val;
      v(k, i) = val;
    }
  }
  return v;
}

}  // namespace

Eigen::MatrixXd assemble_vdd(const RadialSolver& solver, const PairBasis& basis, const GeometryConfig& geometry) {
  geometry.validate();
  const DipoleTables tables(solver, basis);
  return vdd_matrix(tables, basis, geometry);
}

Eigen::MatrixXd pair_hamiltonian(const RadialSolver& solver, const PairBasis& basis, const GeometryConfig& geometry) {
  geometry.validate();
  const DipoleTables tables(solver, basis);
  Eigen::MatrixXd h = vdd_matrix(tables, basis, geometry);
  const auto dim = static_cast<Eigen::Index>(basis.size());
  const double field_hz = geometry.fields.electric_v_cm * units::kDipoleFieldHzPerVcm;
  const double b = geometry.fields.magnetic_gauss;
  const auto& target = basis.target;
  const double zeeman_target = zeeman_shift(target.first, b) + zeeman_shift(target.second, b);
  for (Eigen::Index i = 0; i < dim; ++i) {
    const auto& p = basis.states[static_cast<std::size_t>(i)];
    h(i, i) += basis.detunings_hz[static_cast<std::size_t>(i)] + zeeman_shift(p.first, b) +
               zeeman_shift(p.second, b) - zeeman_target;
  }
  if (field_hz != 0.0) {
    for (Eigen::Index i = 0; i < dim; ++i) {
      const auto& pi = basis.states[static_cast<std::size_t>(i)];
      for (Eigen::Index k = i + 1; k < dim; ++k) {
        const auto& pk = basis.states[static_cast<std::size_t>(k)];
        double v = 0.0;
        if (pi.second == pk.second) {
          v += tables.d[1](tables.index.at(pi.first), tables.index.at(pk.first));
        }
        if (pi.first == pk.first) {
          v += tables.d[1](tables.index.at(pi.second), tables.index.at(pk.second));
        }
        if (v == 0.0) continue;
        h(i, k) -= field_hz * v;
        h(k, i) -= field_hz * v;
      }
    }
  }
  return h;
}

Eigen::Index InteractionSpectrum::target_branch() const {
  Eigen::Index best = 0;
  overlaps.maxCoeff(&best);
  return best;
}

InteractionSpectrum diagonalize(const RadialSolver& solver, const PairBasis& basis, const GeometryConfig& geometry,
                                const LaserCoupling& laser) {
  const Eigen::MatrixXd h = pair_hamiltonian(solver, basis, geometry);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(h);
  if (eig.info() != Eigen::Success) {
    std::ostringstream msg;
    msg << "pair eigensolver failed (dimension " << h.rows() << ", max |H| " << h.cwiseAbs().maxCoeff() << " Hz)";
    throw SolverError(msg.str());
  }
  const auto t = static_cast<Eigen::Index>(*basis.index_of(basis.target));

  Eigen::VectorXd drive = Eigen::VectorXd::Zero(h.rows());
  if (laser.amplitudes.empty()) {
    drive(t) = 1.0;
  } else {
    for (const auto& [state, amp] : laser.amplitudes) {
      const auto idx = basis.index_of(state);
      if (!idx) throw DomainError("laser-coupled state " + state.to_string() + " is not in the pair basis");
      drive(static_cast<Eigen::Index>(*idx)) += amp;
    }
    const double norm = drive.norm();
    if (norm == 0.0) throw DomainError("laser coupling vector is zero");
    drive /= norm;
  }

  InteractionSpectrum out;
  out.geometry = geometry;
  out.eigenvalues = eig.eigenvalues();
  out.overlaps = eig.eigenvectors().row(t).transpose().cwiseAbs2();
  out.weights = (eig.eigenvectors().transpose() * drive).cwiseAbs2();
  return out;
}

// ---------------------------------------------------------------------------

C6Manifold c6_effective_manifold(const RadialSolver& solver, const StateLabel& state, double theta,
                                 const C6Options& options) {
  const SpeciesTable& table = solver.table();
  table.validate(state);
  const double e_aa = 2.0 * table.energy(state);
  const double c = std::cos(theta), s = std::sin(theta);

  C6Manifold out;
  for (int m1 = -state.two_j; m1 <= state.two_j; m1 += 2) {
    for (int m2 = -state.two_j; m2 <= state.two_j; m2 += 2) out.manifold.emplace_back(m1, m2);
  }
  const auto dim = static_cast<Eigen::Index>(out.manifold.size());
  Eigen::MatrixXd heff = Eigen::MatrixXd::Zero(dim, dim);

  const auto partners = dipole_partners(table, state, options.delta_n);
  for (const auto& beta : partners) {
    const double eb = table.energy(beta);
    for (const auto& gamma : partners) {
      const double denom = e_aa - (eb + table.energy(gamma));
      if (std::abs(denom) > options.window_hz) continue;
      ++out.intermediate_pairs;
      const double radial = solver.matrix_element(state, beta) * solver.matrix_element(state, gamma);
      for (int mb = -beta.two_j; mb <= beta.two_j; mb += 2) {
        for (int mg = -gamma.two_j; mg <= gamma.two_j; mg += 2) {
          const StateLabel b = beta.with_mj(mb), g = gamma.with_mj(mg);
          Eigen::VectorXd col(dim);
          for (Eigen::Index i = 0; i < dim; ++i) {
            const auto [m1, m2] = out.manifold[static_cast<std::size_t>(i)];
            std::array<double, 3> d1{}, d2{};
            for (int q = -1; q <= 1; ++q) {
              d1[static_cast<std::size_t>(q + 1)] = angular_factor(state.with_mj(m1), b, q);
              d2[static_cast<std::size_t>(q + 1)] = angular_factor(state.with_mj(m2), g, q);
            }
            col(i) = vdd_from_components(d1, d2, c, s) * radial * units::kDipoleDipoleHzUm3;
          }
          if (col.cwiseAbs().maxCoeff() == 0.0) continue;
          if (std::abs(denom) < options.resonance_guard_hz) {
            throw NearResonanceError("perturbative C6 for " + state.to_string(false) + " hits the channel " +
                                         PairState(b, g).to_string() + " within the resonance guard; use the "
                                         "two-channel (Forster) treatment",
                                     PairState(beta, gamma).to_string(), denom);
          }
          heff.noalias() += col * col.transpose() / denom;
        }
      }
    }
  }
  heff *= 1e-9;  // Hz*um^6 -> GHz*um^6
  out.operator_ghz_um6 = heff;

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(heff);
  if (eig.info() != Eigen::Success) throw SolverError("manifold eigensolver failed");
  const auto laser_it = std::find(out.manifold.begin(), out.manifold.end(), std::pair{state.two_mj, state.two_mj});
  const auto li = static_cast<Eigen::Index>(laser_it - out.manifold.begin());
  for (Eigen::Index k = 0; k < dim; ++k) {
    out.eigenvalues_ghz_um6.push_back(eig.eigenvalues()(k));
    out.laser_weights.push_back(eig.eigenvectors()(li, k) * eig.eigenvectors()(li, k));
  }
  out.effective_ghz_um6 = 0.0;
  for (Eigen::Index k = 0; k < dim; ++k) {
    out.effective_ghz_um6 += out.laser_weights[static_cast<std::size_t>(k)] * eig.eigenvalues()(k);
  }
  return out;
}

double c6_perturbative(const RadialSolver& solver, const StateLabel& state, double theta, const C6Options& options) {
  return c6_effective_manifold(solver, state, theta, options).effective_ghz_um6;
}

double c3_coefficient(const RadialSolver& solver, const PairState& from, const PairState& to, double theta) {
  return vdd_element(solver, to.first, to.second, from.first, from.second, theta) * 1e-9;
}

// ---------------------------------------------------------------------------

std::vector<ForsterChannel> forster_search(const RadialSolver& solver, const StateLabel& state, double window_hz,
                                           int delta_n) {
  if (!(window_hz >= 0.0)) throw DomainError("Forster search window must be non-negative");
  const SpeciesTable& table = solver.table();
  const double e_aa = 2.0 * table.energy(state);
  const auto partners = dipole_partners(table, state, delta_n);
  std::vector<ForsterChannel> out;
  for (std::size_t i = 0; i < partners.size(); ++i) {
    for (std::size_t k = i; k < partners.size(); ++k) {
      const StateLabel& beta = partners[i];
      const StateLabel& gamma = partners[k];
      const double defect = table.energy(beta) + table.energy(gamma) - e_aa;
      if (std::abs(defect) > window_hz) continue;
      ForsterChannel best;
      best.defect_hz = defect;
      for (int mb = -beta.two_j; mb <= beta.two_j; mb += 2) {
        for (int mg = -gamma.two_j; mg <= gamma.two_j; mg += 2) {
          const PairState to(beta.with_mj(mb), gamma.with_mj(mg));
          const double c3 = c3_coefficient(solver, PairState(state, state), to, 0.0);
          if (std::abs(c3) > std::abs(best.c3_ghz_um3)) {
            best.c3_ghz_um3 = c3;
            best.channel = to;
          }
        }
      }
      if (best.c3_ghz_um3 != 0.0) out.push_back(best);
    }
  }
  std::stable_sort(out.begin(), out.end(), [](const ForsterChannel& a, const ForsterChannel& b) {
    return std::abs(a.defect_hz) < std::abs(b.defect_hz);
  });
  return out;
}

double channel_defect(const RadialSolver& solver, const StateLabel& state, const PairState& channel, double e_v_cm,
                      int stark_delta_n) {
  const SpeciesTable& table = solver.table();
  double defect = channel.energy(table) - 2.0 * table.energy(state);
  if (e_v_cm == 0.0) return defect;
  SingleAtomFieldConfig f;
  f.electric_v_cm = e_v_cm;
  defect += stark_shift(solver, channel.first, f, stark_delta_n).shift_hz;
  defect += stark_shift(solver, channel.second, f, stark_delta_n).shift_hz;
  defect -= 2.0 * stark_shift(solver, state, f, stark_delta_n).shift_hz;
  return defect;
}

ForsterResonance stark_tune_resonance(const RadialSolver& solver, const StateLabel& state, const PairState& channel,
                                      double r_um, const ResonanceOptions& options) {
  if (!(r_um > 0.1)) throw DomainError("interatomic distance must exceed 0.1 um");
  if (options.scan_points < 2 || !(options.field_max_v_cm > options.field_min_v_cm) || options.field_min_v_cm < 0.0) {
    throw DomainError("invalid field scan range");
  }
  auto defect = [&](double e) { return channel_defect(solver, state, channel, e, options.stark_delta_n); };

  ForsterResonance out;
  out.defect_zero_field_hz = defect(0.0);
  const double c3 = vdd_element(solver, channel.first, channel.second, state, state, 0.0);
  const bool distinct = !(channel.first == channel.second);
  out.coupling_hz = c3 / (r_um * r_um * r_um) * (distinct ? std::sqrt(2.0) : 1.0);
  out.gap_hz = 2.0 * std::abs(out.coupling_hz);

  double lo = options.field_min_v_cm;
  double f_lo = defect(lo);
  const double step = (options.field_max_v_cm - options.field_min_v_cm) / (options.scan_points - 1);
  for (int i = 1; i < options.scan_points; ++i) {
    const double hi = options.field_min_v_cm + i * step;
    const double f_hi = defect(hi);
    if (f_lo == 0.0 || (f_lo < 0.0) != (f_hi < 0.0)) {
      double a = lo, b = hi, fa = f_lo;
      while (b - a > options.tolerance_v_cm) {
        const double mid = 0.5 * (a + b);
        const double fm = defect(mid);
        if ((fm < 0.0) == (fa < 0.0) && fm != 0.0) {
          a = mid;
          fa = fm;
        } else {
          b = mid;
        }
      }
      out.found = true;
      out.field_v_cm = 0.5 * (a + b);
      out.defect_at_field_hz = defect(out.field_v_cm);
      // Two-level model {|aa>, channel} at the crossing.
      Eigen::Matrix2d h;
      h << 0.0, out.coupling_hz, out.coupling_hz, out.defect_at_field_hz;
      Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> eig(h);
      out.weight_lower = eig.eigenvectors()(0, 0) * eig.eigenvectors()(0, 0);
      out.weight_upper = eig.eigenvectors()(0, 1) * eig.eigenvectors()(0, 1);
      out.gap_hz = eig.eigenvalues()(1) - eig.eigenvalues()(0);
      return out;
    }
    lo = hi;
    f_lo = f_hi;
  }
  return out;
}

CrossoverRadius crossover_radius(double c3_hz_um3, double defect_hz) {
  CrossoverRadius out;
  if (defect_hz == 0.0) {
    out.resonant = true;
    return out;
  }
  out.r_um = std::cbrt(std::abs(c3_hz_um3) / std::abs(defect_hz));
  return out;
}

CrossoverRadius crossover_radius(const ForsterChannel& channel) {
  return crossover_radius(channel.c3_ghz_um3 * 1e9, channel.defect_hz);
}

}  // namespace rydberg
