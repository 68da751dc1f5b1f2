#include "rydberg/stark.hpp"

#include <algorithm>
#include <cmath>
#include <tuple>

#include "rydberg/dipole.hpp"
#include "rydberg/errors.hpp"
#include "rydberg/units.hpp"

namespace rydberg {

void SingleAtomFieldConfig::validate() const {
  if (!(electric_v_cm >= 0.0) || !(magnetic_gauss >= 0.0)) {
    throw DomainError("field magnitudes must be non-negative (direction is fixed to +z)");
  }
}

std::vector<StateLabel> stark_basis(const SpeciesTable& table, const StateLabel& target, int delta_n, int l_max) {
  table.validate(target);
  if (delta_n < 0) throw DomainError("delta_n must be non-negative");
  const SpeciesData& data = table.at(target.species);
  std::vector<std::pair<double, StateLabel>> levels;
  for (int n = std::max(1, target.n - delta_n); n <= target.n + delta_n; ++n) {
    for (int l = 0; l < n && (l_max < 0 || l <= l_max); ++l) {
      if (l <= 3 && n < data.min_n[static_cast<std::size_t>(l)]) continue;
      for (int two_j : {2 * l - 1, 2 * l + 1}) {
        if (two_j < 1 || std::abs(target.two_mj) > two_j) continue;
        const StateLabel s = StateLabel::from_twice(target.species, n, l, two_j, target.two_mj);
        levels.emplace_back(table.energy(s), s);
      }
    }
  }
  std::sort(levels.begin(), levels.end(), [](const auto& a, const auto& b) {
    return std::tie(a.first, a.second.l, a.second.two_j, a.second.two_mj) <
           std::tie(b.first, b.second.l, b.second.two_j, b.second.two_mj);
  });
  std::vector<StateLabel> out;
  out.reserve(levels.size());
  for (auto& entry : levels) out.push_back(entry.second);
  return out;
}

Eigen::MatrixXd stark_hamiltonian(const RadialSolver& solver, const std::vector<StateLabel>& basis,
                                  const SingleAtomFieldConfig& fields) {
  if (basis.empty()) throw DomainError("stark_hamiltonian: empty basis");
  fields.validate();
  const auto dim = static_cast<Eigen::Index>(basis.size());
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(dim, dim);
  const double field_hz = fields.electric_v_cm * units::kDipoleFieldHzPerVcm;
  for (Eigen::Index i = 0; i < dim; ++i) {
    const StateLabel& a = basis[static_cast<std::size_t>(i)];
    h(i, i) = solver.table().energy(a) + zeeman_shift(a, fields.magnetic_gauss);
    if (field_hz == 0.0) continue;
    for (Eigen::Index k = i + 1; k < dim; ++k) {
      const StateLabel& b = basis[static_cast<std::size_t>(k)];
      if (std::abs(a.l - b.l) != 1 || a.two_mj != b.two_mj) continue;
      const double v = -field_hz * dipole_matrix_element(solver, a, b, 0);
      h(i, k) = v;
      h(k, i) = v;
    }
  }
  return h;
}

StarkShift stark_shift(const RadialSolver& solver, const StateLabel& target, const SingleAtomFieldConfig& fields,
                       int delta_n, int l_max) {
  const auto basis = stark_basis(solver.table(), target, delta_n, l_max);
  const auto it = std::find(basis.begin(), basis.end(), target);
  if (it == basis.end()) throw DomainError("target is outside its own Stark basis (raise l_max)");
  const auto t = static_cast<Eigen::Index>(it - basis.begin());

  const double e0 = solver.table().energy(target);
  Eigen::MatrixXd h = stark_hamiltonian(solver, basis, fields);
  h.diagonal().array() -= e0;  // keep eigenvalues small for precision
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(h);
  if (eig.info() != Eigen::Success) throw SolverError("Stark eigensolver did not converge");
  Eigen::Index best = 0;
  eig.eigenvectors().row(t).cwiseAbs2().maxCoeff(&best);
  StarkShift out;
  out.shift_hz = eig.eigenvalues()(best);
  out.overlap = eig.eigenvectors()(t, best) * eig.eigenvectors()(t, best);
  out.basis_size = basis.size();
  return out;
}

namespace {

double second_order_sum(const RadialSolver& solver, const StateLabel& s, int delta_n) {
  const SpeciesTable& table = solver.table();
  const SpeciesData& data = table.at(s.species);
  const double e0 = table.energy(s);
  const double f = units::kDipoleFieldHzPerVcm;
  double sum = 0.0;
  for (int lp : {s.l - 1, s.l + 1}) {
    if (lp < 0) continue;
    for (int two_jp : {2 * lp - 1, 2 * lp + 1}) {
      if (two_jp < 1 || std::abs(two_jp - s.two_j) > 2 || std::abs(s.two_mj) > two_jp) continue;
      const int n_lo = std::max({s.n - delta_n, lp + 1, lp <= 3 ? data.min_n[static_cast<std::size_t>(lp)] : 1});
      for (int np = n_lo; np <= s.n + delta_n; ++np) {
        const StateLabel b = StateLabel::from_twice(s.species, np, lp, two_jp, s.two_mj);
        const double d = dipole_matrix_element(solver, b, s, 0) * f;
        sum += d * d / (e0 - table.energy(b));
      }
    }
  }
  return sum;  // shift per (V/cm)^2, in Hz
}

}  // namespace

Polarizability polarizability(const RadialSolver& solver, const StateLabel& state, int delta_n) {
  if (delta_n < 1) throw DomainError("polarizability window must be at least 1");
  Polarizability p;
  p.delta_n = delta_n;
  p.alpha_ghz = -2.0 * second_order_sum(solver, state, delta_n) * 1e-9;
  p.alpha_wide_ghz = -2.0 * second_order_sum(solver, state, delta_n + 5) * 1e-9;
  p.relative_change = std::abs(p.alpha_wide_ghz - p.alpha_ghz) / std::abs(p.alpha_wide_ghz);
  p.converged = p.relative_change < 0.01;
  return p;
}

}  // namespace rydberg
