#include "rydberg/dynamics.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <map>
#include <numbers>
#include <random>
#include <sstream>

#include <unsupported/Eigen/KroneckerProduct>
#include <unsupported/Eigen/MatrixFunctions>

#include "rydberg/errors.hpp"
#include "rydberg/pair.hpp"

namespace rydberg {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr int kDenseLimit = 512;
constexpr int kLindbladMaxAtoms = 5;

std::uint32_t full_mask(int n) { return n >= 32 ? ~0u : ((1u << n) - 1u); }

void check_size(int n) {
  if (n < 1 || n > kMaxAtoms) {
    throw DomainError("atom number " + std::to_string(n) + " outside [1, " + std::to_string(kMaxAtoms) + "]");
  }
}

// Uniform double in [0, 1) from the top 53 bits, identical on every platform.
double uniform(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

bool is_probability(double p) { return p >= 0.0 && p <= 1.0; }

void check_times(const std::vector<double>& times) {
  if (times.empty()) throw DomainError("empty time grid");
  double prev = 0.0;
  for (double t : times) {
    if (!std::isfinite(t) || t < prev) throw DomainError("time grid must be finite, nonnegative and ascending");
    prev = t;
  }
}

int atoms_for_dimension(Eigen::Index dim) {
  const auto d = static_cast<std::uint64_t>(dim);
  if (d == 0 || !std::has_single_bit(d)) throw DomainError("Hamiltonian dimension is not a power of two");
  return std::countr_zero(d);
}

double max_row_sum(const SparseHamiltonian& h) {
  Eigen::VectorXd rows = Eigen::VectorXd::Zero(h.rows());
  for (int k = 0; k < h.outerSize(); ++k) {
    for (SparseHamiltonian::InnerIterator it(h, k); it; ++it) rows(it.row()) += std::abs(it.value());
  }
  return rows.maxCoeff();
}

// psi <- exp(-2 pi i H dt) psi by a Taylor series on substeps with
// 2 pi |H| h <= 0.5; terms are summed until they drop below 1e-16.
void taylor_propagate(const SparseHamiltonian& h, Eigen::VectorXcd& psi, double dt) {
  if (dt == 0.0) return;
  const double norm = kTwoPi * max_row_sum(h);
  const int steps = std::max(1, static_cast<int>(std::ceil(norm * dt / 0.5)));
  const double step = dt / steps;
  const Complex factor(0.0, -kTwoPi * step);
  for (int s = 0; s < steps; ++s) {
    Eigen::VectorXcd term = psi;
    Eigen::VectorXcd sum = psi;
    bool converged = false;
    for (int m = 1; m <= 60; ++m) {
      term = (h * term) * (factor / static_cast<double>(m));
      sum += term;
      if (term.norm() < 1e-16 * sum.norm()) {
        converged = true;
        break;
      }
    }
    if (!converged) {
      std::ostringstream os;
      os << "Taylor propagation did not converge: |H| = " << norm / kTwoPi << " Hz, step " << step << " s";
      throw SolverError(os.str());
    }
    psi = sum;
  }
}

Eigen::MatrixXcd lowering(int n, int atom) {
  const int dim = 1 << n;
  Eigen::MatrixXcd op = Eigen::MatrixXcd::Zero(dim, dim);
  for (int x = 0; x < dim; ++x) {
    if (x & (1 << atom)) op(x ^ (1 << atom), x) = 1.0;
  }
  return op;
}

Eigen::MatrixXcd number(int n, int atom) {
  const int dim = 1 << n;
  Eigen::MatrixXcd op = Eigen::MatrixXcd::Zero(dim, dim);
  for (int x = 0; x < dim; ++x) {
    if (x & (1 << atom)) op(x, x) = 1.0;
  }
  return op;
}

// Column-stacked Liouvillian: vec(A rho B) = (B^T kron A) vec(rho).
Eigen::MatrixXcd liouvillian(const Eigen::MatrixXcd& h, int n, const NoiseParams& noise) {
  const Eigen::Index dim = h.rows();
  const Eigen::MatrixXcd id = Eigen::MatrixXcd::Identity(dim, dim);
  const Complex mi(0.0, -kTwoPi);
  Eigen::MatrixXcd l = mi * (Eigen::kroneckerProduct(id, h) - Eigen::kroneckerProduct(h.transpose(), id)).eval();
  auto add_jump = [&](const Eigen::MatrixXcd& c) {
    const Eigen::MatrixXcd cdc = c.adjoint() * c;
    l += Eigen::kroneckerProduct(c.conjugate(), c).eval();
    l -= 0.5 * Eigen::kroneckerProduct(id, cdc).eval();
    l -= 0.5 * Eigen::kroneckerProduct(cdc.transpose(), id).eval();
  };
  for (int i = 0; i < n; ++i) {
    if (noise.damping_hz > 0.0) add_jump(std::sqrt(kTwoPi * noise.damping_hz) * lowering(n, i));
    // L = sqrt(kappa) n_i damps |r><g| coherences at kappa / 2.
    if (noise.dephasing_hz > 0.0) add_jump(std::sqrt(2.0 * kTwoPi * noise.dephasing_hz) * number(n, i));
  }
  return l;
}

double clamp_probability(double p) { return std::clamp(p, 0.0, 1.0); }

}  // namespace

double AtomArray::distance_um(int i, int j) const {
  return (positions_um.at(static_cast<std::size_t>(i)) - positions_um.at(static_cast<std::size_t>(j))).norm();
}

double AtomArray::theta(int i, int j) const {
  const Eigen::Vector3d d = positions_um.at(static_cast<std::size_t>(j)) - positions_um.at(static_cast<std::size_t>(i));
  return std::acos(std::clamp(d.z() / d.norm(), -1.0, 1.0));
}

void AtomArray::validate() const {
  check_size(size());
  for (int i = 0; i < size(); ++i) {
    if (!positions_um[static_cast<std::size_t>(i)].allFinite()) throw DomainError("non-finite atom position");
    for (int j = i + 1; j < size(); ++j) {
      if (distance_um(i, j) <= 0.1) {
        std::ostringstream os;
        os << "atoms " << i << " and " << j << " are " << distance_um(i, j) << " um apart (minimum 0.1 um)";
        throw DomainError(os.str());
      }
    }
  }
}

AtomArray AtomArray::chain(int n, double spacing_um, const Eigen::Vector3d& direction) {
  AtomArray a;
  const Eigen::Vector3d u = direction.normalized();
  for (int i = 0; i < n; ++i) a.positions_um.push_back(u * (spacing_um * i));
  a.validate();
  return a;
}

void DriveParams::validate() const {
  if (!std::isfinite(rabi_hz) || rabi_hz < 0.0) throw DomainError("Rabi frequency must be finite and >= 0");
  if (!std::isfinite(detuning_hz)) throw DomainError("detuning must be finite");
  if (!std::isfinite(duration_s) || duration_s < 0.0) throw DomainError("pulse duration must be >= 0");
  if (!wavevector_per_um.allFinite()) throw DomainError("wavevector must be finite");
  if (phase_realizations < 1) throw DomainError("phase_realizations must be >= 1");
}

void CouplingMatrix::validate() const {
  if (hz.rows() != hz.cols()) throw DomainError("coupling matrix is not square");
  check_size(size());
  if (!hz.allFinite()) throw DomainError("coupling matrix has non-finite entries");
  for (int i = 0; i < size(); ++i) {
    if (hz(i, i) != 0.0) throw DomainError("coupling matrix diagonal must be zero");
    for (int j = i + 1; j < size(); ++j) {
      if (hz(i, j) != hz(j, i)) throw DomainError("coupling matrix is not symmetric");
    }
  }
}

CouplingMatrix CouplingMatrix::analytic(const AtomArray& array, CouplingModel model,
                                        const std::function<double(double)>& coefficient) {
  array.validate();
  const int n = array.size();
  const double power = model == CouplingModel::IsingVdW ? 6.0 : 3.0;
  CouplingMatrix c;
  c.model = model;
  c.provenance = CouplingProvenance::Analytic;
  c.hz = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      c.hz(i, j) = c.hz(j, i) = coefficient(array.theta(i, j)) / std::pow(array.distance_um(i, j), power);
    }
  }
  return c;
}

CouplingMatrix CouplingMatrix::imported(CouplingModel model, Eigen::MatrixXd hz) {
  CouplingMatrix c;
  c.model = model;
  c.provenance = CouplingProvenance::Imported;
  c.hz = std::move(hz);
  c.validate();
  return c;
}

CouplingMatrix pair_couplings(const RadialSolver& solver, const AtomArray& array, CouplingModel model,
                              const StateLabel& state, const std::optional<StateLabel>& partner) {
  std::function<double(double)> coefficient;
  if (model == CouplingModel::IsingVdW) {
    coefficient = [&](double theta) { return c6_perturbative(solver, state, theta) * 1e9; };
  } else {
    if (!partner) throw DomainError("exchange couplings need a partner state");
    const PairState from(state, *partner), to(*partner, state);
    coefficient = [&, from, to](double theta) { return c3_coefficient(solver, from, to, theta) * 1e9; };
  }
  CouplingMatrix c = CouplingMatrix::analytic(array, model, coefficient);
  c.provenance = CouplingProvenance::PairInteraction;
  return c;
}

void NoiseParams::validate() const {
  if (!(damping_hz >= 0.0) || !(dephasing_hz >= 0.0) || !std::isfinite(damping_hz) || !std::isfinite(dephasing_hz)) {
    throw DomainError("damping and dephasing rates must be finite and >= 0");
  }
  for (double p : {prep_error, loss, false_loss, false_presence}) {
    if (!is_probability(p)) throw DomainError("noise probabilities must lie in [0, 1]");
  }
}

NoiseParams NoiseParams::none() {
  NoiseParams n;
  n.prep_error = n.loss = n.false_loss = n.false_presence = 0.0;
  return n;
}

NoiseParams NoiseParams::from_two_photon(const TwoPhotonDrive& drive, NoiseParams base) {
  base.damping_hz = scattering_rate(drive);
  return base;
}

SparseHamiltonian build_ising_hamiltonian(const AtomArray& array, const DriveParams& drive,
                                          const CouplingMatrix& couplings, IsingForm form, std::uint32_t present_mask,
                                          const std::vector<double>* phases) {
  array.validate();
  drive.validate();
  couplings.validate();
  if (couplings.model != CouplingModel::IsingVdW) throw DomainError("Ising Hamiltonian needs Ising couplings");
  const int n = array.size();
  if (couplings.size() != n) throw DomainError("coupling matrix size differs from the atom number");
  if (phases && static_cast<int>(phases->size()) != n) throw DomainError("one laser phase per atom expected");
  const std::uint32_t mask = present_mask & full_mask(n);
  const int dim = 1 << n;

  std::vector<Complex> drive_term(static_cast<std::size_t>(n), Complex(drive.rabi_hz / 2.0, 0.0));
  for (int i = 0; i < n; ++i) {
    double phi = 0.0;
    if (phases) {
      phi = (*phases)[static_cast<std::size_t>(i)];
    } else if (drive.phase_mode == PhaseMode::Fixed) {
      phi = drive.wavevector_per_um.dot(array.positions_um[static_cast<std::size_t>(i)]);
    }
    drive_term[static_cast<std::size_t>(i)] *= std::polar(1.0, phi);
  }
  std::vector<double> b(static_cast<std::size_t>(n), 0.0);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (j != i && (mask >> i & 1u) && (mask >> j & 1u)) b[static_cast<std::size_t>(i)] += couplings.hz(i, j);
    }
  }

  std::vector<Eigen::Triplet<Complex>> triplets;
  triplets.reserve(static_cast<std::size_t>(dim) * static_cast<std::size_t>(n + 1));
  for (int x = 0; x < dim; ++x) {
    double diag = 0.0;
    for (int i = 0; i < n; ++i) {
      if (!(mask >> i & 1u)) continue;
      const bool up = x >> i & 1;
      const double s = up ? 1.0 : -1.0;
      if (form == IsingForm::Projector) {
        if (up) diag -= drive.detuning_hz;
      } else {
        diag += (b[static_cast<std::size_t>(i)] / 4.0 - drive.detuning_hz / 2.0) * s;
      }
      for (int j = i + 1; j < n; ++j) {
        if (!(mask >> j & 1u)) continue;
        const bool upj = x >> j & 1;
        if (form == IsingForm::Projector) {
          if (up && upj) diag += couplings.hz(i, j);
        } else {
          diag += couplings.hz(i, j) / 4.0 * s * (upj ? 1.0 : -1.0);
        }
      }
      if (!up && drive.rabi_hz != 0.0) {
        const int y = x | (1 << i);
        triplets.emplace_back(y, x, drive_term[static_cast<std::size_t>(i)]);
        triplets.emplace_back(x, y, std::conj(drive_term[static_cast<std::size_t>(i)]));
      }
    }
    if (diag != 0.0) triplets.emplace_back(x, x, diag);
  }
  SparseHamiltonian h(dim, dim);
  h.setFromTriplets(triplets.begin(), triplets.end());
  return h;
}

SparseHamiltonian build_xy_hamiltonian(const AtomArray& array, const CouplingMatrix& couplings,
                                       std::uint32_t present_mask) {
  array.validate();
  couplings.validate();
  if (couplings.model != CouplingModel::XYExchange) throw DomainError("XY Hamiltonian needs exchange couplings");
  const int n = array.size();
  if (couplings.size() != n) throw DomainError("coupling matrix size differs from the atom number");
  const std::uint32_t mask = present_mask & full_mask(n);
  const int dim = 1 << n;
  std::vector<Eigen::Triplet<Complex>> triplets;
  for (int x = 0; x < dim; ++x) {
    for (int i = 0; i < n; ++i) {
      for (int j = i + 1; j < n; ++j) {
        if (!(mask >> i & 1u) || !(mask >> j & 1u)) continue;
        if (((x >> i) & 1) == ((x >> j) & 1) || couplings.hz(i, j) == 0.0) continue;
        triplets.emplace_back(x ^ (1 << i) ^ (1 << j), x, couplings.hz(i, j));
      }
    }
  }
  SparseHamiltonian h(dim, dim);
  h.setFromTriplets(triplets.begin(), triplets.end());
  return h;
}

Eigen::VectorXcd basis_state(int n_atoms, std::uint32_t bits) {
  check_size(n_atoms);
  if (bits > full_mask(n_atoms)) throw DomainError("configuration has bits beyond the atom number");
  Eigen::VectorXcd psi = Eigen::VectorXcd::Zero(Eigen::Index{1} << n_atoms);
  psi(bits) = 1.0;
  return psi;
}

Eigen::VectorXd EvolutionResult::series(std::uint32_t bits, bool use_detected) const {
  const Eigen::MatrixXd& m = use_detected ? detected : populations;
  return m.col(static_cast<Eigen::Index>(bits));
}

Eigen::VectorXd EvolutionResult::excitation_mean() const {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(populations.rows());
  for (Eigen::Index x = 0; x < populations.cols(); ++x) {
    out += populations.col(x) * static_cast<double>(std::popcount(static_cast<std::uint64_t>(x)));
  }
  return out;
}

Eigen::VectorXd EvolutionResult::excitation_variance() const {
  Eigen::VectorXd mean = excitation_mean();
  Eigen::VectorXd out = Eigen::VectorXd::Zero(populations.rows());
  for (Eigen::Index x = 0; x < populations.cols(); ++x) {
    const double k = static_cast<double>(std::popcount(static_cast<std::uint64_t>(x)));
    out += populations.col(x).cwiseProduct((Eigen::VectorXd::Constant(mean.size(), k) - mean).cwiseAbs2());
  }
  return out;
}

Eigen::VectorXd apply_detection(const Eigen::VectorXd& populations, int n_atoms, const NoiseParams& noise) {
  noise.validate();
  const double up_given_down = noise.loss + (1.0 - noise.loss) * noise.false_loss;
  const double down_given_up = (1.0 - noise.loss) * noise.false_presence;
  Eigen::VectorXd p = populations;
  for (int i = 0; i < n_atoms; ++i) {
    const Eigen::Index bit = Eigen::Index{1} << i;
    for (Eigen::Index x = 0; x < p.size(); ++x) {
      if (x & bit) continue;
      const double p0 = p(x), p1 = p(x | bit);
      p(x) = (1.0 - up_given_down) * p0 + down_given_up * p1;
      p(x | bit) = up_given_down * p0 + (1.0 - down_given_up) * p1;
    }
  }
  return p;
}

EvolutionResult evolve(const SparseHamiltonian& hamiltonian, const Eigen::VectorXcd& initial,
                       const std::vector<double>& times_s, const NoiseParams& noise, bool keep_states) {
  noise.validate();
  check_times(times_s);
  const int n = atoms_for_dimension(hamiltonian.rows());
  check_size(n);
  if (hamiltonian.cols() != hamiltonian.rows() || initial.size() != hamiltonian.rows()) {
    throw DomainError("initial state dimension differs from the Hamiltonian");
  }
  if (std::abs(initial.squaredNorm() - 1.0) > 1e-10) {
    std::ostringstream os;
    os << "initial state is not normalized (|psi|^2 = " << initial.squaredNorm() << ")";
    throw DomainError(os.str());
  }
  const Eigen::Index dim = hamiltonian.rows();
  const auto nt = static_cast<Eigen::Index>(times_s.size());

  EvolutionResult out;
  out.n_atoms = n;
  out.times_s = times_s;
  out.populations.resize(nt, dim);

  if (noise.coherent()) {
    if (dim <= kDenseLimit) {
      const Eigen::MatrixXcd h = Eigen::MatrixXcd(hamiltonian);
      const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(h);
      if (eig.info() != Eigen::Success) throw SolverError("Hamiltonian diagonalization failed");
      const Eigen::VectorXcd c0 = eig.eigenvectors().adjoint() * initial;
      for (Eigen::Index k = 0; k < nt; ++k) {
        const double t = times_s[static_cast<std::size_t>(k)];
        Eigen::VectorXcd ct(dim);
        for (Eigen::Index m = 0; m < dim; ++m) ct(m) = c0(m) * std::polar(1.0, -kTwoPi * eig.eigenvalues()(m) * t);
        const Eigen::VectorXcd psi = eig.eigenvectors() * ct;
        out.populations.row(k) = psi.cwiseAbs2().transpose();
        if (keep_states) out.states.push_back(psi);
      }
    } else {
      Eigen::VectorXcd psi = initial;
      double t = 0.0;
      for (Eigen::Index k = 0; k < nt; ++k) {
        taylor_propagate(hamiltonian, psi, times_s[static_cast<std::size_t>(k)] - t);
        t = times_s[static_cast<std::size_t>(k)];
        out.populations.row(k) = psi.cwiseAbs2().transpose();
        if (keep_states) out.states.push_back(psi);
      }
    }
  } else {
    if (n > kLindbladMaxAtoms) {
      throw DomainError("damping and dephasing are supported for N <= " + std::to_string(kLindbladMaxAtoms));
    }
    const Eigen::MatrixXcd l = liouvillian(Eigen::MatrixXcd(hamiltonian), n, noise);
    Eigen::VectorXcd rho = (initial * initial.adjoint()).reshaped();
    std::map<double, Eigen::MatrixXcd> propagators;
    double t = 0.0;
    for (Eigen::Index k = 0; k < nt; ++k) {
      const double dt = times_s[static_cast<std::size_t>(k)] - t;
      if (dt > 0.0) {
        auto it = propagators.find(dt);
        if (it == propagators.end()) it = propagators.emplace(dt, (l * dt).exp()).first;
        rho = it->second * rho;
      }
      t = times_s[static_cast<std::size_t>(k)];
      for (Eigen::Index x = 0; x < dim; ++x) out.populations(k, x) = rho(x * dim + x).real();
    }
  }

  out.detected.resize(nt, dim);
  for (Eigen::Index k = 0; k < nt; ++k) {
    const double total = out.populations.row(k).sum();
    out.norm_deviation = std::max(out.norm_deviation, std::abs(total - 1.0));
    out.detected.row(k) = apply_detection(out.populations.row(k).transpose(), n, noise).transpose();
  }
  if (!(out.norm_deviation < 1e-6)) {
    std::ostringstream os;
    os << "propagation lost normalization: max |trace - 1| = " << out.norm_deviation;
    throw SolverError(os.str());
  }
  return out;
}

SparseHamiltonian SpinSystem::hamiltonian(std::uint32_t present_mask, const std::vector<double>* phases) const {
  if (couplings.model == CouplingModel::XYExchange) return build_xy_hamiltonian(array, couplings, present_mask);
  return build_ising_hamiltonian(array, drive, couplings, IsingForm::Projector, present_mask, phases);
}

EvolutionResult simulate(const SpinSystem& system, std::uint32_t initial_bits, const std::vector<double>& times_s,
                         const NoiseParams& noise, std::uint64_t seed) {
  noise.validate();
  const int n = system.array.size();
  check_size(n);
  const std::uint32_t all = full_mask(n);
  if (initial_bits > all) throw DomainError("initial configuration has bits beyond the atom number");

  NoiseParams dynamic = noise;
  dynamic.prep_error = dynamic.loss = dynamic.false_loss = dynamic.false_presence = 0.0;

  const bool random_phases =
      system.couplings.model == CouplingModel::IsingVdW && system.drive.phase_mode == PhaseMode::RandomPerShot;
  const int realizations = random_phases ? system.drive.phase_realizations : 1;
  std::mt19937_64 rng(seed);
  std::vector<std::vector<double>> phase_draws;
  for (int r = 0; r < realizations && random_phases; ++r) {
    std::vector<double> phi(static_cast<std::size_t>(n));
    for (double& p : phi) p = kTwoPi * uniform(rng);
    phase_draws.push_back(std::move(phi));
  }

  EvolutionResult out;
  out.n_atoms = n;
  out.times_s = times_s;
  out.populations = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(times_s.size()), Eigen::Index{1} << n);
  const int max_failed = n <= kLindbladMaxAtoms ? n : 2;
  double kept = 0.0;
  for (std::uint32_t failed = 0; failed <= all; ++failed) {
    const int k = std::popcount(failed);
    if (k > max_failed) continue;
    const double w = std::pow(noise.prep_error, k) * std::pow(1.0 - noise.prep_error, n - k);
    if (w == 0.0) continue;
    kept += w;
    const std::uint32_t present = all & ~failed;
    const Eigen::VectorXcd psi0 = basis_state(n, initial_bits & present);
    for (int r = 0; r < realizations; ++r) {
      const SparseHamiltonian h = system.hamiltonian(present, random_phases ? &phase_draws[static_cast<std::size_t>(r)] : nullptr);
      const EvolutionResult part = evolve(h, psi0, times_s, dynamic);
      out.populations += (w / realizations) * part.populations;
      out.norm_deviation = std::max(out.norm_deviation, part.norm_deviation);
    }
  }
  out.populations /= kept;
  out.prep_weight_dropped = 1.0 - kept;
  out.detected.resize(out.populations.rows(), out.populations.cols());
  for (Eigen::Index t = 0; t < out.populations.rows(); ++t) {
    out.detected.row(t) = apply_detection(out.populations.row(t).transpose(), n, noise).transpose();
  }
  return out;
}

double ShotTable::frequency(std::size_t t, std::uint32_t bits) const {
  const auto& row = outcomes.at(t);
  return static_cast<double>(std::count(row.begin(), row.end(), bits)) / static_cast<double>(row.size());
}

ShotTable sample_measurements(const EvolutionResult& result, int shots, const NoiseParams& noise, std::uint64_t seed) {
  if (shots <= 0) throw DomainError("number of shots must be positive");
  noise.validate();
  const double up_given_down = noise.loss + (1.0 - noise.loss) * noise.false_loss;
  const double down_given_up = (1.0 - noise.loss) * noise.false_presence;
  std::mt19937_64 rng(seed);
  ShotTable table;
  table.n_atoms = result.n_atoms;
  table.times_s = result.times_s;
  const Eigen::Index dim = result.populations.cols();
  std::vector<double> cdf(static_cast<std::size_t>(dim));
  for (Eigen::Index t = 0; t < result.populations.rows(); ++t) {
    double acc = 0.0;
    for (Eigen::Index x = 0; x < dim; ++x) {
      acc += clamp_probability(result.populations(t, x));
      cdf[static_cast<std::size_t>(x)] = acc;
    }
    std::vector<std::uint32_t> row(static_cast<std::size_t>(shots));
    for (auto& outcome : row) {
      const double u = uniform(rng) * acc;
      auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
      std::uint32_t x = static_cast<std::uint32_t>(std::min<std::ptrdiff_t>(it - cdf.begin(), dim - 1));
      for (int i = 0; i < result.n_atoms; ++i) {
        const std::uint32_t bit = 1u << i;
        const double flip = (x & bit) ? down_given_up : up_given_down;
        if (uniform(rng) < flip) x ^= bit;
      }
      outcome = x;
    }
    table.outcomes.push_back(std::move(row));
  }
  return table;
}

std::vector<double> two_atom_p_rr(const std::vector<double>& times_s, double u_hz, double rabi_hz, double damping_hz) {
  SpinSystem sys;
  sys.array = AtomArray::chain(2, 1.0);
  Eigen::MatrixXd u(2, 2);
  u << 0.0, u_hz, u_hz, 0.0;
  sys.couplings = CouplingMatrix::imported(CouplingModel::IsingVdW, u);
  sys.drive.rabi_hz = rabi_hz;
  NoiseParams noise = NoiseParams::none();
  noise.damping_hz = damping_hz;
  const EvolutionResult r = evolve(sys.hamiltonian(), basis_state(2, 0), times_s, noise);
  const Eigen::VectorXd p = r.series(0b11);
  return {p.data(), p.data() + p.size()};
}

InteractionFit fit_interaction(const std::vector<double>& times_s, const std::vector<double>& p_rr, double rabi_hz,
                               double damping_hz, const FitOptions& options) {
  if (times_s.size() != p_rr.size() || times_s.size() < 3) throw DomainError("fit needs >= 3 matching samples");
  if (!(rabi_hz > 0.0)) throw DomainError("fit needs a positive Rabi frequency");
  const double lo = options.u_min_hz > 0.0 ? options.u_min_hz : rabi_hz / 100.0;
  const double hi = options.u_max_hz > 0.0 ? options.u_max_hz : rabi_hz * 1e3;
  if (!(hi > lo) || options.grid_points < 3) throw DomainError("invalid fit range");

  auto ssr = [&](double u) {
    const auto model = two_atom_p_rr(times_s, u, rabi_hz, damping_hz);
    double s = 0.0;
    for (std::size_t i = 0; i < model.size(); ++i) s += (model[i] - p_rr[i]) * (model[i] - p_rr[i]);
    return s;
  };

  const double llo = std::log(lo), lhi = std::log(hi);
  const double dl = (lhi - llo) / (options.grid_points - 1);
  int best = 0;
  double best_s = std::numeric_limits<double>::infinity();
  for (int k = 0; k < options.grid_points; ++k) {
    const double s = ssr(std::exp(llo + dl * k));
    if (s < best_s) {
      best_s = s;
      best = k;
    }
  }
  // golden-section refinement between the grid neighbours, in log U
  const double g = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = llo + dl * std::max(0, best - 1), b = llo + dl * std::min(options.grid_points - 1, best + 1);
  double c = b - g * (b - a), d = a + g * (b - a);
  double sc = ssr(std::exp(c)), sd = ssr(std::exp(d));
  for (int it = 0; it < 60; ++it) {
    if (sc < sd) {
      b = d;
      d = c;
      sd = sc;
      c = b - g * (b - a);
      sc = ssr(std::exp(c));
    } else {
      a = c;
      c = d;
      sc = sd;
      d = a + g * (b - a);
      sd = ssr(std::exp(d));
    }
  }
  InteractionFit fit;
  fit.u_hz = std::exp(0.5 * (a + b));
  const double s0 = ssr(fit.u_hz);
  const auto n = static_cast<double>(times_s.size());
  fit.rms_residual = std::sqrt(s0 / n);
  const double h = 1e-3 * fit.u_hz;
  const double curvature = (ssr(fit.u_hz + h) - 2.0 * s0 + ssr(fit.u_hz - h)) / (h * h);
  const double sigma2 = std::max(s0 / (n - 1.0), options.sigma_floor * options.sigma_floor);
  fit.ci_hz = curvature > 0.0 ? std::sqrt(2.0 * sigma2 / curvature) : std::numeric_limits<double>::infinity();
  fit.identifiable = std::isfinite(fit.ci_hz) && fit.ci_hz < 0.5 * fit.u_hz && best < options.grid_points - 2;
  return fit;
}

AtomArray triangle_array(double side_um) {
  AtomArray a;
  a.positions_um = {Eigen::Vector3d(0.0, 0.0, 0.0),
                    Eigen::Vector3d(side_um * std::sqrt(3.0) / 2.0, 0.0, side_um / 2.0),
                    Eigen::Vector3d(0.0, 0.0, side_um)};
  a.validate();
  return a;
}

CouplingMatrix triangle_couplings(double v01_hz, double v12_hz, double v02_hz) {
  Eigen::MatrixXd v = Eigen::MatrixXd::Zero(3, 3);
  v(0, 1) = v(1, 0) = v01_hz;
  v(1, 2) = v(2, 1) = v12_hz;
  v(0, 2) = v(2, 0) = v02_hz;
  return CouplingMatrix::imported(CouplingModel::IsingVdW, v);
}

EvolutionResult simulate_three_atom_ising(double rabi_hz, const CouplingMatrix& couplings,
                                          const std::vector<double>& times_s, const NoiseParams& noise) {
  SpinSystem sys;
  sys.array = triangle_array();
  sys.couplings = couplings;
  sys.drive.rabi_hz = rabi_hz;
  return simulate(sys, 0, times_s, noise);
}

EvolutionResult simulate_xy_chain(const RadialSolver& solver, const StateLabel& up, const StateLabel& down,
                                  const std::vector<double>& times_s, const NoiseParams& noise, double spacing_um) {
  SpinSystem sys;
  sys.array = AtomArray::chain(3, spacing_um);
  sys.couplings = pair_couplings(solver, sys.array, CouplingModel::XYExchange, up, down);
  return simulate(sys, 0b001, times_s, noise);
}

std::vector<double> linspace(double a, double b, int points) {
  if (points < 2) return {a};
  std::vector<double> v(static_cast<std::size_t>(points));
  for (int i = 0; i < points; ++i) v[static_cast<std::size_t>(i)] = a + (b - a) * i / (points - 1);
  return v;
}

}  // namespace rydberg
