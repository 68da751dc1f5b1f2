#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

#include "rydberg/species.hpp"

namespace rydberg {

/// Grid and truncation parameters for the Numerov solver.
///
/// The solver works in x = sqrt(r) on the fixed lattice x_k = k * step, so
/// wavefunctions of different states share abscissae and overlap integrals
/// need no interpolation.
struct NumerovConfig {
  double step = 0.01;  // in a0^(1/2)
  /// Overrides for the inner/outer cutoffs in a0. The defaults are
  /// max(alpha_core^(1/3), inner turning point) and 2n(n + 15).
  std::optional<double> r_in;
  std::optional<double> r_out;

  bool is_default() const { return !r_in && !r_out; }
};

/// Reduced radial function u(r) = r R(r), tabulated as y(x) = x^(-1/2) u(x^2).
struct RadialWavefunction {
  LevelKey level{Species::Rb87, 0, 0, 1};
  double n_star = 0.0;
  double energy_au = 0.0;
  double step = 0.01;
  int k_in = 0;
  int k_out = 0;
  std::vector<double> y;  // y[i] belongs to lattice index k_in + i
  /// |Simpson estimate of the norm - 1| after trapezoid normalization.
  double norm_residual = 0.0;

  double x(int k) const { return k * step; }
  double r(int k) const { return x(k) * x(k); }
  double y_at(int k) const { return y[static_cast<std::size_t>(k - k_in)]; }
  double u_at(int k) const;
  double r_in() const { return r(k_in); }
  double r_out() const { return r(k_out); }

  /// <r^k> in a0^k.
  double expectation(int power) const;
};

/// Integrates the Coulomb radial equation inward at the quantum-defect energy.
/// Throws SolverError when the solution blows up inside the inner turning point.
RadialWavefunction solve_radial(const SpeciesTable& table, const StateLabel& state,
                                const NumerovConfig& config = {});

/// Trapezoid quadrature of u_a r^k u_b over the common support. Requires the
/// same lattice step.
double radial_overlap(const RadialWavefunction& a, const RadialWavefunction& b, int power);

/// Persistent store of radial integrals keyed by (species, sorted level pair, k).
///
/// Readers run concurrently; put() and flush() take the writer lock. The text
/// file starts with a header line
///   VERSION <v> GRIDSTEP <hexfloat> SPECIESFILE-CHECKSUM <hex>
/// followed by one record per line:
///   <species> <n> <l> <2j> <n'> <l'> <2j'> <k> <hexfloat value>
/// Any header mismatch discards the whole file.
class RadialIntegralCache {
 public:
  struct Key {
    Species species;
    int n1, l1, two_j1;
    int n2, l2, two_j2;
    int power;
    auto operator<=>(const Key&) const = default;
  };

  /// In-memory cache, never persisted.
  RadialIntegralCache(double grid_step, std::string species_checksum);
  /// Loads `path` if it exists and matches; flush() writes back to it.
  RadialIntegralCache(std::filesystem::path path, double grid_step, std::string species_checksum);

  static Key make_key(const LevelKey& a, const LevelKey& b, int power);

  std::optional<double> get(const Key& key) const;
  void put(const Key& key, double value);

  /// Writes all entries (atomic replace). No-op when clean or in-memory.
  void flush();

  std::size_t size() const;
  bool dirty() const;
  std::size_t loaded_entries() const { return loaded_; }
  /// Non-empty when the file on disk was rejected.
  const std::string& load_warning() const { return warning_; }
  const std::optional<std::filesystem::path>& path() const { return path_; }
  std::string header() const;

  static const char* format_version();

 private:
  void load();

  std::optional<std::filesystem::path> path_;
  double step_;
  std::string checksum_;
  std::map<Key, double> entries_;
  bool dirty_ = false;
  std::size_t loaded_ = 0;
  std::string warning_;
  mutable std::shared_mutex mutex_;
};

/// Wavefunction memo plus integral cache for one species table.
///
/// Safe to share between threads.
class RadialSolver {
 public:
  explicit RadialSolver(const SpeciesTable& table, NumerovConfig config = {},
                        std::shared_ptr<RadialIntegralCache> cache = nullptr);

  const SpeciesTable& table() const { return *table_; }
  const NumerovConfig& config() const { return config_; }
  const std::shared_ptr<RadialIntegralCache>& cache() const { return cache_; }

  std::shared_ptr<const RadialWavefunction> wavefunction(const StateLabel& state) const;

  /// <a| r^k |b> in a0^k; symmetric in (a, b), m_j ignored.
  double matrix_element(const StateLabel& a, const StateLabel& b, int power = 1) const;

  /// Drops memoized wavefunctions (integrals stay cached).
  void clear_memo() const;

 private:
  const SpeciesTable* table_;
  NumerovConfig config_;
  std::shared_ptr<RadialIntegralCache> cache_;
  mutable std::mutex memo_mutex_;
  mutable std::map<LevelKey, std::shared_ptr<const RadialWavefunction>> memo_;
};

}  // namespace rydberg
