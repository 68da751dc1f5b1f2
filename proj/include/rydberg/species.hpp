#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <utility>

namespace rydberg {

enum class Species { Rb87, Cs133, H1 };

std::string_view to_string(Species species);
/// Accepts "Rb", "Rb87", "Cs", "Cs133", "H", "H1".
Species parse_species(std::string_view token);

/// Rydberg-Ritz series delta(n) = delta0 + delta2 / (n - delta0)^2.
struct QuantumDefectSeries {
  double delta0 = 0.0;
  double delta2 = 0.0;
  int n_min = 1;
  std::string source;

  double evaluate(int n) const;
};

/// One |n, l, j, m_j> level. Half-integer quantum numbers are stored doubled.
struct StateLabel {
  Species species = Species::Rb87;
  int n = 0;
  int l = 0;
  int two_j = 1;
  int two_mj = 1;

  StateLabel() = default;
  /// Validates the structural rules (l < n, j = l +- 1/2, |m_j| <= j).
  StateLabel(Species species, int n, int l, double j, double mj);

  static StateLabel from_twice(Species species, int n, int l, int two_j, int two_mj);

  double j() const { return 0.5 * two_j; }
  double mj() const { return 0.5 * two_mj; }

  /// Same level with another m_j.
  StateLabel with_mj(int two_mj) const;

  /// "Rb:62D3/2" (without m_j) or "Rb:62D3/2:3/2".
  std::string to_string(bool with_mj = true) const;

  auto operator<=>(const StateLabel&) const = default;
};

/// Identifies a fine-structure level regardless of m_j.
struct LevelKey {
  Species species = Species::Rb87;
  int n = 0;
  int l = 0;
  int two_j = 1;

  explicit LevelKey(const StateLabel& s) : species(s.species), n(s.n), l(s.l), two_j(s.two_j) {}
  LevelKey(Species sp, int n_, int l_, int two_j_) : species(sp), n(n_), l(l_), two_j(two_j_) {}
  auto operator<=>(const LevelKey&) const = default;
};

/// Parses the state mini-grammar "Species:nLj[:mj]", e.g. "Rb:80S1/2" or
/// "Rb:62D3/2:3/2". Without an explicit m_j the stretched value m_j = j is
/// used. Throws DomainError naming the offending token.
StateLabel parse_state(std::string_view spec);

char orbital_letter(int l);

/// Constants for one alkali species.
struct SpeciesData {
  Species id = Species::Rb87;
  double mass_u = 0.0;
  /// Mass-corrected Rydberg constant Ry* (energy/h, Hz).
  double rydberg_hz = 0.0;
  /// Core dipole polarizability, atomic units.
  double core_polarizability_au = 0.0;
  std::string ground_state;
  /// Lowest principal quantum number available for l = 0..3.
  std::array<int, 4> min_n{1, 2, 3, 4};
  /// Keyed by (l, 2j); l <= 3 only.
  std::map<std::pair<int, int>, QuantumDefectSeries> defects;
};

/// Immutable after construction; safe for concurrent reads.
class SpeciesTable {
 public:
  /// The species file shipped with the library (data/species.dat).
  static const SpeciesTable& bundled();
  static SpeciesTable load(const std::filesystem::path& path);
  /// Parses the text format; verifies the header checksum if present.
  static SpeciesTable parse(std::string_view text, std::string origin = "<memory>");

  /// FNV-1a 64 of the body (everything after the "#%" header lines), hex.
  static std::string body_checksum(std::string_view text);

  const SpeciesData& at(Species id) const;
  bool contains(Species id) const { return data_.count(id) != 0; }

  /// Throws DomainError when the state lies below the species' lowest shell.
  void validate(const StateLabel& state) const;

  double quantum_defect(const StateLabel& state) const;
  double effective_n(const StateLabel& state) const;
  /// Level energy -Ry*/(n - delta)^2 as E/h in Hz.
  double energy(const StateLabel& state) const;

  const std::string& checksum() const { return checksum_; }
  const std::string& format_version() const { return version_; }
  const std::string& origin() const { return origin_; }

 private:
  std::map<Species, SpeciesData> data_;
  std::string checksum_;
  std::string version_;
  std::string origin_;
};

/// state_energy: E/h in Hz, independent of m_j.
double state_energy(const SpeciesTable& table, const StateLabel& state);

/// Hydrogenic estimate <r> = (a0/2)(3 n*^2 - l(l+1)), returned in a0.
double hydrogenic_mean_radius(double n_star, int l);

}  // namespace rydberg
