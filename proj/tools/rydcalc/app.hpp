#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "rydberg/radial.hpp"
#include "rydberg/species.hpp"

namespace rydcalc {

using json = nlohmann::ordered_json;

inline constexpr int kSchemaVersion = 1;

/// "%.17g": round-trips every double and prints the same bytes everywhere.
std::string format_double(double v);

/// FNV-1a 64 of `bytes`, 16 lowercase hex digits.
std::string fnv1a64(std::string_view bytes);

using Cell = std::variant<double, long long, std::string>;

/// Header names carry their unit as a suffix (R_um, defect_MHz, ...);
/// dimensionless numbers end in _frac (probabilities) or _num.
struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;

  void add(std::vector<Cell> row);
  std::string to_csv() const;
  json to_json() const;
};

struct Report {
  /// Base name of the summary file, usually the subcommand.
  std::string name;
  std::vector<std::pair<std::string, Table>> tables;
  json summary = json::object();
};

/// Species table, integral cache and solver shared by one run.
class Context {
 public:
  /// `species_file` empty selects the bundled table; `cache_path` empty
  /// disables the persistent cache.
  Context(const std::string& species_file, const std::string& cache_path, int jobs, std::uint64_t seed);

  const rydberg::SpeciesTable& table() const { return *table_; }
  const rydberg::RadialSolver& solver() const { return *solver_; }
  int jobs() const { return jobs_; }
  std::uint64_t seed() const { return seed_; }
  /// "disabled", "cold" (nothing loaded) or "warm".
  const std::string& cache_state() const { return cache_state_; }
  json cache_info() const;
  json species_info() const;
  /// Writes new integrals back to the cache file (IoError on failure).
  void flush();

 private:
  std::unique_ptr<rydberg::SpeciesTable> owned_;
  const rydberg::SpeciesTable* table_ = nullptr;
  std::shared_ptr<rydberg::RadialIntegralCache> cache_;
  std::unique_ptr<rydberg::RadialSolver> solver_;
  int jobs_ = 1;
  std::uint64_t seed_ = 0;
  std::string cache_state_;
};

/// Runs body(i) for i in [0, n) on up to `jobs` threads. Results must be
/// stored by index; the exception of the lowest failing index is rethrown.
void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& body);

// Subcommands. `options` holds every parameter with defaults filled in; the
// same object is stored in the manifest and replayed by `rerun`.
Report cmd_state(const json& options, Context& ctx);
Report cmd_c6(const json& options, Context& ctx);
Report cmd_c3(const json& options, Context& ctx);
Report cmd_forster(const json& options, Context& ctx);
Report cmd_starkmap(const json& options, Context& ctx);
Report cmd_scan(const json& options, Context& ctx);
Report cmd_regimes(const json& options, Context& ctx);
Report cmd_dynamics(const json& options, Context& ctx);

/// Checks a scenario document and fills in defaults. Throws DomainError
/// naming the offending field as a JSON path ("drive.rabi_Hz").
json resolve_scenario(const json& scenario);

Report dispatch(const std::string& subcommand, const json& options, Context& ctx);

struct Emitted {
  std::string name;  // file name, or "stdout"
  std::size_t bytes = 0;
  std::string checksum;
};

/// Writes the report: CSV per table plus <name>.json into `out_dir`, or the
/// CSV (JSON with `as_json`) to stdout when no directory is given.
std::vector<Emitted> emit(const Report& report, const std::optional<std::filesystem::path>& out_dir, bool as_json);

/// Writes `text` to `path` atomically enough for our purposes; IoError on failure.
void write_file(const std::filesystem::path& path, const std::string& text);
std::string read_file(const std::filesystem::path& path);

std::string utc_timestamp();

}  // namespace rydcalc
