#include "rydberg/radial.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "rydberg/errors.hpp"
#include "rydberg/version.hpp"

namespace rydberg {

namespace {

// Inside the inner turning point the regular solution only decays; anything
// larger than the classically allowed peak is the irregular solution taking over.
constexpr double kDivergenceRatio = 1.0;

double inner_turning_point(double n_star, int l) {
  const double disc = n_star * n_star - l * (l + 1.0);
  return n_star * n_star - n_star * std::sqrt(std::max(disc, 0.0));
}

std::string hexfloat(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%a", v);
  return buf;
}

}  // namespace

double RadialWavefunction::u_at(int k) const { return std::sqrt(x(k)) * y_at(k); }

double RadialWavefunction::expectation(int power) const { return radial_overlap(*this, *this, power); }

RadialWavefunction solve_radial(const SpeciesTable& table, const StateLabel& state, const NumerovConfig& config) {
  table.validate(state);
  if (!(config.step > 0.0)) throw DomainError("Numerov step must be positive");

  const double ns = table.effective_n(state);
  if (ns <= state.l) {
    throw DomainError(state.to_string(false) + ": effective quantum number must exceed l");
  }
  const int l = state.l;
  const double h = config.step;
  const double e_au = -0.5 / (ns * ns);
  const double alpha = table.at(state.species).core_polarizability_au;
  const double r_tp = inner_turning_point(ns, l);

  const double r_in = config.r_in.value_or(std::max(std::cbrt(alpha), r_tp));
  const double r_out = config.r_out.value_or(2.0 * state.n * (state.n + 15.0));
  if (!(r_out > r_in)) throw DomainError("outer cutoff must exceed inner cutoff");

  RadialWavefunction wf;
  wf.level = LevelKey(state);
  wf.n_star = ns;
  wf.energy_au = e_au;
  wf.step = h;
  wf.k_in = std::max(1, static_cast<int>(std::floor(std::sqrt(r_in) / h)));
  wf.k_out = static_cast<int>(std::ceil(std::sqrt(r_out) / h));
  if (wf.k_out - wf.k_in < 4) throw DomainError("radial grid has fewer than four points");

  const auto count = static_cast<std::size_t>(wf.k_out - wf.k_in + 1);
  std::vector<double> g(count);
  const double centrifugal = 4.0 * l * (l + 1.0) + 0.75;
  for (std::size_t i = 0; i < count; ++i) {
    const double xk = (wf.k_in + static_cast<int>(i)) * h;
    g[i] = centrifugal / (xk * xk) - 8.0 - 8.0 * e_au * xk * xk;
  }

  // Inward Numerov for y'' = g y, seeded deep in the forbidden region.
  std::vector<double>& y = wf.y;
  y.assign(count, 0.0);
  const double c = h * h / 12.0;
  const std::size_t last = count - 1;
  y[last] = 1e-10;
  y[last - 1] = 1e-10 * (1.0 + h * std::sqrt(std::max(g[last], 0.0)));
  for (std::size_t i = last - 1; i >= 1; --i) {
    y[i - 1] = (2.0 * (1.0 + 5.0 * c * g[i]) * y[i] - (1.0 - c * g[i + 1]) * y[i + 1]) / (1.0 - c * g[i - 1]);
  }

  // Divergence check on u = sqrt(x) y.
  const int k_tp = static_cast<int>(std::floor(std::sqrt(r_tp) / h));
  double peak_inside = 0.0;
  double peak_outside = 0.0;
  for (int k = wf.k_in; k <= wf.k_out; ++k) {
    const double u = std::abs(wf.u_at(k));
    if (!std::isfinite(u)) {
      throw SolverError(state.to_string(false) + ": non-finite value at r = " + std::to_string(wf.r(k)) + " a0");
    }
    (k < k_tp ? peak_inside : peak_outside) = std::max(k < k_tp ? peak_inside : peak_outside, u);
  }
  if (peak_inside > kDivergenceRatio * peak_outside) {
    std::ostringstream msg;
    msg << state.to_string(false) << ": inward solution diverges inside the inner turning point (r_tp = " << r_tp
        << " a0, r_in = " << wf.r_in() << " a0, |u| inside/outside = " << peak_inside / peak_outside << ")";
    throw SolverError(msg.str());
  }

  // Normalize with the trapezoid rule used for all matrix elements.
  auto weight = [&](std::size_t i) {
    const double xk = (wf.k_in + static_cast<int>(i)) * h;
    return 2.0 * xk * xk * y[i] * y[i];
  };
  double trap = 0.0;
  for (std::size_t i = 0; i < count; ++i) trap += weight(i) * ((i == 0 || i == last) ? 0.5 : 1.0);
  trap *= h;
  const double scale = 1.0 / std::sqrt(trap);
  for (double& v : y) v *= scale;

  const std::size_t even_last = (last % 2 == 0) ? last : last - 1;
  double simpson = weight(0) + weight(even_last);
  for (std::size_t i = 1; i < even_last; ++i) simpson += weight(i) * (i % 2 ? 4.0 : 2.0);
  simpson *= h / 3.0;
  if (even_last != last) simpson += 0.5 * h * (weight(even_last) + weight(last));
  wf.norm_residual = std::abs(simpson - 1.0);

  // Positive outer lobe.
  double peak = 0.0;
  for (int k = wf.k_in; k <= wf.k_out; ++k) peak = std::max(peak, std::abs(wf.u_at(k)));
  for (int k = wf.k_out; k >= wf.k_in; --k) {
    const double u = wf.u_at(k);
    if (std::abs(u) > 0.1 * peak) {
      if (u < 0.0) {
        for (double& v : y) v = -v;
      }
      break;
    }
  }
  return wf;
}

double radial_overlap(const RadialWavefunction& a, const RadialWavefunction& b, int power) {
  if (a.step != b.step) throw DomainError("radial_overlap: wavefunctions live on different lattices");
  const int lo = std::max(a.k_in, b.k_in);
  const int hi = std::min(a.k_out, b.k_out);
  if (hi <= lo) return 0.0;
  const double h = a.step;
  if (power < 0) throw DomainError("radial_overlap: negative power");
  double sum = 0.0;
  for (int k = lo; k <= hi; ++k) {
    const double xk = k * h;
    const double rk = xk * xk;
    double weight = 2.0 * rk;
    for (int p = 0; p < power; ++p) weight *= rk;
    double term = weight * a.y_at(k) * b.y_at(k);
    if (k == lo || k == hi) term *= 0.5;
    sum += term;
  }
  return sum * h;
}

// ---------------------------------------------------------------------------

const char* RadialIntegralCache::format_version() { return RYDBERG_VERSION "/numerov-1"; }

RadialIntegralCache::RadialIntegralCache(double grid_step, std::string species_checksum)
    : step_(grid_step), checksum_(std::move(species_checksum)) {}

RadialIntegralCache::RadialIntegralCache(std::filesystem::path path, double grid_step, std::string species_checksum)
    : path_(std::move(path)), step_(grid_step), checksum_(std::move(species_checksum)) {
  load();
}

RadialIntegralCache::Key RadialIntegralCache::make_key(const LevelKey& a, const LevelKey& b, int power) {
  if (a.species != b.species) throw DomainError("radial integral between different species");
  const LevelKey& lo = (b < a) ? b : a;
  const LevelKey& hi = (b < a) ? a : b;
  return Key{a.species, lo.n, lo.l, lo.two_j, hi.n, hi.l, hi.two_j, power};
}

std::string RadialIntegralCache::header() const {
  return std::string("VERSION ") + format_version() + " GRIDSTEP " + hexfloat(step_) + " SPECIESFILE-CHECKSUM " +
         checksum_;
}

void RadialIntegralCache::load() {
  std::ifstream in(*path_);
  if (!in) return;  // no file yet: start empty
  std::string line;
  if (!std::getline(in, line)) return;
  if (line != header()) {
    warning_ = "radial cache " + path_->string() + " was written with different settings; discarded";
    std::cerr << "warning: " << warning_ << '\n';
    dirty_ = true;
    return;
  }
  std::map<Key, double> parsed;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream rec(line);
    std::string sp, value;
    Key k{};
    if (!(rec >> sp >> k.n1 >> k.l1 >> k.two_j1 >> k.n2 >> k.l2 >> k.two_j2 >> k.power >> value)) {
      warning_ = "radial cache " + path_->string() + " is corrupt at line " + std::to_string(line_no) + "; discarded";
      break;
    }
    char* end = nullptr;
    const double v = std::strtod(value.c_str(), &end);
    std::string extra;
    if (end == value.c_str() || *end != '\0' || !std::isfinite(v) || (rec >> extra)) {
      warning_ = "radial cache " + path_->string() + " is corrupt at line " + std::to_string(line_no) + "; discarded";
      break;
    }
    try {
      k.species = parse_species(sp);
    } catch (const DomainError&) {
      warning_ = "radial cache " + path_->string() + " names unknown species at line " + std::to_string(line_no) +
                 "; discarded";
      break;
    }
    parsed[k] = v;
  }
  if (!warning_.empty()) {
    std::cerr << "warning: " << warning_ << '\n';
    dirty_ = true;
    return;
  }
  entries_ = std::move(parsed);
  loaded_ = entries_.size();
}

std::optional<double> RadialIntegralCache::get(const Key& key) const {
  std::shared_lock lock(mutex_);
  const auto it = entries_.find(key);
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

void RadialIntegralCache::put(const Key& key, double value) {
  std::unique_lock lock(mutex_);
  auto [it, inserted] = entries_.emplace(key, value);
  if (inserted) {
    dirty_ = true;
  } else if (std::bit_cast<std::uint64_t>(it->second) != std::bit_cast<std::uint64_t>(value)) {
    it->second = value;
    dirty_ = true;
  }
}

std::size_t RadialIntegralCache::size() const {
  std::shared_lock lock(mutex_);
  return entries_.size();
}

bool RadialIntegralCache::dirty() const {
  std::shared_lock lock(mutex_);
  return dirty_;
}

void RadialIntegralCache::flush() {
  std::unique_lock lock(mutex_);
  if (!path_ || !dirty_) return;
  auto tmp = *path_;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::trunc);
    if (!out) throw IoError("cannot write radial cache " + tmp.string());
    out << header() << '\n';
    for (const auto& [k, v] : entries_) {
      out << to_string(k.species) << ' ' << k.n1 << ' ' << k.l1 << ' ' << k.two_j1 << ' ' << k.n2 << ' ' << k.l2
          << ' ' << k.two_j2 << ' ' << k.power << ' ' << hexfloat(v) << '\n';
    }
    if (!out) throw IoError("short write on radial cache " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, *path_, ec);
  if (ec) throw IoError("cannot replace radial cache " + path_->string() + ": " + ec.message());
  dirty_ = false;
}

// ---------------------------------------------------------------------------

RadialSolver::RadialSolver(const SpeciesTable& table, NumerovConfig config, std::shared_ptr<RadialIntegralCache> cache)
    : table_(&table), config_(std::move(config)), cache_(std::move(cache)) {
  if (cache_ && cache_->header() != RadialIntegralCache(config_.step, table.checksum()).header()) {
    throw DomainError("radial cache was created for a different grid step or species file");
  }
}

std::shared_ptr<const RadialWavefunction> RadialSolver::wavefunction(const StateLabel& state) const {
  const LevelKey key(state);
  {
    std::lock_guard lock(memo_mutex_);
    if (const auto it = memo_.find(key); it != memo_.end()) return it->second;
  }
  // Solve outside the lock; a concurrent duplicate solve yields the same data.
  auto wf = std::make_shared<const RadialWavefunction>(solve_radial(*table_, state, config_));
  std::lock_guard lock(memo_mutex_);
  return memo_.emplace(key, std::move(wf)).first->second;
}

double RadialSolver::matrix_element(const StateLabel& a, const StateLabel& b, int power) const {
  // Integrals computed with overridden cutoffs must not leak into the shared cache.
  const bool use_cache = cache_ && config_.is_default();
  RadialIntegralCache::Key key{};
  if (use_cache) {
    key = RadialIntegralCache::make_key(LevelKey(a), LevelKey(b), power);
    if (auto hit = cache_->get(key)) return *hit;
  }
  // Evaluate in canonical order so the value is independent of argument order.
  const bool swap = LevelKey(b) < LevelKey(a);
  const auto wa = wavefunction(swap ? b : a);
  const auto wb = wavefunction(swap ? a : b);
  const double v = radial_overlap(*wa, *wb, power);
  if (use_cache) cache_->put(key, v);
  return v;
}

void RadialSolver::clear_memo() const {
  std::lock_guard lock(memo_mutex_);
  memo_.clear();
}

}  // namespace rydberg
