#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <exception>
#include <fstream>
#include <iostream>
#include <mutex>
#include <sstream>
#include <thread>

#include "app.hpp"
#include "rydberg/errors.hpp"

namespace rydcalc {

using rydberg::IoError;

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

void Table::add(std::vector<Cell> row) {
  if (row.size() != columns.size()) throw std::logic_error("table row width does not match the header");
  rows.push_back(std::move(row));
}

namespace {

std::string csv_cell(const Cell& c) {
  if (const auto* d = std::get_if<double>(&c)) return format_double(*d);
  if (const auto* i = std::get_if<long long>(&c)) return std::to_string(*i);
  const auto& s = std::get<std::string>(c);
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char ch : s) {
    if (ch == '"') q += '"';
    q += ch;
  }
  return q + '"';
}

json json_cell(const Cell& c) {
  if (const auto* d = std::get_if<double>(&c)) return std::isfinite(*d) ? json(*d) : json(nullptr);
  if (const auto* i = std::get_if<long long>(&c)) return *i;
  return std::get<std::string>(c);
}

}  // namespace

std::string Table::to_csv() const {
  std::string out;
  for (std::size_t i = 0; i < columns.size(); ++i) out += (i ? "," : "") + columns[i];
  out += '\n';
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out += ',';
      out += csv_cell(row[i]);
    }
    out += '\n';
  }
  return out;
}

json Table::to_json() const {
  json rows_json = json::array();
  for (const auto& row : rows) {
    json obj = json::object();
    for (std::size_t i = 0; i < row.size(); ++i) obj[columns[i]] = json_cell(row[i]);
    rows_json.push_back(std::move(obj));
  }
  return rows_json;
}

Context::Context(const std::string& species_file, const std::string& cache_path, int jobs, std::uint64_t seed)
    : jobs_(std::max(1, jobs)), seed_(seed) {
  if (species_file.empty()) {
    table_ = &rydberg::SpeciesTable::bundled();
  } else {
    owned_ = std::make_unique<rydberg::SpeciesTable>(rydberg::SpeciesTable::load(species_file));
    table_ = owned_.get();
  }
  const rydberg::NumerovConfig config;
  if (cache_path.empty()) {
    cache_state_ = "disabled";
    cache_ = std::make_shared<rydberg::RadialIntegralCache>(config.step, table_->checksum());
  } else {
    cache_ = std::make_shared<rydberg::RadialIntegralCache>(std::filesystem::path(cache_path), config.step,
                                                            table_->checksum());
    cache_state_ = cache_->loaded_entries() > 0 ? "warm" : "cold";
    if (!cache_->load_warning().empty()) std::cerr << "warning: " << cache_->load_warning() << '\n';
  }
  solver_ = std::make_unique<rydberg::RadialSolver>(*table_, config, cache_);
}

json Context::cache_info() const {
  json j = json::object();
  j["state"] = cache_state_;
  j["path"] = cache_->path() ? json(cache_->path()->string()) : json(nullptr);
  j["entries_loaded"] = cache_->loaded_entries();
  j["entries_after_run"] = cache_->size();
  return j;
}

json Context::species_info() const {
  json j = json::object();
  j["origin"] = table_->origin();
  j["format_version"] = table_->format_version();
  j["checksum"] = table_->checksum();
  return j;
}

void Context::flush() { cache_->flush(); }

void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& body) {
  const auto workers = static_cast<std::size_t>(std::clamp<long long>(jobs, 1, static_cast<long long>(std::max<std::size_t>(n, 1))));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::mutex mutex;
  std::size_t failed_index = n;
  std::exception_ptr failure;
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        body(i);
      } catch (...) {
        std::lock_guard lock(mutex);
        if (i < failed_index) {
          failed_index = i;
          failure = std::current_exception();
        }
      }
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  out.close();
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<Emitted> emit(const Report& report, const std::optional<std::filesystem::path>& out_dir, bool as_json) {
  std::vector<Emitted> written;
  json summary = report.summary;
  if (!summary.contains("schema_version")) {
    json tagged = json::object();
    tagged["schema_version"] = kSchemaVersion;
    for (auto& [k, v] : summary.items()) tagged[k] = v;
    summary = std::move(tagged);
  }

  if (out_dir) {
    // Outputs are assembled in memory first and written in a fixed order.
    for (const auto& [name, table] : report.tables) {
      const std::string text = table.to_csv();
      write_file(*out_dir / (name + ".csv"), text);
      written.push_back({name + ".csv", text.size(), fnv1a64(text)});
    }
    const std::string text = summary.dump(2) + "\n";
    write_file(*out_dir / (report.name + ".json"), text);
    written.push_back({report.name + ".json", text.size(), fnv1a64(text)});
    return written;
  }

  std::string text;
  if (as_json) {
    json doc = summary;
    json tables = json::object();
    for (const auto& [name, table] : report.tables) tables[name] = table.to_json();
    doc["tables"] = std::move(tables);
    text = doc.dump(2) + "\n";
  } else {
    for (std::size_t i = 0; i < report.tables.size(); ++i) {
      if (report.tables.size() > 1) text += (i ? "\n# " : "# ") + report.tables[i].first + "\n";
      text += report.tables[i].second.to_csv();
    }
  }
  std::cout << text << std::flush;
  written.push_back({"stdout", text.size(), fnv1a64(text)});
  return written;
}

std::string utc_timestamp() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace rydcalc
