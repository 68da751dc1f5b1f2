#include "rydberg/species.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "rydberg/errors.hpp"

namespace rydberg {

namespace {

#include "bundled_species.inc"

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

int parse_int(std::string_view token, std::string_view what) {
  try {
    std::size_t used = 0;
    const std::string t(token);
    const int v = std::stoi(t, &used);
    if (used != t.size()) throw std::invalid_argument("trailing");
    return v;
  } catch (const std::exception&) {
    throw DomainError("cannot parse " + std::string(what) + " from '" + std::string(token) + "'");
  }
}

// "3/2" -> 3, "1" -> 2, "-1/2" -> -1
int parse_twice(std::string_view token, std::string_view what) {
  const auto slash = token.find('/');
  if (slash == std::string_view::npos) return 2 * parse_int(token, what);
  if (trim(token.substr(slash + 1)) != "2") {
    throw DomainError("cannot parse " + std::string(what) + " from '" + std::string(token) + "'");
  }
  return parse_int(trim(token.substr(0, slash)), what);
}

int orbital_from_letter(char c) {
  switch (c) {
    case 'S': return 0;
    case 'P': return 1;
    case 'D': return 2;
    case 'F': return 3;
    case 'G': return 4;
    case 'H': return 5;
    default: return -1;
  }
}

std::string twice_to_string(int two) {
  if (two % 2 == 0) return std::to_string(two / 2);
  return std::to_string(two) + "/2";
}

}  // namespace

std::string_view to_string(Species species) {
  switch (species) {
    case Species::Rb87: return "Rb87";
    case Species::Cs133: return "Cs133";
    case Species::H1: return "H1";
  }
  return "?";
}

Species parse_species(std::string_view token) {
  if (token == "Rb" || token == "Rb87") return Species::Rb87;
  if (token == "Cs" || token == "Cs133") return Species::Cs133;
  if (token == "H" || token == "H1") return Species::H1;
  throw DomainError("unknown species '" + std::string(token) + "'");
}

char orbital_letter(int l) {
  static constexpr char kLetters[] = "SPDFGHIKLMNOQRTUVWXYZ";
  if (l < 0) return '?';
  if (l < static_cast<int>(sizeof(kLetters)) - 1) return kLetters[l];
  return '?';
}

double QuantumDefectSeries::evaluate(int n) const {
  const double x = n - delta0;
  return delta0 + delta2 / (x * x);
}

StateLabel::StateLabel(Species sp, int n_, int l_, double j_, double mj_) {
  const double tj = 2.0 * j_;
  const double tm = 2.0 * mj_;
  if (std::abs(tj - std::round(tj)) > 1e-9 || std::abs(tm - std::round(tm)) > 1e-9) {
    throw DomainError("j and m_j must be half-integers");
  }
  *this = from_twice(sp, n_, l_, static_cast<int>(std::lround(tj)), static_cast<int>(std::lround(tm)));
}

StateLabel StateLabel::from_twice(Species sp, int n, int l, int two_j, int two_mj) {
  if (n < 1) throw DomainError("principal quantum number must be >= 1");
  if (l < 0 || l >= n) throw DomainError("orbital quantum number must satisfy 0 <= l < n");
  if (two_j != 2 * l + 1 && two_j != 2 * l - 1) throw DomainError("j must equal l +- 1/2");
  if (two_j < 1) throw DomainError("j must be positive");
  if (std::abs(two_mj) > two_j || (two_mj - two_j) % 2 != 0) {
    throw DomainError("m_j must lie in {-j, ..., j}");
  }
  StateLabel s;
  s.species = sp;
  s.n = n;
  s.l = l;
  s.two_j = two_j;
  s.two_mj = two_mj;
  return s;
}

StateLabel StateLabel::with_mj(int two_mj_new) const {
  return from_twice(species, n, l, two_j, two_mj_new);
}

std::string StateLabel::to_string(bool with_m) const {
  std::string species_name(rydberg::to_string(species));
  std::string out = species_name.substr(0, species_name.find_first_of("0123456789")) + ":" +
                    std::to_string(n) + orbital_letter(l) + twice_to_string(two_j);
  if (with_m) out += ":" + twice_to_string(two_mj);
  return out;
}

StateLabel parse_state(std::string_view spec) {
  const std::string s = trim(spec);
  const auto colon = s.find(':');
  if (colon == std::string::npos) {
    throw DomainError("state '" + s + "' must look like Species:nLj, e.g. Rb:80S1/2");
  }
  const Species sp = parse_species(s.substr(0, colon));
  std::string rest = s.substr(colon + 1);
  std::string mj_token;
  if (const auto c2 = rest.find(':'); c2 != std::string::npos) {
    mj_token = rest.substr(c2 + 1);
    rest = rest.substr(0, c2);
  }
  std::size_t pos = 0;
  while (pos < rest.size() && std::isdigit(static_cast<unsigned char>(rest[pos]))) ++pos;
  if (pos == 0) throw DomainError("missing principal quantum number in '" + rest + "'");
  const int n = parse_int(rest.substr(0, pos), "n");
  if (pos >= rest.size()) throw DomainError("missing orbital letter in '" + rest + "'");
  const int l = orbital_from_letter(rest[pos]);
  if (l < 0) throw DomainError("unknown orbital letter '" + std::string(1, rest[pos]) + "'");
  const std::string j_token = rest.substr(pos + 1);
  if (j_token.empty()) throw DomainError("missing j in '" + rest + "'");
  const int two_j = parse_twice(j_token, "j");
  const int two_mj = mj_token.empty() ? two_j : parse_twice(mj_token, "m_j");
  return StateLabel::from_twice(sp, n, l, two_j, two_mj);
}

// ---------------------------------------------------------------------------

std::string SpeciesTable::body_checksum(std::string_view text) {
  std::size_t start = 0;
  while (start < text.size() && text.substr(start, 2) == "#%") {
    const auto nl = text.find('\n', start);
    if (nl == std::string_view::npos) {
      start = text.size();
      break;
    }
    start = nl + 1;
  }
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (std::size_t i = start; i < text.size(); ++i) {
    h ^= static_cast<unsigned char>(text[i]);
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

SpeciesTable SpeciesTable::parse(std::string_view text, std::string origin) {
  SpeciesTable table;
  table.origin_ = std::move(origin);
  std::string declared_checksum;

  std::istringstream in{std::string(text)};
  std::string raw;
  SpeciesData* current = nullptr;
  int line_no = 0;
  auto fail = [&](const std::string& msg) {
    throw DomainError(table.origin_ + ":" + std::to_string(line_no) + ": " + msg);
  };

  while (std::getline(in, raw)) {
    ++line_no;
    if (raw.rfind("#%", 0) == 0) {
      std::istringstream hs(raw.substr(2));
      std::string key;
      hs >> key;
      if (key == "rydberg-species-data") {
        hs >> table.version_;
      } else if (key == "checksum") {
        std::string algo;
        hs >> algo >> declared_checksum;
        if (algo != "fnv1a64") fail("unsupported checksum algorithm '" + algo + "'");
      }
      continue;
    }
    std::string line = raw;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;

    if (line.front() == '[') {
      if (line.back() != ']') fail("malformed section header");
      const Species id = parse_species(line.substr(1, line.size() - 2));
      current = &table.data_[id];
      current->id = id;
      continue;
    }
    if (current == nullptr) fail("entry outside of a [Species] section");

    const auto eq = line.find('=');
    if (eq == std::string::npos) fail("expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));

    try {
      if (key == "mass_u") {
        current->mass_u = std::stod(value);
      } else if (key == "rydberg_constant_hz") {
        current->rydberg_hz = std::stod(value);
      } else if (key == "core_polarizability_au") {
        current->core_polarizability_au = std::stod(value);
      } else if (key == "ground_state") {
        current->ground_state = value;
      } else if (key == "min_n") {
        std::istringstream vs(value);
        for (int& m : current->min_n) {
          if (!(vs >> m)) fail("min_n needs four integers");
        }
      } else if (key.rfind("defect ", 0) == 0) {
        const std::string label = trim(key.substr(7));
        if (label.empty()) fail("missing series label");
        const int l = orbital_from_letter(label.front());
        if (l < 0 || l > 3) fail("defect series must be S, P, D or F");
        const int two_j = parse_twice(label.substr(1), "j");
        QuantumDefectSeries series;
        std::string numbers = value;
        if (const auto bar = value.find('|'); bar != std::string::npos) {
          series.source = trim(value.substr(bar + 1));
          numbers = value.substr(0, bar);
        }
        std::istringstream vs(numbers);
        if (!(vs >> series.delta0 >> series.delta2 >> series.n_min)) {
          fail("defect needs 'delta0 delta2 n_min'");
        }
        current->defects[{l, two_j}] = series;
      } else {
        fail("unknown key '" + key + "'");
      }
    } catch (const std::invalid_argument&) {
      fail("cannot parse value for '" + key + "'");
    }
  }

  if (!declared_checksum.empty()) {
    const std::string actual = body_checksum(text);
    if (actual != declared_checksum) {
      throw DomainError(table.origin_ + ": checksum mismatch (header " + declared_checksum +
                        ", content " + actual + ")");
    }
  }
  table.checksum_ = body_checksum(text);
  for (const auto& [id, d] : table.data_) {
    if (d.rydberg_hz <= 0.0) {
      throw DomainError(table.origin_ + ": " + std::string(to_string(id)) + " lacks rydberg_constant_hz");
    }
  }
  return table;
}

SpeciesTable SpeciesTable::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open species file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse(buf.str(), path.string());
}

const SpeciesTable& SpeciesTable::bundled() {
  static const SpeciesTable table = parse(kBundledSpeciesData, "species.dat (bundled)");
  return table;
}

const SpeciesData& SpeciesTable::at(Species id) const {
  const auto it = data_.find(id);
  if (it == data_.end()) {
    throw DomainError("species " + std::string(to_string(id)) + " not present in " + origin_);
  }
  return it->second;
}

void SpeciesTable::validate(const StateLabel& s) const {
  const SpeciesData& d = at(s.species);
  const int min_n = s.l <= 3 ? d.min_n[static_cast<std::size_t>(s.l)] : s.l + 1;
  if (s.n < min_n) {
    throw DomainError(s.to_string(false) + " lies below the lowest " + std::string(1, orbital_letter(s.l)) +
                      " shell (n >= " + std::to_string(min_n) + ")");
  }
  if (effective_n(s) <= 0.0) throw DomainError(s.to_string(false) + " has n* <= 0");
}

double SpeciesTable::quantum_defect(const StateLabel& s) const {
  if (s.l > 3) return 0.0;
  const SpeciesData& d = at(s.species);
  const auto it = d.defects.find({s.l, s.two_j});
  if (it == d.defects.end()) return 0.0;
  return it->second.evaluate(s.n);
}

double SpeciesTable::effective_n(const StateLabel& s) const { return s.n - quantum_defect(s); }

double SpeciesTable::energy(const StateLabel& s) const {
  validate(s);
  const double ns = effective_n(s);
  return -at(s.species).rydberg_hz / (ns * ns);
}

double state_energy(const SpeciesTable& table, const StateLabel& state) { return table.energy(state); }

double hydrogenic_mean_radius(double n_star, int l) {
  return 0.5 * (3.0 * n_star * n_star - l * (l + 1.0));
}

}  // namespace rydberg
