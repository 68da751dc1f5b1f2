// rydcalc: command-line front end to the rydberg library.

#include <chrono>
#include <cstdlib>
#include <iostream>

#include <CLI11.hpp>

#include "app.hpp"
#include "rydberg/errors.hpp"
#include "rydberg/version.hpp"

using namespace rydcalc;
namespace fs = std::filesystem;

namespace {

enum ExitCode { kOk = 0, kUsage = 2, kNumeric = 3, kIo = 4 };

struct Globals {
  std::string species_file;
  std::string cache;
  bool as_json = false;
  std::string out;
  std::string manifest;
  int jobs = 1;
  std::uint64_t seed = 1;
};

// "50:90" or "50:90:5" -> {"min", "max", "step"}; empty -> null.
json parse_n_range(const std::string& text) {
  if (text.empty()) return nullptr;
  std::vector<int> parts;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto colon = text.find(':', pos);
    const std::string token = text.substr(pos, colon == std::string::npos ? std::string::npos : colon - pos);
    try {
      std::size_t used = 0;
      parts.push_back(std::stoi(token, &used));
      if (used != token.size()) throw std::invalid_argument(token);
    } catch (const std::exception&) {
      throw rydberg::DomainError("--n-range: cannot read '" + token + "' as an integer");
    }
    if (colon == std::string::npos) break;
    pos = colon + 1;
  }
  if (parts.size() < 2 || parts.size() > 3) throw rydberg::DomainError("--n-range must read min:max[:step]");
  return {{"min", parts[0]}, {"max", parts[1]}, {"step", parts.size() == 3 ? parts[2] : 1}};
}

struct RunResult {
  json manifest;
  bool verified = true;
};

// Executes one fully resolved configuration and assembles its manifest.
RunResult run(const json& config) {
  const auto t0 = std::chrono::steady_clock::now();
  const std::string started = utc_timestamp();
  Context ctx(config["species_file"].get<std::string>(), config["cache"].get<std::string>(), config["jobs"].get<int>(),
              config["seed"].get<std::uint64_t>());
  const std::string cache_state = ctx.cache_state();

  std::optional<fs::path> out_dir;
  if (!config["out"].is_null()) {
    out_dir = config["out"].get<std::string>();
    std::error_code ec;
    fs::create_directories(*out_dir, ec);
    if (ec || !fs::is_directory(*out_dir)) throw rydberg::IoError("cannot create output directory '" + out_dir->string() + "'");
  }

  const std::string sub = config["subcommand"];
  const Report report = dispatch(sub, config["options"], ctx);
  const auto outputs = emit(report, out_dir, config["json"].get<bool>());
  ctx.flush();

  json m = json::object();
  m["manifest_version"] = 1;
  m["tool"] = "rydcalc";
  m["code_version"] = RYDBERG_VERSION;
  m["subcommand"] = sub;
  m["config"] = config;
  m["seed"] = config["seed"];
  m["species"] = ctx.species_info();
  json cache = ctx.cache_info();
  cache["state"] = cache_state;
  m["cache"] = cache;
  json outs = json::array();
  for (const auto& o : outputs) outs.push_back({{"name", o.name}, {"bytes", o.bytes}, {"fnv1a64", o.checksum}});
  m["outputs"] = outs;
  m["started_utc"] = started;
  m["finished_utc"] = utc_timestamp();
  m["wall_clock_s"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return {m, true};
}

void write_manifest(const json& manifest, const Globals& g, const json& config) {
  const std::string text = manifest.dump(2) + "\n";
  if (!g.manifest.empty()) {
    write_file(g.manifest, text);
  } else if (!config["out"].is_null()) {
    write_file(fs::path(config["out"].get<std::string>()) / "manifest.json", text);
  } else {
    std::cerr << text;
  }
}

json base_config(const std::string& sub, json options, const Globals& g) {
  json c = json::object();
  c["subcommand"] = sub;
  c["options"] = std::move(options);
  c["species_file"] = g.species_file.empty() ? std::string() : fs::absolute(g.species_file).string();
  c["cache"] = g.cache.empty() ? std::string() : fs::absolute(g.cache).string();
  c["seed"] = g.seed;
  c["jobs"] = g.jobs;
  c["json"] = g.as_json;
  c["out"] = g.out.empty() ? json(nullptr) : json(fs::absolute(g.out).string());
  return c;
}

// Replays the configuration stored in a manifest. The species file must
// still match its recorded checksum.
int rerun(const std::string& manifest_path, bool verify, const Globals& g) {
  const json old = json::parse(read_file(manifest_path));
  if (!old.contains("config") || !old.contains("outputs")) {
    throw rydberg::DomainError("'" + manifest_path + "' is not a rydcalc manifest");
  }
  json config = old["config"];
  if (!g.out.empty()) config["out"] = fs::absolute(g.out).string();
  if (g.jobs > 1) config["jobs"] = g.jobs;

  const std::string recorded = old["species"]["checksum"];
  const std::string species_file = config["species_file"];
  const std::string current = species_file.empty() ? rydberg::SpeciesTable::bundled().checksum()
                                                   : rydberg::SpeciesTable::load(species_file).checksum();
  if (current != recorded) {
    throw rydberg::DomainError("species data changed since the recorded run (checksum " + recorded + ", now " +
                               current + ")");
  }
  RunResult res = run(config);
  res.manifest["rerun_of"] = fs::absolute(manifest_path).string();
  int status = kOk;
  if (verify) {
    std::vector<std::string> mismatched;
    const json& before = old["outputs"];
    const json& after = res.manifest["outputs"];
    if (before.size() != after.size()) mismatched.push_back("output count");
    for (std::size_t i = 0; i < std::min(before.size(), after.size()); ++i) {
      if (before[i]["name"] != after[i]["name"] || before[i]["fnv1a64"] != after[i]["fnv1a64"]) {
        mismatched.push_back(before[i]["name"].get<std::string>());
      }
    }
    res.manifest["verified"] = mismatched.empty();
    if (mismatched.empty()) {
      std::cerr << "verify: " << after.size() << " output(s) byte-identical\n";
    } else {
      std::cerr << "verify: outputs differ:";
      for (const auto& n : mismatched) std::cerr << ' ' << n;
      std::cerr << '\n';
      status = kNumeric;
    }
  }
  write_manifest(res.manifest, g, config);
  return status;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"rydcalc: interactions and few-body dynamics of alkali Rydberg atoms"};
  app.set_version_flag("--version", RYDBERG_VERSION);
  app.require_subcommand(1);
  app.fallthrough();

  Globals g;
  app.add_option("--species-file", g.species_file, "Species data file (default: bundled table)")->check(CLI::ExistingFile);
  app.add_option("--cache", g.cache, "Radial-integral cache file")->envname("RYDBERG_CACHE");
  app.add_flag("--json", g.as_json, "Print JSON instead of CSV on stdout");
  app.add_option("--out", g.out, "Write CSV/JSON files and manifest.json into this directory");
  app.add_option("--manifest", g.manifest, "Manifest path (default: <out>/manifest.json, else stderr)");
  app.add_option("--jobs", g.jobs, "Worker threads for sweeps")->check(CLI::Range(1, 256));
  app.add_option("--seed", g.seed, "Random seed for sampled quantities");

  std::string state, state_b, n_range, channel, partner, grid = "linear", scenario_path, manifest_in;
  double temperature = 300.0, theta = 0.0, window_ghz = 30.0, guard_mhz = 1.0, window_mhz = 100.0;
  double field_min = 0.0, field_max = 1.0, r_um = 10.0, r_min = 5.0, r_max = 20.0, field = 0.0, threshold = 0.01;
  int pol_dn = 6, bb_window = 20, delta_n = 4, stark_dn = 2, points = 41, delta_l = 2;
  std::size_t hard_cap = 6000;
  bool conserve_m = false, verify = false;

  auto* st = app.add_subcommand("state", "Energy, <r>, lifetime and polarizability of one level");
  st->add_option("state", state, "State, e.g. Rb:80S1/2")->required();
  st->add_option("--temperature", temperature, "Blackbody temperature in K")->capture_default_str();
  st->add_option("--polarizability-dn", pol_dn, "Half-width in n of the polarizability sum")->capture_default_str();
  st->add_option("--blackbody-window", bb_window, "Half-width in n of the blackbody sum")->capture_default_str();

  auto* c6 = app.add_subcommand("c6", "Van der Waals C6 of |s,s>, optionally scanned over n");
  c6->add_option("state", state, "State, e.g. Rb:80S1/2")->required();
  c6->add_option("--theta", theta, "Angle between the pair axis and z in rad")->capture_default_str();
  c6->add_option("--n-range", n_range, "Scan n over min:max[:step]");
  c6->add_option("--window-ghz", window_ghz, "Pair-energy window in GHz")->capture_default_str();
  c6->add_option("--delta-n", delta_n, "Intermediate levels within n +- delta_n")->capture_default_str();
  c6->add_option("--guard-mhz", guard_mhz, "Near-resonance guard in MHz")->capture_default_str();

  auto* c3 = app.add_subcommand("c3", "Resonant exchange C3 between |a b> and |b a>");
  c3->add_option("a", state, "First state")->required();
  c3->add_option("b", state_b, "Second state")->required();
  c3->add_option("--theta", theta, "Angle between the pair axis and z in rad")->capture_default_str();
  c3->add_option("--n-range", n_range, "Scan n of the first state over min:max[:step]; b keeps its offset");

  auto* fo = app.add_subcommand("forster", "Dipole channels |s s> -> |b c> near resonance");
  fo->add_option("state", state, "State, e.g. Rb:59D3/2")->required();
  fo->add_option("--window-mhz", window_mhz, "Largest |defect| in MHz")->capture_default_str();
  auto* fo_dn = fo->add_option("--delta-n", delta_n, "Partner levels within n +- delta_n");

  auto* sm = app.add_subcommand("starkmap", "Channel defect versus static field and the resonance field E*");
  sm->add_option("state", state, "State, e.g. Rb:59D3/2")->required();
  sm->add_option("--channel", channel, "Channel A+B, e.g. Rb:61P1/2+Rb:57F5/2")->required();
  sm->add_option("--field-min", field_min, "Lowest field in V/cm")->capture_default_str();
  sm->add_option("--field-max", field_max, "Highest field in V/cm")->capture_default_str();
  auto* sm_points = sm->add_option("--points", points, "Field points");
  sm->add_option("--stark-dn", stark_dn, "Stark basis half-width in n")->capture_default_str();
  sm->add_option("--r", r_um, "Distance in um for the gap at E*")->capture_default_str();

  auto* sc = app.add_subcommand("scan", "Pair-state diagonalization versus distance");
  sc->add_option("state", state, "First atom, e.g. Rb:62D3/2")->required();
  sc->add_option("--partner", partner, "Second atom (default: same as the first)");
  sc->add_option("--r-min", r_min, "Smallest distance in um")->capture_default_str();
  sc->add_option("--r-max", r_max, "Largest distance in um")->capture_default_str();
  auto* sc_points = sc->add_option("--points", points, "Distance points");
  sc->add_option("--grid", grid, "linear or log spacing")->check(CLI::IsMember({"linear", "log"}))->capture_default_str();
  sc->add_option("--theta", theta, "Angle between the pair axis and z in rad")->capture_default_str();
  sc->add_option("--field", field, "Static field along z in V/cm")->capture_default_str();
  auto* sc_window = sc->add_option("--window-ghz", window_ghz, "Pair-energy window in GHz");
  auto* sc_dn = sc->add_option("--delta-n", delta_n, "Levels within n +- delta_n");
  sc->add_option("--delta-l", delta_l, "Levels within l +- delta_l")->capture_default_str();
  sc->add_flag("--conserve-m", conserve_m, "Keep only the target's total m_j (theta = 0)");
  sc->add_option("--threshold", threshold, "Print eigenstates with overlap or weight above this")->capture_default_str();
  sc->add_option("--hard-cap", hard_cap, "Largest allowed basis")->capture_default_str();

  double c6_val = 0.0, rabi = 0.0, linewidth = 0.0, rabi_red = 0.0, rabi_blue = 0.0, inter = 0.0, two_ph = 0.0,
         gamma_e = 0.0, dress_rabi = 0.0, dress_det = 0.0;
  auto* rg = app.add_subcommand("regimes", "Blockade, two-photon and dressing regime calculator");
  rg->add_option("--c6", c6_val, "C6 in GHz um^6")->required();
  rg->add_option("--rabi", rabi, "Rabi frequency in MHz")->required()->check(CLI::PositiveNumber);
  rg->add_option("--r", r_um, "Distance in um")->capture_default_str();
  rg->add_option("--linewidth-khz", linewidth, "Excitation linewidth in kHz")->capture_default_str();
  rg->add_option("--rabi-red", rabi_red, "Lower-leg Rabi frequency in MHz");
  rg->add_option("--rabi-blue", rabi_blue, "Upper-leg Rabi frequency in MHz");
  rg->add_option("--intermediate-detuning", inter, "Intermediate detuning in MHz");
  rg->add_option("--two-photon-detuning", two_ph, "Two-photon detuning in MHz");
  rg->add_option("--intermediate-linewidth", gamma_e, "Intermediate-level linewidth in MHz");
  rg->add_option("--dress-rabi", dress_rabi, "Dressing Rabi frequency in MHz");
  rg->add_option("--dress-detuning", dress_det, "Dressing detuning in MHz");

  auto* dy = app.add_subcommand("dynamics", "Few-atom spin dynamics from a scenario file");
  dy->add_option("scenario", scenario_path, "Scenario JSON file")->required()->check(CLI::ExistingFile);

  auto* re = app.add_subcommand("rerun", "Reproduce a run from its manifest");
  re->add_option("manifest", manifest_in, "manifest.json of an earlier run")->required()->check(CLI::ExistingFile);
  re->add_flag("--verify", verify, "Compare output checksums with the manifest");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (re->parsed()) return rerun(manifest_in, verify, g);

    std::string sub;
    json o = json::object();
    if (st->parsed()) {
      sub = "state";
      o = {{"state", state}, {"temperature_K", temperature}, {"polarizability_delta_n", pol_dn},
           {"blackbody_window", bb_window}};
    } else if (c6->parsed()) {
      sub = "c6";
      o = {{"state", state},          {"theta_rad", theta}, {"n_range", parse_n_range(n_range)},
           {"window_GHz", window_ghz}, {"delta_n", delta_n}, {"resonance_guard_MHz", guard_mhz}};
    } else if (c3->parsed()) {
      sub = "c3";
      o = {{"a", state}, {"b", state_b}, {"theta_rad", theta}, {"n_range", parse_n_range(n_range)}};
    } else if (fo->parsed()) {
      sub = "forster";
      o = {{"state", state}, {"window_MHz", window_mhz}, {"delta_n", fo_dn->count() ? delta_n : 4}};
    } else if (sm->parsed()) {
      sub = "starkmap";
      o = {{"state", state},         {"channel", channel},
           {"field_min_Vcm", field_min}, {"field_max_Vcm", field_max},
           {"points", sm_points->count() ? points : 41}, {"stark_delta_n", stark_dn},
           {"r_um", r_um}};
    } else if (sc->parsed()) {
      sub = "scan";
      o = {{"state", state},
           {"partner", partner},
           {"r_min_um", r_min},
           {"r_max_um", r_max},
           {"points", sc_points->count() ? points : 31},
           {"grid", grid},
           {"theta_rad", theta},
           {"field_Vcm", field},
           {"window_GHz", sc_window->count() ? window_ghz : 10.0},
           {"delta_n", sc_dn->count() ? delta_n : 2},
           {"delta_l", delta_l},
           {"conserve_m", conserve_m},
           {"threshold", threshold},
           {"hard_cap", hard_cap}};
    } else if (rg->parsed()) {
      sub = "regimes";
      o = {{"c6_GHz_um6", c6_val},
           {"rabi_MHz", rabi},
           {"r_um", r_um},
           {"linewidth_kHz", linewidth},
           {"rabi_red_MHz", rabi_red},
           {"rabi_blue_MHz", rabi_blue},
           {"intermediate_detuning_MHz", inter},
           {"two_photon_detuning_MHz", two_ph},
           {"intermediate_linewidth_MHz", gamma_e},
           {"dress_rabi_MHz", dress_rabi},
           {"dress_detuning_MHz", dress_det}};
    } else if (dy->parsed()) {
      sub = "dynamics";
      json raw;
      try {
        raw = json::parse(read_file(scenario_path));
      } catch (const nlohmann::json::parse_error& e) {
        throw rydberg::DomainError("scenario '" + scenario_path + "' is not valid JSON: " + e.what());
      }
      o = {{"scenario_file", fs::absolute(scenario_path).string()}, {"scenario", resolve_scenario(raw)}};
    }

    const json config = base_config(sub, o, g);
    const RunResult res = run(config);
    write_manifest(res.manifest, g, config);
    return kOk;
  } catch (const rydberg::IoError& e) {
    std::cerr << "rydcalc: I/O error: " << e.what() << '\n';
    return kIo;
  } catch (const rydberg::DomainError& e) {
    std::cerr << "rydcalc: " << e.what() << '\n';
    return kUsage;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "rydcalc: malformed input: " << e.what() << '\n';
    return kUsage;
  } catch (const rydberg::SolverError& e) {
    std::cerr << "rydcalc: numerical failure: " << e.what() << '\n';
    return kNumeric;
  } catch (const std::exception& e) {
    std::cerr << "rydcalc: " << e.what() << '\n';
    return kNumeric;
  }
}
