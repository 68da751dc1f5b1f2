#include <cmath>
#include <limits>
#include <optional>
#include <set>

#include "app.hpp"
#include "rydberg/analysis.hpp"
#include "rydberg/dynamics.hpp"
#include "rydberg/errors.hpp"

namespace rydcalc {

using namespace rydberg;

namespace {

// Field-by-field checker; every error names the JSON path of the culprit.
class Fields {
 public:
  Fields(const json& node, std::string path) : node_(node), path_(std::move(path)) {
    if (!node_.is_object()) fail("", "must be an object");
  }

  [[noreturn]] void fail(const std::string& key, const std::string& why) const {
    throw DomainError("scenario field '" + join(key) + "' " + why);
  }
  std::string join(const std::string& key) const {
    if (key.empty()) return path_.empty() ? "<root>" : path_;
    return path_.empty() ? key : path_ + "." + key;
  }
  bool has(const std::string& key) const { return node_.contains(key) && !node_.at(key).is_null(); }
  const json& raw(const std::string& key) const {
    if (!has(key)) fail(key, "is required");
    return node_.at(key);
  }

  double number(const std::string& key, std::optional<double> fallback = std::nullopt) const {
    if (!has(key)) {
      if (fallback) return *fallback;
      fail(key, "is required");
    }
    const json& v = node_.at(key);
    if (!v.is_number()) fail(key, "must be a number");
    const double d = v.get<double>();
    if (!std::isfinite(d)) fail(key, "must be finite");
    return d;
  }
  double nonnegative(const std::string& key, double fallback) const {
    const double d = number(key, fallback);
    if (d < 0.0) fail(key, "must be non-negative");
    return d;
  }
  double probability(const std::string& key) const {
    const double d = number(key, 0.0);
    if (d < 0.0 || d > 1.0) fail(key, "must lie in [0, 1]");
    return d;
  }
  long long integer(const std::string& key, std::optional<long long> fallback = std::nullopt) const {
    if (!has(key)) {
      if (fallback) return *fallback;
      fail(key, "is required");
    }
    const json& v = node_.at(key);
    if (!v.is_number_integer()) fail(key, "must be an integer");
    return v.get<long long>();
  }
  std::string text(const std::string& key, std::optional<std::string> fallback = std::nullopt) const {
    if (!has(key)) {
      if (fallback) return *fallback;
      fail(key, "is required");
    }
    const json& v = node_.at(key);
    if (!v.is_string()) fail(key, "must be a string");
    return v.get<std::string>();
  }
  std::string choice(const std::string& key, std::initializer_list<const char*> allowed,
                     std::optional<std::string> fallback = std::nullopt) const {
    const std::string v = text(key, fallback);
    std::string list;
    for (const char* a : allowed) {
      if (v == a) return v;
      list += (list.empty() ? "" : ", ") + std::string(a);
    }
    fail(key, "must be one of " + list);
  }
  Eigen::Vector3d vec3(const std::string& key, const Eigen::Vector3d& fallback) const {
    if (!has(key)) return fallback;
    const json& v = node_.at(key);
    if (!v.is_array() || v.size() != 3) fail(key, "must be an array of three numbers");
    Eigen::Vector3d out;
    for (int i = 0; i < 3; ++i) {
      if (!v[static_cast<std::size_t>(i)].is_number()) fail(key + "[" + std::to_string(i) + "]", "must be a number");
      out[i] = v[static_cast<std::size_t>(i)].get<double>();
    }
    return out;
  }
  Fields child(const std::string& key) const { return Fields(raw(key), join(key)); }

  void only(std::initializer_list<const char*> keys) const {
    const std::set<std::string> allowed(keys.begin(), keys.end());
    for (const auto& [k, v] : node_.items()) {
      if (!allowed.count(k)) fail(k, "is not a recognized field");
    }
  }

 private:
  const json& node_;
  std::string path_;
};

json vec_json(const Eigen::Vector3d& v) { return json::array({v.x(), v.y(), v.z()}); }

json atom_list(const Fields& f, const std::string& key, const json& v, int n_atoms) {
  if (!v.is_array()) f.fail(key, "must be an array of atom indices");
  json out = json::array();
  std::set<long long> seen;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const std::string item = key + "[" + std::to_string(i) + "]";
    if (!v[i].is_number_integer()) f.fail(item, "must be an integer");
    const long long a = v[i].get<long long>();
    if (a < 0 || a >= n_atoms) f.fail(item, "is not an atom index below " + std::to_string(n_atoms));
    if (!seen.insert(a).second) f.fail(item, "repeats atom " + std::to_string(a));
    out.push_back(a);
  }
  return out;
}

std::uint32_t bits_of(const json& list) {
  std::uint32_t b = 0;
  for (const auto& a : list) b |= 1u << a.get<int>();
  return b;
}

// Configuration label with atom 0 first, e.g. "100" = atom 0 up.
std::string config_label(std::uint32_t bits, int n) {
  std::string s;
  for (int i = 0; i < n; ++i) s += (bits >> i) & 1u ? '1' : '0';
  return s;
}

AtomArray build_array(const json& atoms) {
  AtomArray array;
  if (atoms.contains("chain")) {
    const json& c = atoms.at("chain");
    array = AtomArray::chain(c.at("n").get<int>(), c.at("spacing_um").get<double>(),
                             Eigen::Vector3d(c.at("direction")[0].get<double>(), c.at("direction")[1].get<double>(),
                                             c.at("direction")[2].get<double>()));
  } else {
    for (const auto& p : atoms.at("positions_um")) {
      array.positions_um.emplace_back(p[0].get<double>(), p[1].get<double>(), p[2].get<double>());
    }
  }
  return array;
}

}  // namespace

json resolve_scenario(const json& scenario) {
  const Fields root(scenario, "");
  root.only({"name", "model", "atoms", "couplings", "drive", "initial_up", "times", "noise", "shots", "analysis"});
  json out = json::object();
  out["name"] = root.text("name", "scenario");
  const std::string model = root.choice("model", {"ising", "xy"});
  out["model"] = model;

  // atoms
  const Fields atoms = root.child("atoms");
  atoms.only({"chain", "positions_um"});
  json atoms_out = json::object();
  int n_atoms = 0;
  if (atoms.has("chain") == atoms.has("positions_um")) atoms.fail("", "needs exactly one of chain, positions_um");
  if (atoms.has("chain")) {
    const Fields c = atoms.child("chain");
    c.only({"n", "spacing_um", "direction"});
    const long long n = c.integer("n");
    if (n < 1 || n > kMaxAtoms) c.fail("n", "must lie in [1, " + std::to_string(kMaxAtoms) + "]");
    const double spacing = c.number("spacing_um");
    if (!(spacing > 0.0)) c.fail("spacing_um", "must be positive");
    const Eigen::Vector3d dir = c.vec3("direction", Eigen::Vector3d::UnitZ());
    if (dir.norm() == 0.0) c.fail("direction", "must be a nonzero vector");
    atoms_out["chain"] = {{"n", n}, {"spacing_um", spacing}, {"direction", vec_json(dir)}};
    n_atoms = static_cast<int>(n);
  } else {
    const json& list = atoms.raw("positions_um");
    if (!list.is_array() || list.empty() || list.size() > kMaxAtoms) {
      atoms.fail("positions_um", "must hold 1 to " + std::to_string(kMaxAtoms) + " positions");
    }
    json pos = json::array();
    for (std::size_t i = 0; i < list.size(); ++i) {
      const std::string key = "positions_um[" + std::to_string(i) + "]";
      const json& p = list[i];
      if (!p.is_array() || p.size() != 3 || !p[0].is_number() || !p[1].is_number() || !p[2].is_number()) {
        atoms.fail(key, "must be an array of three numbers");
      }
      pos.push_back(json::array({p[0].get<double>(), p[1].get<double>(), p[2].get<double>()}));
    }
    atoms_out["positions_um"] = std::move(pos);
    n_atoms = static_cast<int>(list.size());
  }
  out["atoms"] = atoms_out;
  try {
    build_array(atoms_out).validate();
  } catch (const DomainError& e) {
    throw DomainError(std::string("scenario field 'atoms' ") + e.what());
  }

  // couplings
  const Fields cp = root.child("couplings");
  const std::string source = cp.choice("source", {"analytic", "imported", "pair"});
  json cp_out = json::object();
  cp_out["source"] = source;
  if (source == "analytic") {
    if (model == "ising") {
      cp.only({"source", "c6_GHz_um6", "angular"});
      cp_out["c6_GHz_um6"] = cp.number("c6_GHz_um6");
    } else {
      cp.only({"source", "c3_GHz_um3", "angular"});
      cp_out["c3_GHz_um3"] = cp.number("c3_GHz_um3");
    }
    cp_out["angular"] = cp.choice("angular", {"isotropic", "dipolar"}, "isotropic");
  } else if (source == "imported") {
    cp.only({"source", "matrix_Hz"});
    const json& m = cp.raw("matrix_Hz");
    if (!m.is_array() || static_cast<int>(m.size()) != n_atoms) {
      cp.fail("matrix_Hz", "must be a " + std::to_string(n_atoms) + " x " + std::to_string(n_atoms) + " array");
    }
    json rows = json::array();
    for (int i = 0; i < n_atoms; ++i) {
      const json& row = m[static_cast<std::size_t>(i)];
      if (!row.is_array() || static_cast<int>(row.size()) != n_atoms) {
        cp.fail("matrix_Hz[" + std::to_string(i) + "]", "must have " + std::to_string(n_atoms) + " entries");
      }
      json r = json::array();
      for (int j = 0; j < n_atoms; ++j) {
        const json& v = row[static_cast<std::size_t>(j)];
        const std::string key = "matrix_Hz[" + std::to_string(i) + "][" + std::to_string(j) + "]";
        if (!v.is_number()) cp.fail(key, "must be a number");
        if (i == j && v.get<double>() != 0.0) cp.fail(key, "must be zero (no self-coupling)");
        if (j < i && v.get<double>() != m[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)].get<double>()) {
          cp.fail(key, "breaks the symmetry of the matrix");
        }
        r.push_back(v.get<double>());
      }
      rows.push_back(std::move(r));
    }
    cp_out["matrix_Hz"] = std::move(rows);
  } else {
    cp.only({"source", "state", "partner"});
    const std::string st = cp.text("state");
    try {
      cp_out["state"] = parse_state(st).to_string(true);
    } catch (const DomainError& e) {
      cp.fail("state", e.what());
    }
    if (model == "xy") {
      try {
        cp_out["partner"] = parse_state(cp.text("partner")).to_string(true);
      } catch (const DomainError& e) {
        cp.fail("partner", e.what());
      }
    } else if (cp.has("partner")) {
      cp.fail("partner", "applies to the xy model only");
    }
  }
  out["couplings"] = cp_out;

  // drive
  if (model == "ising") {
    const Fields d = root.child("drive");
    d.only({"rabi_Hz", "detuning_Hz", "phase_mode", "wavevector_per_um", "phase_realizations"});
    json d_out = json::object();
    if (!d.has("rabi_Hz")) d.fail("rabi_Hz", "is required");
    d_out["rabi_Hz"] = d.nonnegative("rabi_Hz", 0.0);
    d_out["detuning_Hz"] = d.number("detuning_Hz", 0.0);
    d_out["phase_mode"] = d.choice("phase_mode", {"off", "fixed", "random"}, "off");
    d_out["wavevector_per_um"] = vec_json(d.vec3("wavevector_per_um", Eigen::Vector3d::Zero()));
    const long long reals = d.integer("phase_realizations", 16);
    if (reals < 1) d.fail("phase_realizations", "must be at least 1");
    d_out["phase_realizations"] = reals;
    out["drive"] = d_out;
  } else if (root.has("drive")) {
    root.fail("drive", "applies to the ising model only");
  } else {
    out["drive"] = nullptr;
  }

  out["initial_up"] = root.has("initial_up") ? atom_list(root, "initial_up", root.raw("initial_up"), n_atoms) : json::array();

  // times
  const Fields t = root.child("times");
  t.only({"start_s", "stop_s", "points"});
  const double start = t.nonnegative("start_s", 0.0);
  const double stop = t.number("stop_s");
  if (!(stop > start)) t.fail("stop_s", "must exceed start_s");
  const long long points = t.integer("points", 201);
  if (points < 2 || points > 200000) t.fail("points", "must lie in [2, 200000]");
  out["times"] = {{"start_s", start}, {"stop_s", stop}, {"points", points}};

  // noise: every channel off unless given
  json n_out = json::object();
  if (root.has("noise")) {
    const Fields n = root.child("noise");
    n.only({"damping_Hz", "dephasing_Hz", "prep_error", "loss", "false_loss", "false_presence"});
    n_out["damping_Hz"] = n.nonnegative("damping_Hz", 0.0);
    n_out["dephasing_Hz"] = n.nonnegative("dephasing_Hz", 0.0);
    for (const char* k : {"prep_error", "loss", "false_loss", "false_presence"}) n_out[k] = n.probability(k);
  } else {
    n_out = {{"damping_Hz", 0.0}, {"dephasing_Hz", 0.0}, {"prep_error", 0.0},
             {"loss", 0.0},       {"false_loss", 0.0},   {"false_presence", 0.0}};
  }
  if ((n_out["damping_Hz"].get<double>() > 0.0 || n_out["dephasing_Hz"].get<double>() > 0.0) && n_atoms > 5) {
    root.fail("noise", "damping and dephasing are supported for up to 5 atoms");
  }
  out["noise"] = n_out;

  const long long shots = root.integer("shots", 0);
  if (shots < 0) root.fail("shots", "must be non-negative");
  out["shots"] = shots;

  json a_out = {{"collective_frequency", false}, {"suppression", nullptr}, {"autocorrelation", nullptr}};
  if (root.has("analysis")) {
    const Fields a = root.child("analysis");
    a.only({"collective_frequency", "suppression", "autocorrelation"});
    if (a.has("collective_frequency")) {
      if (!a.raw("collective_frequency").is_boolean()) a.fail("collective_frequency", "must be true or false");
      a_out["collective_frequency"] = a.raw("collective_frequency").get<bool>();
      if (a_out["collective_frequency"].get<bool>() && model != "ising") {
        a.fail("collective_frequency", "needs the ising model");
      }
    }
    if (a.has("suppression")) {
      const Fields s = a.child("suppression");
      s.only({"target_up", "reference_up"});
      json refs = json::array();
      const json& r = s.raw("reference_up");
      if (!r.is_array() || r.empty()) s.fail("reference_up", "must be a non-empty array of atom lists");
      for (std::size_t i = 0; i < r.size(); ++i) {
        const std::string key = "reference_up[" + std::to_string(i) + "]";
        refs.push_back(atom_list(s, key, r[i], n_atoms));
      }
      a_out["suppression"] = {{"target_up", atom_list(s, "target_up", s.raw("target_up"), n_atoms)}, {"reference_up", refs}};
    }
    if (a.has("autocorrelation")) {
      const Fields ac = a.child("autocorrelation");
      ac.only({"up", "rise"});
      a_out["autocorrelation"] = {{"up", atom_list(ac, "up", ac.raw("up"), n_atoms)}, {"rise", ac.nonnegative("rise", 0.5)}};
    }
  }
  out["analysis"] = a_out;
  return out;
}

Report cmd_dynamics(const json& options, Context& ctx) {
  // Accept both raw scenarios and resolved ones; resolving is idempotent.
  const json sc = resolve_scenario(options.at("scenario"));
  const bool ising = sc["model"] == "ising";
  const CouplingModel model = ising ? CouplingModel::IsingVdW : CouplingModel::XYExchange;

  SpinSystem sys;
  sys.array = build_array(sc["atoms"]);
  const int n = sys.array.size();
  const json& cp = sc["couplings"];
  const std::string source = cp["source"];
  if (source == "analytic") {
    const double c = ising ? cp["c6_GHz_um6"].get<double>() * 1e9 : cp["c3_GHz_um3"].get<double>() * 1e9;
    const bool dipolar = cp["angular"] == "dipolar";
    sys.couplings = CouplingMatrix::analytic(sys.array, model, [&](double theta) {
      return dipolar ? c * (1.0 - 3.0 * std::cos(theta) * std::cos(theta)) : c;
    });
  } else if (source == "imported") {
    Eigen::MatrixXd m(n, n);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) m(i, j) = cp["matrix_Hz"][static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
    }
    sys.couplings = CouplingMatrix::imported(model, m);
  } else {
    const StateLabel st = parse_state(cp["state"].get<std::string>());
    std::optional<StateLabel> partner;
    if (!ising) partner = parse_state(cp["partner"].get<std::string>());
    sys.couplings = pair_couplings(ctx.solver(), sys.array, model, st, partner);
  }
  if (ising) {
    const json& d = sc["drive"];
    sys.drive.rabi_hz = d["rabi_Hz"];
    sys.drive.detuning_hz = d["detuning_Hz"];
    const std::string mode = d["phase_mode"];
    sys.drive.phase_mode = mode == "fixed" ? PhaseMode::Fixed : mode == "random" ? PhaseMode::RandomPerShot : PhaseMode::Off;
    sys.drive.wavevector_per_um = Eigen::Vector3d(d["wavevector_per_um"][0].get<double>(),
                                                  d["wavevector_per_um"][1].get<double>(),
                                                  d["wavevector_per_um"][2].get<double>());
    sys.drive.phase_realizations = d["phase_realizations"];
  }
  NoiseParams noise = NoiseParams::none();
  const json& nz = sc["noise"];
  noise.damping_hz = nz["damping_Hz"];
  noise.dephasing_hz = nz["dephasing_Hz"];
  noise.prep_error = nz["prep_error"];
  noise.loss = nz["loss"];
  noise.false_loss = nz["false_loss"];
  noise.false_presence = nz["false_presence"];

  const auto times = linspace(sc["times"]["start_s"], sc["times"]["stop_s"], sc["times"]["points"].get<int>());
  const std::uint32_t initial = bits_of(sc["initial_up"]);
  const EvolutionResult res = simulate(sys, initial, times, noise, ctx.seed());

  Report r;
  r.name = "dynamics";
  const std::uint32_t dim = 1u << n;
  const bool full_tables = n <= 6;
  if (full_tables) {
    for (const char* which : {"populations", "detected"}) {
      const Eigen::MatrixXd& m = std::string(which) == "populations" ? res.populations : res.detected;
      Table t;
      t.columns.push_back("time_us");
      for (std::uint32_t b = 0; b < dim; ++b) t.columns.push_back("P_" + config_label(b, n) + "_frac");
      for (std::size_t k = 0; k < times.size(); ++k) {
        std::vector<Cell> row{times[k] * 1e6};
        for (std::uint32_t b = 0; b < dim; ++b) row.emplace_back(m(static_cast<Eigen::Index>(k), b));
        t.add(std::move(row));
      }
      r.tables.emplace_back(which, std::move(t));
    }
  }
  {
    Table t;
    t.columns.push_back("time_us");
    for (int i = 0; i < n; ++i) t.columns.push_back("up_" + std::to_string(i) + "_frac");
    t.columns.push_back("excitation_mean_num");
    t.columns.push_back("excitation_variance_num");
    const Eigen::VectorXd mean = res.excitation_mean(), var = res.excitation_variance();
    for (std::size_t k = 0; k < times.size(); ++k) {
      std::vector<Cell> row{times[k] * 1e6};
      for (int i = 0; i < n; ++i) {
        double p = 0.0;
        for (std::uint32_t b = 0; b < dim; ++b) {
          if ((b >> i) & 1u) p += res.populations(static_cast<Eigen::Index>(k), b);
        }
        row.emplace_back(p);
      }
      row.emplace_back(mean[static_cast<Eigen::Index>(k)]);
      row.emplace_back(var[static_cast<Eigen::Index>(k)]);
      t.add(std::move(row));
    }
    r.tables.emplace_back("sites", std::move(t));
  }
  const int shots = sc["shots"].get<int>();
  if (shots > 0 && full_tables) {
    const ShotTable draws = sample_measurements(res, shots, noise, ctx.seed());
    Table t;
    t.columns.push_back("time_us");
    for (std::uint32_t b = 0; b < dim; ++b) t.columns.push_back("F_" + config_label(b, n) + "_frac");
    for (std::size_t k = 0; k < times.size(); ++k) {
      std::vector<Cell> row{times[k] * 1e6};
      for (std::uint32_t b = 0; b < dim; ++b) row.emplace_back(draws.frequency(k, b));
      t.add(std::move(row));
    }
    r.tables.emplace_back("shots", std::move(t));
  }

  json& s = r.summary;
  s["scenario"] = sc["name"];
  s["model"] = sc["model"];
  s["n_atoms"] = n;
  s["initial"] = config_label(initial, n);
  json m = json::array();
  for (int i = 0; i < n; ++i) {
    json row = json::array();
    for (int j = 0; j < n; ++j) row.push_back(sys.couplings.hz(i, j));
    m.push_back(std::move(row));
  }
  s["couplings_Hz"] = std::move(m);
  s["norm_deviation"] = res.norm_deviation;
  s["prep_weight_dropped_frac"] = res.prep_weight_dropped;
  if (full_tables) {
    json peaks = json::object();
    for (std::uint32_t b = 0; b < dim; ++b) peaks[config_label(b, n)] = res.series(b).maxCoeff();
    s["peak_populations_frac"] = std::move(peaks);
  }

  const json& an = sc["analysis"];
  const double dt = times[1] - times[0];
  if (an["collective_frequency"].get<bool>()) {
    const double rabi = sys.drive.rabi_hz;
    if (!(rabi > 0.0)) throw DomainError("scenario field 'analysis.collective_frequency' needs drive.rabi_Hz > 0");
    const OscillationFit fit = fit_oscillation(res.series(0), dt, 0.25 * rabi, 2.0 * std::sqrt(n) * rabi);
    s["collective_frequency"] = {{"frequency_Hz", fit.frequency_hz},
                                 {"ratio_to_single_atom_num", fit.frequency_hz / rabi},
                                 {"sqrt_n_num", std::sqrt(static_cast<double>(n))},
                                 {"fit_rms_residual_frac", fit.rms_residual}};
  }
  if (!an["suppression"].is_null()) {
    const double target = res.series(bits_of(an["suppression"]["target_up"])).maxCoeff();
    double ref = std::numeric_limits<double>::infinity();
    json refs = json::array();
    for (const auto& list : an["suppression"]["reference_up"]) {
      const double p = res.series(bits_of(list)).maxCoeff();
      ref = std::min(ref, p);
      refs.push_back(p);
    }
    s["suppression"] = {{"target", config_label(bits_of(an["suppression"]["target_up"]), n)},
                        {"target_peak_frac", target},
                        {"reference_peaks_frac", refs},
                        {"ratio_num", target / ref}};
  }
  if (!an["autocorrelation"].is_null()) {
    const std::uint32_t bits = bits_of(an["autocorrelation"]["up"]);
    const auto ac = autocorrelation(res.series(bits));
    const RevivalSignature sig = revival_signature(ac, an["autocorrelation"]["rise"].get<double>());
    Table t;
    t.columns = {"lag_us", "autocorrelation_frac"};
    for (std::size_t k = 0; k < ac.size(); ++k) t.add({static_cast<double>(k) * dt * 1e6, ac[k]});
    r.tables.emplace_back("autocorrelation", std::move(t));
    s["autocorrelation"] = {{"configuration", config_label(bits, n)},
                            {"revival_present", sig.present},
                            {"collapse_lag_us", sig.collapse_lag * dt * 1e6},
                            {"collapse_value_frac", sig.collapse_value},
                            {"revival_lag_us", sig.revival_lag * dt * 1e6},
                            {"revival_value_frac", sig.revival_value}};
  }
  return r;
}

}  // namespace rydcalc
