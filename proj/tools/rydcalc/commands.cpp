#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>

#include "app.hpp"
#include "rydberg/analysis.hpp"
#include "rydberg/dynamics.hpp"
#include "rydberg/errors.hpp"
#include "rydberg/pair.hpp"
#include "rydberg/properties.hpp"
#include "rydberg/regimes.hpp"
#include "rydberg/stark.hpp"

namespace rydcalc {

using namespace rydberg;

namespace {

template <class T>
T opt(const json& options, const char* key) {
  if (!options.contains(key)) throw DomainError(std::string("missing option '") + key + "'");
  try {
    return options.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw DomainError(std::string("option '") + key + "' has the wrong type");
  }
}

// Same level with principal number n.
StateLabel with_n(const StateLabel& s, int n) { return StateLabel::from_twice(s.species, n, s.l, s.two_j, s.two_mj); }

std::vector<int> n_values(const json& options, int fallback) {
  if (options.at("n_range").is_null()) return {fallback};
  const auto range = options.at("n_range");
  const int a = range.at("min").get<int>(), b = range.at("max").get<int>(), step = range.at("step").get<int>();
  if (step < 1 || b < a) throw DomainError("n_range must read min:max[:step] with min <= max and step >= 1");
  std::vector<int> out;
  for (int n = a; n <= b; n += step) out.push_back(n);
  return out;
}

double mhz(double hz) { return hz * 1e-6; }

}  // namespace

Report cmd_state(const json& options, Context& ctx) {
  const StateLabel st = parse_state(opt<std::string>(options, "state"));
  const auto& table = ctx.table();
  table.validate(st);
  const double temperature = opt<double>(options, "temperature_K");

  const double energy = table.energy(st);
  const double spacing = table.energy(with_n(st, st.n + 1)) - energy;
  const double radius = mean_radius_nm(ctx.solver(), st);
  const Lifetime life = lifetime(ctx.solver(), st, temperature, opt<int>(options, "blackbody_window"));
  const Polarizability alpha = polarizability(ctx.solver(), st, opt<int>(options, "polarizability_delta_n"));

  Report r;
  r.name = "state";
  Table t;
  t.columns = {"state", "n_star_num", "energy_GHz", "spacing_GHz", "mean_radius_nm",
               "temperature_K", "lifetime_us", "polarizability_GHz_per_Vcm2"};
  t.add({st.to_string(true), table.effective_n(st), energy * 1e-9, spacing * 1e-9, radius, temperature,
         life.lifetime_us, alpha.alpha_ghz});
  r.tables.emplace_back("state", std::move(t));

  json& s = r.summary;
  s["state"] = st.to_string(true);
  s["species"] = std::string(to_string(st.species));
  s["n"] = st.n;
  s["l"] = st.l;
  s["j"] = st.j();
  s["mj"] = st.mj();
  s["n_star_num"] = table.effective_n(st);
  s["energy_GHz"] = energy * 1e-9;
  s["spacing_GHz"] = spacing * 1e-9;
  s["mean_radius_nm"] = radius;
  s["temperature_K"] = temperature;
  s["lifetime_us"] = life.lifetime_us;
  s["radiative_rate_per_s"] = life.radiative_rate;
  s["blackbody_rate_per_s"] = life.blackbody_rate;
  s["polarizability_GHz_per_Vcm2"] = alpha.alpha_ghz;
  s["polarizability_converged"] = alpha.converged;
  s["polarizability_relative_change_frac"] = alpha.relative_change;
  return r;
}

Report cmd_c6(const json& options, Context& ctx) {
  const StateLabel st = parse_state(opt<std::string>(options, "state"));
  const double theta = opt<double>(options, "theta_rad");
  C6Options c6o;
  c6o.window_hz = opt<double>(options, "window_GHz") * 1e9;
  c6o.delta_n = opt<int>(options, "delta_n");
  c6o.resonance_guard_hz = opt<double>(options, "resonance_guard_MHz") * 1e6;
  const auto ns = n_values(options, st.n);
  for (int n : ns) ctx.table().validate(with_n(st, n));

  std::vector<double> c6(ns.size());
  parallel_for(ns.size(), ctx.jobs(),
               [&](std::size_t i) { c6[i] = c6_perturbative(ctx.solver(), with_n(st, ns[i]), theta, c6o); });

  Report r;
  r.name = "c6";
  Table t;
  t.columns = {"state", "n_num", "n_star_num", "theta_rad", "c6_GHz_um6"};
  std::vector<double> nd, nstar;
  for (std::size_t i = 0; i < ns.size(); ++i) {
    const StateLabel s = with_n(st, ns[i]);
    nd.push_back(ns[i]);
    nstar.push_back(ctx.table().effective_n(s));
    t.add({s.to_string(true), static_cast<long long>(ns[i]), nstar.back(), theta, c6[i]});
  }
  r.tables.emplace_back("c6", std::move(t));
  r.summary["state"] = st.to_string(true);
  r.summary["theta_rad"] = theta;
  r.summary["points"] = ns.size();
  if (ns.size() >= 2) {
    r.summary["slope_vs_n_star"] = loglog_slope(nstar, c6);
    r.summary["slope_vs_n"] = loglog_slope(nd, c6);
  } else {
    r.summary["c6_GHz_um6"] = c6.front();
  }
  return r;
}

Report cmd_c3(const json& options, Context& ctx) {
  const StateLabel a = parse_state(opt<std::string>(options, "a"));
  const StateLabel b = parse_state(opt<std::string>(options, "b"));
  if (a.species != b.species) throw DomainError("c3: both states must belong to the same species");
  const double theta = opt<double>(options, "theta_rad");
  const auto ns = n_values(options, a.n);
  const int offset = b.n - a.n;

  Report r;
  r.name = "c3";
  Table t;
  t.columns = {"a", "b", "n_num", "n_star_num", "theta_rad", "c3_GHz_um3"};
  std::vector<double> nd, nstar, c3;
  for (int n : ns) {
    const StateLabel sa = with_n(a, n), sb = with_n(b, n + offset);
    ctx.table().validate(sa);
    ctx.table().validate(sb);
    // exchange |a b> -> |b a>
    const double c = c3_coefficient(ctx.solver(), PairState(sa, sb), PairState(sb, sa), theta);
    nd.push_back(n);
    nstar.push_back(ctx.table().effective_n(sa));
    c3.push_back(c);
    t.add({sa.to_string(true), sb.to_string(true), static_cast<long long>(n), nstar.back(), theta, c});
  }
  r.tables.emplace_back("c3", std::move(t));
  r.summary["a"] = a.to_string(true);
  r.summary["b"] = b.to_string(true);
  r.summary["theta_rad"] = theta;
  r.summary["points"] = ns.size();
  const bool all_nonzero = std::all_of(c3.begin(), c3.end(), [](double c) { return c != 0.0; });
  if (!all_nonzero) r.summary["note"] = "dipole-forbidden exchange: C3 vanishes";
  if (ns.size() >= 2 && all_nonzero) {
    r.summary["slope_vs_n"] = loglog_slope(nd, c3);
    r.summary["slope_vs_n_star"] = loglog_slope(nstar, c3);
  } else if (ns.size() == 1) {
    r.summary["c3_GHz_um3"] = c3.front();
  }
  return r;
}

Report cmd_forster(const json& options, Context& ctx) {
  const StateLabel st = parse_state(opt<std::string>(options, "state"));
  const auto channels =
      forster_search(ctx.solver(), st, opt<double>(options, "window_MHz") * 1e6, opt<int>(options, "delta_n"));

  Report r;
  r.name = "forster";
  Table t;
  t.columns = {"channel", "defect_MHz", "c3_GHz_um3", "crossover_radius_um"};
  json list = json::array();
  for (const auto& ch : channels) {
    const CrossoverRadius rc = crossover_radius(ch);
    t.add({ch.channel.to_string(), mhz(ch.defect_hz), ch.c3_ghz_um3, rc.r_um});
    json j = json::object();
    j["channel"] = ch.channel.to_string();
    j["defect_MHz"] = mhz(ch.defect_hz);
    j["c3_GHz_um3"] = ch.c3_ghz_um3;
    j["crossover_radius_um"] = std::isfinite(rc.r_um) ? json(rc.r_um) : json(nullptr);
    j["resonant"] = rc.resonant;
    list.push_back(std::move(j));
  }
  r.tables.emplace_back("forster", std::move(t));
  r.summary["state"] = st.to_string(true);
  r.summary["window_MHz"] = opt<double>(options, "window_MHz");
  r.summary["channels"] = std::move(list);
  return r;
}

namespace {

// "Rb:61P1/2+Rb:57F5/2" -> the matching channel from forster_search, which
// fixes m_j. Throws DomainError when the pair is not a dipole channel.
ForsterChannel find_channel(const RadialSolver& solver, const StateLabel& st, const std::string& spec, int delta_n) {
  const auto plus = spec.find('+');
  if (plus == std::string::npos) throw DomainError("channel '" + spec + "' must read A+B");
  const StateLabel b = parse_state(spec.substr(0, plus)), c = parse_state(spec.substr(plus + 1));
  const auto& table = solver.table();
  table.validate(b);
  table.validate(c);
  const double defect = table.energy(b) + table.energy(c) - 2.0 * table.energy(st);
  const LevelKey kb(b), kc(c);
  for (const auto& ch : forster_search(solver, st, std::abs(defect) * 1.001 + 1e3, delta_n)) {
    const LevelKey k1(ch.channel.first), k2(ch.channel.second);
    if ((k1 == kb && k2 == kc) || (k1 == kc && k2 == kb)) return ch;
  }
  throw DomainError("unknown channel '" + spec + "': not dipole-coupled to " + st.to_string(false));
}

}  // namespace

Report cmd_starkmap(const json& options, Context& ctx) {
  const StateLabel st = parse_state(opt<std::string>(options, "state"));
  const int stark_dn = opt<int>(options, "stark_delta_n");
  const ForsterChannel ch = find_channel(ctx.solver(), st, opt<std::string>(options, "channel"), 4);

  ResonanceOptions ro;
  ro.field_min_v_cm = opt<double>(options, "field_min_Vcm");
  ro.field_max_v_cm = opt<double>(options, "field_max_Vcm");
  ro.scan_points = opt<int>(options, "points");
  ro.stark_delta_n = stark_dn;
  if (ro.scan_points < 2 || !(ro.field_max_v_cm > ro.field_min_v_cm) || ro.field_min_v_cm < 0.0) {
    throw DomainError("starkmap: need points >= 2 and 0 <= field_min_Vcm < field_max_Vcm");
  }
  const auto fields = linspace(ro.field_min_v_cm, ro.field_max_v_cm, ro.scan_points);
  std::vector<double> defects(fields.size());
  parallel_for(fields.size(), ctx.jobs(), [&](std::size_t i) {
    defects[i] = channel_defect(ctx.solver(), st, ch.channel, fields[i], stark_dn);
  });
  const double r_um = opt<double>(options, "r_um");
  const ForsterResonance res = stark_tune_resonance(ctx.solver(), st, ch.channel, r_um, ro);

  Report r;
  r.name = "starkmap";
  Table t;
  t.columns = {"E_Vcm", "defect_MHz"};
  for (std::size_t i = 0; i < fields.size(); ++i) t.add({fields[i], mhz(defects[i])});
  r.tables.emplace_back("starkmap", std::move(t));
  json& s = r.summary;
  s["state"] = st.to_string(true);
  s["channel"] = ch.channel.to_string();
  s["c3_GHz_um3"] = ch.c3_ghz_um3;
  s["defect_zero_field_MHz"] = mhz(res.defect_zero_field_hz);
  s["resonance_found"] = res.found;
  s["e_star_Vcm"] = res.found ? json(res.field_v_cm) : json(nullptr);
  if (res.found) {
    s["defect_at_e_star_MHz"] = mhz(res.defect_at_field_hz);
    s["r_um"] = r_um;
    s["coupling_MHz"] = mhz(res.coupling_hz);
    s["gap_MHz"] = mhz(res.gap_hz);
    s["weight_lower_frac"] = res.weight_lower;
    s["weight_upper_frac"] = res.weight_upper;
  }
  return r;
}

Report cmd_scan(const json& options, Context& ctx) {
  const StateLabel a = parse_state(opt<std::string>(options, "state"));
  const std::string partner_spec = opt<std::string>(options, "partner");
  const StateLabel b = partner_spec.empty() ? a : parse_state(partner_spec);
  PairBasisOptions bo;
  bo.window_hz = opt<double>(options, "window_GHz") * 1e9;
  bo.delta_n = opt<int>(options, "delta_n");
  bo.delta_l = opt<int>(options, "delta_l");
  bo.conserve_m = opt<bool>(options, "conserve_m");
  bo.hard_cap = opt<std::size_t>(options, "hard_cap");
  const double theta = opt<double>(options, "theta_rad");
  const double field = opt<double>(options, "field_Vcm");
  const double threshold = opt<double>(options, "threshold");
  const double r_min = opt<double>(options, "r_min_um"), r_max = opt<double>(options, "r_max_um");
  const int points = opt<int>(options, "points");
  const bool log_grid = opt<std::string>(options, "grid") == "log";
  if (points < 1 || !(r_min > 0.0) || r_max < r_min) throw DomainError("scan: need points >= 1 and 0 < r_min_um <= r_max_um");
  if (bo.conserve_m && theta != 0.0) throw DomainError("scan: conserve_m requires theta_rad = 0");

  const PairBasis basis = build_pair_basis(ctx.table(), PairState(a, b), bo);
  std::vector<double> rs;
  for (int i = 0; i < points; ++i) {
    const double u = points == 1 ? 0.0 : static_cast<double>(i) / (points - 1);
    rs.push_back(log_grid ? r_min * std::pow(r_max / r_min, u) : r_min + (r_max - r_min) * u);
  }
  std::vector<InteractionSpectrum> spectra(rs.size());
  parallel_for(rs.size(), ctx.jobs(), [&](std::size_t i) {
    GeometryConfig g;
    g.r_um = rs[i];
    g.theta = theta;
    g.fields.electric_v_cm = field;
    spectra[i] = diagonalize(ctx.solver(), basis, g);
  });

  Report r;
  r.name = "scan";
  Table t, branch;
  t.columns = {"R_um", "theta_rad", "E_Vcm", "eigenvalue_MHz", "overlap_frac", "weight_frac"};
  branch.columns = {"R_um", "eigenvalue_MHz", "overlap_frac"};
  std::vector<double> br, be;
  for (std::size_t i = 0; i < rs.size(); ++i) {
    const auto& sp = spectra[i];
    for (Eigen::Index k = 0; k < sp.eigenvalues.size(); ++k) {
      if (std::max(sp.overlaps[k], sp.weights[k]) < threshold) continue;
      t.add({rs[i], theta, field, mhz(sp.eigenvalues[k]), sp.overlaps[k], sp.weights[k]});
    }
    const auto k = sp.target_branch();
    branch.add({rs[i], mhz(sp.eigenvalues[k]), sp.overlaps[k]});
    br.push_back(rs[i]);
    be.push_back(sp.eigenvalues[k]);
  }
  r.tables.emplace_back("scan", std::move(t));
  r.tables.emplace_back("branch", std::move(branch));
  json& s = r.summary;
  s["target"] = basis.target.to_string();
  s["basis_size"] = basis.size();
  s["theta_rad"] = theta;
  s["E_Vcm"] = field;
  s["threshold_frac"] = threshold;
  const bool fit = rs.size() >= 2 && rs.front() != rs.back() &&
                   std::all_of(be.begin(), be.end(), [](double e) { return e != 0.0; });
  s["branch_slope"] = fit ? json(loglog_slope(br, be)) : json(nullptr);
  return r;
}

Report cmd_regimes(const json& options, Context&) {
  const double c6 = opt<double>(options, "c6_GHz_um6") * 1e9;
  const double rabi = opt<double>(options, "rabi_MHz") * 1e6;
  const double r_um = opt<double>(options, "r_um");
  const double linewidth = opt<double>(options, "linewidth_kHz") * 1e3;

  TwoPhotonDrive d;
  d.rabi_red_hz = opt<double>(options, "rabi_red_MHz") * 1e6;
  d.rabi_blue_hz = opt<double>(options, "rabi_blue_MHz") * 1e6;
  d.detuning_hz = opt<double>(options, "intermediate_detuning_MHz") * 1e6;
  d.two_photon_detuning_hz = opt<double>(options, "two_photon_detuning_MHz") * 1e6;
  d.linewidth_hz = opt<double>(options, "intermediate_linewidth_MHz") * 1e6;
  DressingParams dp;
  dp.rabi_hz = opt<double>(options, "dress_rabi_MHz") * 1e6;
  dp.detuning_dress_hz = opt<double>(options, "dress_detuning_MHz") * 1e6;

  Report r;
  r.name = "regimes";
  // one wide row: every column carries its unit
  Table t;
  std::vector<Cell> values;
  json& s = r.summary;
  auto row = [&](const std::string& q, double v, const std::string& unit) {
    t.columns.push_back(q + "_" + unit);
    values.emplace_back(v);
    s[q + "_" + unit] = std::isfinite(v) ? json(v) : json(nullptr);
  };
  const double shift = c6 / std::pow(r_um, 6);
  row("blockade_radius", blockade_radius(std::abs(c6), rabi), "um");
  row("vdw_shift", mhz(shift), "MHz");
  row("shift_over_rabi", std::abs(shift) / rabi, "num");
  const bool resolved = blockade_resolved(shift, linewidth);
  t.columns.push_back("blockade_resolved_num");
  values.emplace_back(static_cast<long long>(resolved));
  s["blockade_resolved"] = resolved;

  const bool two_photon = d.rabi_red_hz > 0.0 && d.rabi_blue_hz > 0.0 && d.detuning_hz != 0.0;
  if (two_photon) {
    const EffectiveDrive eff = effective_two_photon(d);
    row("effective_rabi", mhz(eff.rabi_hz), "MHz");
    row("effective_detuning", mhz(eff.detuning_hz), "MHz");
    row("detuning_ratio", d.detuning_ratio(), "num");
    row("scattering_rate", scattering_rate(d), "Hz");
    s["two_photon_warning"] = eff.warning;
  }
  if (dp.rabi_hz > 0.0 && dp.detuning_dress_hz != 0.0) {
    const DressedInteraction di = dressed_interaction(dp);
    row("dressed_j_formula", mhz(di.j_formula_hz), "MHz");
    row("dressed_j_exact", mhz(di.j_oracle_hz), "MHz");
    row("dressed_j_reconciled", mhz(di.j_reconciled_hz), "MHz");
    s["dressed_consistent"] = di.consistent;
  }
  t.add(std::move(values));
  r.tables.emplace_back("regimes", std::move(t));
  return r;
}

Report dispatch(const std::string& subcommand, const json& options, Context& ctx) {
  if (subcommand == "state") return cmd_state(options, ctx);
  if (subcommand == "c6") return cmd_c6(options, ctx);
  if (subcommand == "c3") return cmd_c3(options, ctx);
  if (subcommand == "forster") return cmd_forster(options, ctx);
  if (subcommand == "starkmap") return cmd_starkmap(options, ctx);
  if (subcommand == "scan") return cmd_scan(options, ctx);
  if (subcommand == "regimes") return cmd_regimes(options, ctx);
  if (subcommand == "dynamics") return cmd_dynamics(options, ctx);
  throw DomainError("unknown subcommand '" + subcommand + "'");
}

}  // namespace rydcalc
