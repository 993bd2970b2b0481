#include "tracelab/harness.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "tracelab/error.hpp"
#include "tracelab/parallel.hpp"

namespace tracelab {

using json = nlohmann::json;

namespace {

[[noreturn]] void bad(const std::string& path, const std::string& msg) {
  fail(ErrorCode::ConfigError, (path.empty() ? "/" : path) + ": " + msg);
}

void allow_keys(const json& obj, const std::string& path, std::initializer_list<const char*> keys) {
  if (!obj.is_object()) bad(path, "expected an object");
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    if (std::none_of(keys.begin(), keys.end(), [&](const char* k) { return it.key() == k; })) {
      bad(path + "/" + it.key(), "unknown field");
    }
  }
}

double number(const json& j, const std::string& path) {
  if (!j.is_number()) bad(path, "expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) bad(path, "must be finite");
  return v;
}

double positive(const json& j, const std::string& path) {
  const double v = number(j, path);
  if (v <= 0.0) bad(path, "must be positive");
  return v;
}

std::vector<double> numbers(const json& j, const std::string& path) {
  if (!j.is_array()) bad(path, "expected an array of numbers");
  std::vector<double> out;
  for (std::size_t i = 0; i < j.size(); ++i) out.push_back(number(j[i], path + "/" + std::to_string(i)));
  return out;
}

int integer(const json& j, const std::string& path, int lo) {
  if (!j.is_number_integer()) bad(path, "expected an integer");
  const long v = j.get<long>();
  if (v < lo) bad(path, "must be >= " + std::to_string(lo));
  return static_cast<int>(v);
}

const json& field(const json& obj, const char* key, const std::string& path) {
  if (!obj.contains(key)) bad(path + "/" + key, "required field missing");
  return obj.at(key);
}

Vec to_vec(const std::vector<double>& v) { return Eigen::Map<const Vec>(v.data(), static_cast<Eigen::Index>(v.size())); }

SystemConfig parse_system(const json& j) {
  const std::string p = "/system";
  allow_keys(j, p, {"type", "w", "n", "mu", "builtin", "a", "coeffs", "box"});
  const json& type = field(j, "type", p);
  if (!type.is_string()) bad(p + "/type", "expected a string");
  SystemConfig s;
  const std::string t = type.get<std::string>();
  if (j.contains("box")) s.box = positive(j["box"], p + "/box");
  if (t == "quadratic") {
    s.type = SystemType::Quadratic;
    s.w = numbers(field(j, "w", p), p + "/w");
    if (s.w.empty()) bad(p + "/w", "must not be empty");
    for (std::size_t i = 0; i < s.w.size(); ++i) {
      if (s.w[i] <= 0.0) bad(p + "/w/" + std::to_string(i), "frequencies must be positive");
    }
    s.n = static_cast<int>(s.w.size());
  } else if (t == "torus") {
    s.type = SystemType::Torus;
    s.n = integer(field(j, "n", p), p + "/n", 1);
    if (j.contains("mu")) {
      s.mu = numbers(j["mu"], p + "/mu");
      if (static_cast<int>(s.mu.size()) != s.n) bad(p + "/mu", "must have n entries");
    }
  } else if (t == "action-angle") {
    s.type = SystemType::ActionAngle;
    if (j.contains("builtin")) {
      if (!j["builtin"].is_string()) bad(p + "/builtin", "expected a string");
      s.builtin = j["builtin"].get<std::string>();
    }
    if (s.builtin == "flat") {
      s.n = integer(field(j, "n", p), p + "/n", 1);
    } else if (s.builtin == "linear") {
      s.linear = numbers(field(j, "a", p), p + "/a");
      if (s.linear.empty()) bad(p + "/a", "must not be empty");
      s.n = static_cast<int>(s.linear.size());
    } else if (s.builtin == "polynomial") {
      const std::string cp = p + "/coeffs";
      const json& c = field(j, "coeffs", p);
      allow_keys(c, cp, {"linear", "quadratic", "quartic_diag", "quartic_radial"});
      const json& q = field(c, "quadratic", cp);
      if (!q.is_array() || q.empty()) bad(cp + "/quadratic", "expected a square matrix");
      s.n = static_cast<int>(q.size());
      s.coeffs.quadratic = Mat(s.n, s.n);
      for (int r = 0; r < s.n; ++r) {
        const auto row = numbers(q[static_cast<std::size_t>(r)], cp + "/quadratic/" + std::to_string(r));
        if (static_cast<int>(row.size()) != s.n) bad(cp + "/quadratic/" + std::to_string(r), "row length must equal n");
        for (int k = 0; k < s.n; ++k) s.coeffs.quadratic(r, k) = row[static_cast<std::size_t>(k)];
      }
      if ((s.coeffs.quadratic - s.coeffs.quadratic.transpose()).norm() > 1e-12 * std::max(1.0, s.coeffs.quadratic.norm())) {
        bad(cp + "/quadratic", "must be symmetric");
      }
      auto opt_vec = [&](const char* key) {
        if (!c.contains(key)) return Vec(Vec::Zero(s.n));
        const auto v = numbers(c[key], cp + "/" + key);
        if (static_cast<int>(v.size()) != s.n) bad(cp + "/" + key, "must have n entries");
        return to_vec(v);
      };
      s.coeffs.linear = opt_vec("linear");
      s.coeffs.quartic_diag = opt_vec("quartic_diag");
      if (c.contains("quartic_radial")) s.coeffs.quartic_radial = number(c["quartic_radial"], cp + "/quartic_radial");
    } else {
      bad(p + "/builtin", "expected one of flat, linear, polynomial");
    }
  } else {
    bad(p + "/type", "expected one of quadratic, torus, action-angle");
  }
  return s;
}

std::shared_ptr<const ActionAngleSystem> make_action_system(const SystemConfig& s) {
  if (s.type == SystemType::Torus || s.builtin == "flat") return std::make_shared<FlatTorus>(s.n, s.box);
  if (s.builtin == "linear") return std::make_shared<LinearAction>(to_vec(s.linear), s.box);
  return std::make_shared<PolynomialAction>(s.coeffs, Vec::Constant(s.n, -s.box), Vec::Constant(s.n, s.box));
}

// Liouville measure ∫ dσ/|∇H| of {|I|^2/2 = E} in T^n × R^n.
double flat_torus_liouville(int n, double e) {
  const double vn = std::pow(M_PI, 0.5 * n) / std::tgamma(0.5 * n + 1);
  return std::pow(2 * M_PI, n) * vn * n * std::pow(2 * e, 0.5 * n - 1);
}

// Rounded so that Newton noise does not split one family into several.
std::string family_key(double t, std::optional<double> m_norm = std::nullopt) {
  char buf[80];
  if (m_norm) std::snprintf(buf, sizeof buf, "T=%.9g;|M|=%.9g", t == 0.0 ? 0.0 : t, *m_norm);
  else std::snprintf(buf, sizeof buf, "T=%.9g", t == 0.0 ? 0.0 : t);
  return buf;
}

void build_quadratic(const RunConfig& cfg, SemiclassicalModel& model) {
  const auto& w = cfg.system.w;
  const QuadraticHamiltonian q(w);
  const RankPolicy pol = cfg.rank_policy();
  const auto range = std::array<double, 2>{cfg.fhat.center - cfg.fhat.halfwidth, cfg.fhat.center + cfg.fhat.halfwidth};
  for (const auto& c : quadratic_components(q, cfg.energy, range[0], range[1])) {
    ComponentRecord r;
    r.kind = ComponentKind::DensityFamily;
    r.component = c;
    r.t = c.t;
    r.dim = c.dim;
    r.action = c.action;
    r.label = to_string(c.label);
    r.family = family_key(c.t);
    const Vec grad = q.gradient(c.z);
    const Monodromy m = monodromy(q, c.z, c.t);
    r.density = dg_density_general(invariant_split(m, pol), grad, m, pol);
    const double liouville =
        c.t == 0.0 ? quadratic_liouville_measure(w, cfg.energy) : resonant_liouville_measure(w, c.resonant, cfg.energy);
    r.measure = weighted_measure(r.density.modulus, grad.norm(), liouville);
    r.candidates = r.density.phase_candidates();
    if (c.t == 0.0) {
      r.phase = 0;
      r.phase_source = PhaseSource::Fixed;
    } else {
      const auto track = maslov_branch_track([&q](double t) { return q.flow_matrix(t); }, c.t);
      r.track_quarter_turns = track.quarter_turns();
      r.track_phase = nearest_candidate(r.candidates, r.track_quarter_turns);
    }
    model.components.push_back(std::move(r));
  }
}

void build_tori(const RunConfig& cfg, const RunOptions& opts, SemiclassicalModel& model) {
  model.action_system = make_action_system(cfg.system);
  const ActionAngleSystem& sys = *model.action_system;
  const int n = sys.dof();
  const double t0 = cfg.fhat.center - cfg.fhat.halfwidth, t1 = cfg.fhat.center + cfg.fhat.halfwidth;
  if (t0 < 0.0 && t1 > 0.0) {
    const bool flat = cfg.system.type == SystemType::Torus || cfg.system.builtin == "flat";
    if (flat) {
      ComponentRecord r;
      r.kind = ComponentKind::DensityFamily;
      r.component.t = 0.0;
      r.component.dim = 2 * n - 1;
      r.component.label = ComponentLabel::WeylZero;
      r.dim = 2 * n - 1;
      r.label = to_string(ComponentLabel::WeylZero);
      r.family = family_key(0.0);
      const double g = std::sqrt(2 * cfg.energy);
      r.density = dg_density_weyl(Vec::Unit(2 * n, n) * g);
      r.measure = weighted_measure(r.density.modulus, g, flat_torus_liouville(n, cfg.energy));
      r.phase = 0;
      r.phase_source = PhaseSource::Fixed;
      model.components.push_back(std::move(r));
    } else {
      model.warnings.push_back("window contains T=0: Weyl term omitted for this action-angle system");
    }
  }
  TorusSearchOptions so;
  so.tol_newton = cfg.tolerances.tol_newton;
  so.threads = opts.threads;
  auto en = enumerate_tori(sys, cfg.energy, t0, t1, cfg.m_bound, so);
  for (auto& wmsg : en.warnings) model.warnings.push_back(std::move(wmsg));
  for (const auto& p : en.tori) {
    ComponentRecord r;
    r.kind = ComponentKind::Torus;
    r.torus = p;
    r.t = p.t;
    r.dim = n;
    r.action = p.action_integral();
    r.label = to_string(ComponentLabel::Torus);
    r.family = family_key(p.t, p.m_norm());
    r.curvature = curvature_from_frequencies(sys, p.action);
    try {
      r.curvature_check = curvature_from_parametrization(sys, p.action);
    } catch (const Error& e) {
      r.curvature_check = std::nan("");
      model.warnings.push_back(r.family + ": " + e.what());
    }
    r.candidates = bt_beta_candidates(n, r.curvature);
    model.components.push_back(std::move(r));
  }
}

Complex component_amplitude(const SemiclassicalModel& model, const ComponentRecord& r, int phase, double h,
                            const TestFunctionPair& fpair, double psi_e) {
  if (r.kind == ComponentKind::DensityFamily) {
    return assemble_component_amplitude(r.component, r.density, r.measure, fpair.fhat(r.t), psi_e, h, phase);
  }
  return bt_amplitude(r.torus, *model.action_system, fpair.fhat(r.t), h, phase, psi_e);
}

json complex_json(Complex z) { return json::array({z.real(), z.imag()}); }

json component_json(const ComponentRecord& r) {
  json c;
  c["kind"] = r.kind == ComponentKind::Torus ? "torus" : "density";
  c["family"] = r.family;
  c["T"] = r.t;
  c["dim"] = r.dim;
  c["action"] = r.action;
  c["label"] = r.label;
  c["candidates"] = {r.candidates[0], r.candidates[1]};
  c["phase"] = r.phase ? json(*r.phase) : json(nullptr);
  c["phase_source"] = to_string(r.phase_source);
  c["track_phase"] = r.track_phase ? json(*r.track_phase) : json(nullptr);
  if (r.kind == ComponentKind::DensityFamily) {
    c["d_squared"] = complex_json(r.density.d_squared);
    c["density_method"] = to_string(r.density.method);
    c["measure"] = r.measure;
    c["resonant"] = r.component.resonant;
    if (r.track_phase) c["track_quarter_turns"] = r.track_quarter_turns;
  } else {
    c["M"] = r.torus.m_vec;
    c["I"] = std::vector<double>(r.torus.action.data(), r.torus.action.data() + r.torus.action.size());
    c["M_norm"] = r.torus.m_norm();
    c["residual"] = r.torus.residual;
    c["curvature"] = r.curvature;
    c["curvature_parametrization"] = std::isfinite(r.curvature_check) ? json(r.curvature_check) : json(nullptr);
  }
  return c;
}

json config_summary(const RunConfig& cfg) {
  json s;
  s["type"] = to_string(cfg.system.type);
  if (cfg.system.type == SystemType::Quadratic) s["w"] = cfg.system.w;
  else s["n"] = cfg.system.n;
  if (cfg.system.type == SystemType::ActionAngle) s["builtin"] = cfg.system.builtin;
  json j;
  j["system"] = s;
  j["E"] = cfg.energy;
  j["epsilon"] = cfg.epsilon;
  j["fhat"] = {{"type", to_string(cfg.fhat.kind)}, {"center", cfg.fhat.center}, {"halfwidth", cfg.fhat.halfwidth}};
  return j;
}

}  // namespace

const char* to_string(SystemType t) {
  switch (t) {
    case SystemType::Quadratic: return "quadratic";
    case SystemType::Torus: return "torus";
    case SystemType::ActionAngle: return "action-angle";
  }
  return "?";
}

const char* to_string(PhaseSource s) {
  switch (s) {
    case PhaseSource::Unresolved: return "unresolved";
    case PhaseSource::Fixed: return "fixed";
    case PhaseSource::Track: return "track";
    case PhaseSource::Calibrated: return "calibrated";
  }
  return "?";
}

TestFunctionPair RunConfig::window() const {
  return fhat.kind == WindowKind::Triangle ? TestFunctionPair::triangle(fhat.center, fhat.halfwidth)
                                           : TestFunctionPair::bump(fhat.center, fhat.halfwidth);
}

EnergyCutoff RunConfig::cutoff() const { return EnergyCutoff(energy, epsilon, psi_plateau); }

RankPolicy RunConfig::rank_policy() const {
  RankPolicy p;
  p.rank_tol = tolerances.rank_tol;
  p.gap_factor = tolerances.gap_factor;
  return p;
}

std::array<double, 2> RunConfig::period_range() const {
  if (t_range) return *t_range;
  return {fhat.center - fhat.halfwidth, fhat.center + fhat.halfwidth};
}

RunConfig parse_config(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    fail(ErrorCode::ConfigError, std::string("/: invalid JSON: ") + e.what());
  }
  allow_keys(j, "", {"system", "E", "epsilon", "hs", "fhat", "psi", "M_bound", "rational_bound", "tolerances", "t_range"});
  RunConfig cfg;
  cfg.system = parse_system(field(j, "system", ""));
  cfg.energy = number(field(j, "E", ""), "/E");

  std::optional<double> eps;
  if (j.contains("epsilon")) eps = positive(j["epsilon"], "/epsilon");
  if (j.contains("psi")) {
    allow_keys(j["psi"], "/psi", {"halfwidth", "plateau"});
    if (j["psi"].contains("halfwidth")) {
      const double hw = positive(j["psi"]["halfwidth"], "/psi/halfwidth");
      if (eps && *eps != hw) bad("/psi/halfwidth", "conflicts with /epsilon");
      eps = hw;
    }
    if (j["psi"].contains("plateau")) cfg.psi_plateau = number(j["psi"]["plateau"], "/psi/plateau");
  }
  if (!eps) bad("/epsilon", "required field missing (or give /psi/halfwidth)");
  cfg.epsilon = *eps;
  if (cfg.psi_plateau < 0.0 || cfg.psi_plateau >= cfg.epsilon) bad("/psi/plateau", "must lie in [0, epsilon)");

  if (j.contains("hs")) {
    auto hs = numbers(j["hs"], "/hs");
    if (hs.empty()) bad("/hs", "empty h-list");
    for (std::size_t i = 0; i < hs.size(); ++i) {
      if (hs[i] <= 0.0) bad("/hs/" + std::to_string(i), "must be positive");
    }
    std::sort(hs.begin(), hs.end(), std::greater<>());
    const auto before = hs.size();
    hs.erase(std::unique(hs.begin(), hs.end()), hs.end());
    if (hs.size() != before) {
      cfg.warnings.push_back("/hs: " + std::to_string(before - hs.size()) + " duplicate h value(s) removed");
    }
    cfg.hs = hs;
  }

  const json& f = field(j, "fhat", "");
  allow_keys(f, "/fhat", {"type", "center", "halfwidth"});
  const json& ft = field(f, "type", "/fhat");
  if (!ft.is_string() || (ft != "triangle" && ft != "bump")) bad("/fhat/type", "expected triangle or bump");
  cfg.fhat.kind = ft == "triangle" ? WindowKind::Triangle : WindowKind::Bump;
  cfg.fhat.center = number(field(f, "center", "/fhat"), "/fhat/center");
  cfg.fhat.halfwidth = positive(field(f, "halfwidth", "/fhat"), "/fhat/halfwidth");

  if (j.contains("M_bound")) {
    cfg.m_bound = number(j["M_bound"], "/M_bound");
    if (cfg.m_bound < 1.0) bad("/M_bound", "must be >= 1");
  }
  if (j.contains("rational_bound")) cfg.rational_bound = integer(j["rational_bound"], "/rational_bound", 1);
  if (j.contains("tolerances")) {
    const json& t = j["tolerances"];
    allow_keys(t, "/tolerances", {"rank_tol", "gap_factor", "tol_newton"});
    if (t.contains("rank_tol")) cfg.tolerances.rank_tol = positive(t["rank_tol"], "/tolerances/rank_tol");
    if (t.contains("gap_factor")) cfg.tolerances.gap_factor = positive(t["gap_factor"], "/tolerances/gap_factor");
    if (t.contains("tol_newton")) cfg.tolerances.tol_newton = positive(t["tol_newton"], "/tolerances/tol_newton");
  }
  if (j.contains("t_range")) {
    const auto r = numbers(j["t_range"], "/t_range");
    if (r.size() != 2 || r[0] > r[1]) bad("/t_range", "expected [t_min, t_max] with t_min <= t_max");
    cfg.t_range = std::array<double, 2>{r[0], r[1]};
  }
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::IoError, "cannot open config file " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::vector<Complex> SemiclassicalModel::amplitudes(double h, const TestFunctionPair& fpair, double psi_e) const {
  std::vector<Complex> out;
  out.reserve(components.size());
  for (const auto& r : components) {
    require(r.phase.has_value(), ErrorCode::UnresolvedPhase, "component " + r.family + " has no resolved phase");
    out.push_back(component_amplitude(*this, r, *r.phase, h, fpair, psi_e));
  }
  return out;
}

SemiclassicalModel build_semiclassical(const RunConfig& cfg, const RunOptions& opts) {
  SemiclassicalModel model;
  if (cfg.system.type == SystemType::Quadratic) build_quadratic(cfg, model);
  else build_tori(cfg, opts, model);
  return model;
}

void apply_track_phases(SemiclassicalModel& model) {
  for (auto& r : model.components) {
    if (!r.phase && r.track_phase) {
      r.phase = r.track_phase;
      r.phase_source = PhaseSource::Track;
    }
  }
}

Calibration calibrate_phases(SemiclassicalModel& model, Complex quantum, double h, const TestFunctionPair& fpair,
                             double psi_e) {
  std::vector<std::string> families;
  for (const auto& r : model.components) {
    if (!r.phase && std::find(families.begin(), families.end(), r.family) == families.end()) {
      families.push_back(r.family);
    }
  }
  require(families.size() <= 20, ErrorCode::InvalidArgument, "calibrate_phases: too many unresolved families");
  const std::size_t nc = model.components.size();
  Complex fixed = 0.0;
  std::vector<int> fam_of(nc, -1);
  std::vector<std::array<Complex, 2>> amp(nc);
  for (std::size_t i = 0; i < nc; ++i) {
    const auto& r = model.components[i];
    if (r.phase) {
      fixed += component_amplitude(model, r, *r.phase, h, fpair, psi_e);
      continue;
    }
    fam_of[i] = static_cast<int>(std::find(families.begin(), families.end(), r.family) - families.begin());
    for (int c = 0; c < 2; ++c) amp[i][static_cast<std::size_t>(c)] = component_amplitude(model, r, r.candidates[static_cast<std::size_t>(c)], h, fpair, psi_e);
  }
  const unsigned long combos = 1UL << families.size();
  unsigned long best = 0;
  double best_err = std::numeric_limits<double>::infinity();
  for (unsigned long mask = 0; mask < combos; ++mask) {
    CompensatedSum<Complex> s;
    s.add(fixed);
    for (std::size_t i = 0; i < nc; ++i) {
      if (fam_of[i] >= 0) s.add(amp[i][(mask >> fam_of[i]) & 1UL]);
    }
    const double err = std::abs(quantum - s.value());
    if (err < best_err) {
      best_err = err;
      best = mask;
    }
  }
  Calibration cal;
  cal.h = h;
  cal.residual = best_err;
  std::vector<bool> recorded(families.size(), false);
  for (std::size_t i = 0; i < nc; ++i) {
    if (fam_of[i] < 0) continue;
    auto& r = model.components[i];
    r.phase = r.candidates[(best >> fam_of[i]) & 1UL];
    r.phase_source = PhaseSource::Calibrated;
    if (!recorded[static_cast<std::size_t>(fam_of[i])]) {
      recorded[static_cast<std::size_t>(fam_of[i])] = true;
      cal.choices.emplace_back(r.family, *r.phase);
    }
  }
  return cal;
}

SweepReport run_sweep(const RunConfig& cfg, const RunOptions& opts, PhasePolicy policy) {
  if (cfg.hs.empty()) fail(ErrorCode::ConfigError, "/hs: empty h-list");
  if (cfg.system.type == SystemType::ActionAngle) {
    fail(ErrorCode::ConfigError, "/system/type: sweep needs a quantum spectrum (quadratic or torus)");
  }
  SweepReport rep;
  rep.config = cfg;
  rep.options = opts;
  rep.warnings = cfg.warnings;
  const TestFunctionPair fp = cfg.window();
  fp.validate();
  const EnergyCutoff psi = cfg.cutoff();
  rep.model = build_semiclassical(cfg, opts);
  if (policy == PhasePolicy::Track) apply_track_phases(rep.model);

  DensityOptions dopt;
  dopt.threads = opts.threads;
  std::vector<double> hs = cfg.hs;
  std::sort(hs.begin(), hs.end(), std::greater<>());
  for (double h : hs) {
    const auto start = std::chrono::steady_clock::now();
    const Spectrum s = cfg.system.type == SystemType::Quadratic
                           ? quadratic_spectrum(cfg.system.w, h, psi.lo(), psi.hi())
                           : torus_spectrum(cfg.system.n, h, psi.lo(), psi.hi(), cfg.system.mu);
    for (const auto& wmsg : s.warnings) rep.warnings.push_back("h=" + format_double(h) + ": " + wmsg);
    SweepRow row;
    row.h = h;
    row.quantum = quantum_density(s, psi, fp, cfg.energy, h, dopt);
    row.n_eigenvalues = s.count;
    if (opts.timing) {
      row.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    }
    rep.rows.push_back(std::move(row));
  }

  const bool unresolved = std::any_of(rep.model.components.begin(), rep.model.components.end(),
                                      [](const ComponentRecord& r) { return !r.phase; });
  if (unresolved && policy == PhasePolicy::Calibrate) {
    SweepRow& last = rep.rows.back();
    rep.calibration = calibrate_phases(rep.model, last.quantum, last.h, fp, psi(cfg.energy));
    last.calibration = true;
  }
  for (auto& row : rep.rows) {
    row.contributions = rep.model.amplitudes(row.h, fp, psi(cfg.energy));
    row.semiclassical = semiclassical_density(row.contributions);
    row.abs_err = std::abs(row.quantum - row.semiclassical);
    const double scale = std::abs(row.semiclassical) > 0.0 ? std::abs(row.semiclassical) : std::abs(row.quantum);
    row.rel_err = scale > 0.0 ? row.abs_err / scale : 0.0;
  }
  for (const auto& wmsg : rep.model.warnings) rep.warnings.push_back(wmsg);
  return rep;
}

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, res.ptr);
}

std::string report_csv(const SweepReport& report) {
  std::string out = "h,quantum_re,quantum_im,semicl_re,semicl_im,abs_err,rel_err,n_eigenvalues,wall_ms\n";
  for (const auto& r : report.rows) {
    out += format_double(r.h) + ',' + format_double(r.quantum.real()) + ',' + format_double(r.quantum.imag()) + ',' +
           format_double(r.semiclassical.real()) + ',' + format_double(r.semiclassical.imag()) + ',' +
           format_double(r.abs_err) + ',' + format_double(r.rel_err) + ',' + std::to_string(r.n_eigenvalues) + ',' +
           format_double(r.wall_ms) + '\n';
  }
  return out;
}

std::string components_json(const RunConfig& cfg, const SemiclassicalModel& model) {
  json j = config_summary(cfg);
  j["components"] = json::array();
  for (const auto& r : model.components) j["components"].push_back(component_json(r));
  j["warnings"] = model.warnings;
  return j.dump(2) + "\n";
}

std::string components_json(const SweepReport& report) {
  json j = config_summary(report.config);
  j["seed"] = report.options.seed;
  if (report.calibration) {
    json c;
    c["h"] = report.calibration->h;
    c["residual"] = report.calibration->residual;
    c["choices"] = json::object();
    for (const auto& [fam, ph] : report.calibration->choices) c["choices"][fam] = ph;
    j["calibration"] = c;
  } else {
    j["calibration"] = nullptr;
  }
  j["components"] = json::array();
  for (std::size_t i = 0; i < report.model.components.size(); ++i) {
    json c = component_json(report.model.components[i]);
    c["contributions"] = json::array();
    for (const auto& row : report.rows) {
      c["contributions"].push_back({{"h", row.h}, {"value", complex_json(row.contributions[i])}});
    }
    j["components"].push_back(c);
  }
  j["warnings"] = report.warnings;
  return j.dump(2) + "\n";
}

std::string plot_script(const std::string& csv_name) {
  std::string s;
  s += "set datafile separator ','\n";
  s += "set key autotitle columnhead\n";
  s += "set logscale xy\n";
  s += "set xlabel 'h'\n";
  s += "set ylabel 'relative error'\n";
  s += "set terminal pngcairo size 800,600\n";
  s += "set output 'report.png'\n";
  s += "plot '" + csv_name + "' using 1:7 with linespoints title 'rel_err'\n";
  return s;
}

std::string classify_json(const RunConfig& cfg) {
  if (cfg.system.type != SystemType::Quadratic) fail(ErrorCode::ConfigError, "/system/type: classify needs a quadratic system");
  const auto& w = cfg.system.w;
  const QuadraticHamiltonian q(w);
  const RankPolicy pol = cfg.rank_policy();
  const auto range = cfg.period_range();
  json j = config_summary(cfg);
  j["t_range"] = {range[0], range[1]};
  const auto fc = classify_frequencies(w, cfg.rational_bound);
  json fr;
  fr["verdict"] = to_string(fc.verdict);
  fr["all_irrational"] = fc.all_irrational;
  fr["all_rational"] = fc.all_rational;
  fr["all_equal"] = fc.all_equal;
  fr["rational_implies_equal"] = fc.rational_implies_equal;
  fr["ratios"] = json::array();
  for (const auto& r : fc.ratios) {
    fr["ratios"].push_back({{"i", r.i}, {"j", r.j}, {"rational", r.rational}, {"p", r.p}, {"q", r.q},
                            {"error", r.error}, {"borderline", r.borderline}});
  }
  j["frequencies"] = fr;

  std::vector<int> all(w.size());
  for (std::size_t k = 0; k < w.size(); ++k) all[k] = static_cast<int>(k);
  const FirstIntegralFamily integrals = resonant_integrals(q, all);
  const auto generators = equal_frequency_generators(w);
  NormalityOptions nopt;
  nopt.prune_dependent = true;
  nopt.policy = pol;
  std::vector<std::string> warnings = enumerate_periods(w, range[0], range[1]).warnings;

  j["periods"] = json::array();
  for (const auto& c : quadratic_components(q, cfg.energy, range[0], range[1])) {
    const Vec grad = q.gradient(c.z);
    const Monodromy m = monodromy(q, c.z, c.t);
    const EigenspaceSplit split = invariant_split(m, pol);
    json pred;
    auto eval = [&](const char* name, auto&& fn) {
      try {
        pred[name] = static_cast<bool>(fn());
      } catch (const Error& e) {
        pred[name] = nullptr;
        warnings.push_back("T=" + format_double(c.t) + " " + name + ": " + e.what());
      }
    };
    eval("nondeg", [&] { return is_nondegenerate(split); });
    eval("NDR", [&] { return is_ndr(split, c.z, grad, generators, pol); });
    eval("normal", [&] { return is_normal(m, c.z, grad, integrals, nopt); });
    eval("sigma_normal", [&] { return is_sigma_normal(m, c.z, grad, integrals, nopt); });
    eval("hypRC", [&] { return check_hyp_rc(split, m.matrix(), pol); });
    eval("clean", [&] { return clean_flow_check(m.matrix(), grad, quadratic_component_tangent(w, c.t, grad, pol), pol); });
    json p;
    p["T"] = c.t;
    p["J"] = c.resonant;
    p["dim"] = c.dim;
    p["R"] = c.r;
    p["labels"] = json::array({to_string(c.label)});
    p["predicates"] = pred;
    j["periods"].push_back(p);
  }
  j["warnings"] = warnings;
  return j.dump(2) + "\n";
}

BerryTaborTables berry_tabor_tables(const RunConfig& cfg, const RunOptions& opts) {
  if (cfg.system.type == SystemType::Quadratic) {
    fail(ErrorCode::ConfigError, "/system/type: berry-tabor needs a torus or action-angle system");
  }
  const auto sys = make_action_system(cfg.system);
  const int n = sys->dof();
  const TestFunctionPair fp = cfg.window();
  const double psi_e = cfg.cutoff()(cfg.energy);
  TorusSearchOptions so;
  so.tol_newton = cfg.tolerances.tol_newton;
  so.threads = opts.threads;
  const auto en = enumerate_tori(*sys, cfg.energy, fp.t_min(), fp.t_max(), cfg.m_bound, so);
  json j = config_summary(cfg);
  j["M_bound"] = cfg.m_bound;
  j["tori"] = json::array();
  std::string csv = "M,T,action,w_norm,curvature,M_norm,fhat,coefficient,beta_a,beta_b\n";
  std::vector<std::string> warnings = en.warnings;
  for (const auto& p : en.tori) {
    const Vec w = sys->frequencies(p.action);
    const double k = curvature_from_frequencies(*sys, p.action);
    double kp = std::nan("");
    try {
      kp = curvature_from_parametrization(*sys, p.action);
    } catch (const Error& e) {
      warnings.push_back(e.what());
    }
    json t;
    t["M"] = p.m_vec;
    t["T"] = p.t;
    t["I"] = std::vector<double>(p.action.data(), p.action.data() + p.action.size());
    t["residual"] = p.residual;
    t["bracket"] = p.bracket;
    t["action"] = p.action_integral();
    t["curvature_frequencies"] = k;
    t["curvature_parametrization"] = std::isfinite(kp) ? json(kp) : json(nullptr);
    std::string mstr, beta_a = "", beta_b = "";
    for (std::size_t i = 0; i < p.m_vec.size(); ++i) mstr += (i ? ";" : "") + std::to_string(p.m_vec[i]);
    double coef = std::nan("");
    if (k != 0.0) {
      const auto b = bt_beta_candidates(n, k);
      t["beta_candidates"] = {b[0], b[1]};
      beta_a = std::to_string(b[0]);
      beta_b = std::to_string(b[1]);
      coef = psi_e * fp.fhat(p.t) / (w.norm() * std::sqrt(std::abs(k)) * std::pow(p.m_norm(), 0.5 * (n - 1)));
    } else {
      t["beta_candidates"] = nullptr;
      warnings.push_back("M=" + mstr + ": vanishing curvature");
    }
    t["coefficient"] = std::isfinite(coef) ? json(coef) : json(nullptr);
    j["tori"].push_back(t);
    csv += mstr + ',' + format_double(p.t) + ',' + format_double(p.action_integral()) + ',' + format_double(w.norm()) +
           ',' + format_double(k) + ',' + format_double(p.m_norm()) + ',' + format_double(fp.fhat(p.t)) + ',' +
           format_double(coef) + ',' + beta_a + ',' + beta_b + '\n';
  }
  j["warnings"] = warnings;
  return {j.dump(2) + "\n", csv};
}

void write_text_file(const std::string& dir, const std::string& name, const std::string& content) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) fail(ErrorCode::IoError, "cannot create output directory " + dir + ": " + ec.message());
  const auto path = std::filesystem::path(dir) / name;
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::IoError, "cannot write " + path.string());
  out << content;
  if (!out) fail(ErrorCode::IoError, "write failed for " + path.string());
}

}  // namespace tracelab
