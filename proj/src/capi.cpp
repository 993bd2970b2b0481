#include "tracelab/tracelab.h"

#include <cstdlib>
#include <cstring>
#include <string>

#include "tracelab/error.hpp"
#include "tracelab/harness.hpp"

struct tl_config {
  tracelab::RunConfig cfg;
};

struct tl_report {
  tracelab::SweepReport rep;
};

namespace {

thread_local std::string last_error;

tl_status set_error(tl_status s, const std::string& msg) {
  last_error = msg;
  return s;
}

template <typename F>
tl_status guarded(F&& fn) {
  try {
    last_error.clear();
    fn();
    return TL_OK;
  } catch (const tracelab::Error& e) {
    return set_error(static_cast<tl_status>(e.code()), e.what());
  } catch (const std::bad_alloc&) {
    return set_error(TL_INTERNAL_ERROR, "out of memory");
  } catch (const std::exception& e) {
    return set_error(TL_INTERNAL_ERROR, e.what());
  }
}

char* dup_string(const std::string& s) {
  char* p = static_cast<char*>(std::malloc(s.size() + 1));
  if (!p) throw std::bad_alloc();
  std::memcpy(p, s.c_str(), s.size() + 1);
  return p;
}

tracelab::RunOptions to_options(const tl_run_options* o) {
  tracelab::RunOptions r;
  if (o) {
    r.threads = o->threads < 1 ? 1 : o->threads;
    r.seed = o->seed;
    r.timing = o->timing != 0;
    r.emit_plots = o->emit_plots != 0;
  }
  return r;
}

#define TL_NEED(ptr)                                                                        \
  do {                                                                                      \
    if (!(ptr)) return set_error(TL_INVALID_ARGUMENT, std::string(#ptr) + " must not be null"); \
  } while (0)

tl_status run(const tl_config* cfg, const tl_run_options* opts, tl_report** out, tracelab::PhasePolicy policy) {
  TL_NEED(cfg);
  TL_NEED(out);
  *out = nullptr;
  return guarded([&] { *out = new tl_report{tracelab::run_sweep(cfg->cfg, to_options(opts), policy)}; });
}

}  // namespace

extern "C" {

const char* tl_version(void) { return "1.0.0"; }

const char* tl_status_name(tl_status s) {
  switch (s) {
    case TL_OK: return "ok";
    case TL_INVALID_ARGUMENT: return "invalid argument";
    case TL_PRECONDITION_VIOLATION: return "precondition violation";
    case TL_UNSTABLE_RANK: return "unstable rank";
    case TL_NOT_SYMPLECTIC: return "not symplectic";
    case TL_ENERGY_DRIFT: return "energy drift";
    case TL_STEP_SIZE_COLLAPSE: return "step size collapse";
    case TL_NOT_PERIODIC: return "not periodic";
    case TL_DEPENDENT_GRADIENTS: return "dependent gradients";
    case TL_DEGENERATE_DETERMINANT: return "degenerate determinant";
    case TL_INCOMPLETE_SPECTRUM: return "incomplete spectrum";
    case TL_COUNT_CAP_EXCEEDED: return "count cap exceeded";
    case TL_UNRESOLVED_PHASE: return "unresolved phase";
    case TL_CONFIG_ERROR: return "config error";
    case TL_IO_ERROR: return "io error";
    case TL_VARIANCE_BLOW_UP: return "variance blow-up";
    case TL_CONVERGENCE_FAILURE: return "convergence failure";
    case TL_INTERNAL_ERROR: return "internal error";
  }
  return "unknown";
}

const char* tl_last_error(void) { return last_error.c_str(); }

void tl_string_free(char* s) { std::free(s); }

tl_run_options tl_run_options_default(void) { return tl_run_options{1, 0, 0, 0}; }

tl_status tl_config_load(const char* path, tl_config** out) {
  TL_NEED(path);
  TL_NEED(out);
  *out = nullptr;
  return guarded([&] { *out = new tl_config{tracelab::load_config(path)}; });
}

tl_status tl_config_parse(const char* json_text, tl_config** out) {
  TL_NEED(json_text);
  TL_NEED(out);
  *out = nullptr;
  return guarded([&] { *out = new tl_config{tracelab::parse_config(json_text)}; });
}

void tl_config_free(tl_config* cfg) { delete cfg; }

size_t tl_config_warning_count(const tl_config* cfg) { return cfg ? cfg->cfg.warnings.size() : 0; }

const char* tl_config_warning(const tl_config* cfg, size_t i) {
  return cfg && i < cfg->cfg.warnings.size() ? cfg->cfg.warnings[i].c_str() : nullptr;
}

tl_status tl_sweep(const tl_config* cfg, const tl_run_options* opts, tl_report** out) {
  return run(cfg, opts, out, tracelab::PhasePolicy::Calibrate);
}

tl_status tl_compare(const tl_config* cfg, const tl_run_options* opts, tl_report** out) {
  return run(cfg, opts, out, tracelab::PhasePolicy::Track);
}

void tl_report_free(tl_report* rep) { delete rep; }

size_t tl_report_row_count(const tl_report* rep) { return rep ? rep->rep.rows.size() : 0; }

tl_status tl_report_row(const tl_report* rep, size_t i, tl_row* out) {
  TL_NEED(rep);
  TL_NEED(out);
  if (i >= rep->rep.rows.size()) return set_error(TL_INVALID_ARGUMENT, "row index out of range");
  const auto& r = rep->rep.rows[i];
  *out = tl_row{r.h,       r.quantum.real(), r.quantum.imag(), r.semiclassical.real(), r.semiclassical.imag(),
                r.abs_err, r.rel_err,        r.n_eigenvalues,  r.wall_ms,              r.calibration ? 1 : 0};
  return TL_OK;
}

size_t tl_report_component_count(const tl_report* rep) { return rep ? rep->rep.model.components.size() : 0; }

tl_status tl_report_component(const tl_report* rep, size_t i, tl_component* out) {
  TL_NEED(rep);
  TL_NEED(out);
  if (i >= rep->rep.model.components.size()) return set_error(TL_INVALID_ARGUMENT, "component index out of range");
  const auto& c = rep->rep.model.components[i];
  const bool torus = c.kind == tracelab::ComponentKind::Torus;
  tl_component r{};
  r.t = c.t;
  r.dim = c.dim;
  r.action = c.action;
  if (!torus) {
    r.d2_re = c.density.d_squared.real();
    r.d2_im = c.density.d_squared.imag();
    r.measure = c.measure;
  }
  r.candidate_a = c.candidates[0];
  r.candidate_b = c.candidates[1];
  r.has_phase = c.phase.has_value();
  r.phase = c.phase.value_or(0);
  r.has_track_phase = c.track_phase.has_value();
  r.track_phase = c.track_phase.value_or(0);
  r.is_torus = torus;
  r.curvature = torus ? c.curvature : 0.0;
  *out = r;
  return TL_OK;
}

size_t tl_report_warning_count(const tl_report* rep) { return rep ? rep->rep.warnings.size() : 0; }

const char* tl_report_warning(const tl_report* rep, size_t i) {
  return rep && i < rep->rep.warnings.size() ? rep->rep.warnings[i].c_str() : nullptr;
}

tl_status tl_report_csv(const tl_report* rep, char** out) {
  TL_NEED(rep);
  TL_NEED(out);
  return guarded([&] { *out = dup_string(tracelab::report_csv(rep->rep)); });
}

tl_status tl_report_components_json(const tl_report* rep, char** out) {
  TL_NEED(rep);
  TL_NEED(out);
  return guarded([&] { *out = dup_string(tracelab::components_json(rep->rep)); });
}

tl_status tl_report_write(const tl_report* rep, const char* dir) {
  TL_NEED(rep);
  TL_NEED(dir);
  return guarded([&] {
    tracelab::write_text_file(dir, "report.csv", tracelab::report_csv(rep->rep));
    tracelab::write_text_file(dir, "components.json", tracelab::components_json(rep->rep));
    if (rep->rep.options.emit_plots) tracelab::write_text_file(dir, "plot.gnuplot", tracelab::plot_script());
  });
}

tl_status tl_analyze_quadratic(const tl_config* cfg, const tl_run_options* opts, char** components_json) {
  TL_NEED(cfg);
  TL_NEED(components_json);
  if (cfg->cfg.system.type != tracelab::SystemType::Quadratic) {
    return set_error(TL_CONFIG_ERROR, "/system/type: analyze-quadratic needs a quadratic system");
  }
  return guarded([&] {
    auto model = tracelab::build_semiclassical(cfg->cfg, to_options(opts));
    tracelab::apply_track_phases(model);
    *components_json = dup_string(tracelab::components_json(cfg->cfg, model));
  });
}

tl_status tl_classify(const tl_config* cfg, char** classify_json) {
  TL_NEED(cfg);
  TL_NEED(classify_json);
  return guarded([&] { *classify_json = dup_string(tracelab::classify_json(cfg->cfg)); });
}

tl_status tl_berry_tabor(const tl_config* cfg, const tl_run_options* opts, char** tori_json, char** amplitudes_csv) {
  TL_NEED(cfg);
  TL_NEED(tori_json);
  TL_NEED(amplitudes_csv);
  return guarded([&] {
    const auto t = tracelab::berry_tabor_tables(cfg->cfg, to_options(opts));
    char* a = dup_string(t.tori_json);
    try {
      *amplitudes_csv = dup_string(t.amplitudes_csv);
    } catch (...) {
      std::free(a);
      throw;
    }
    *tori_json = a;
  });
}

tl_status tl_write_text(const char* dir, const char* name, const char* content) {
  TL_NEED(dir);
  TL_NEED(name);
  TL_NEED(content);
  return guarded([&] { tracelab::write_text_file(dir, name, content); });
}

}  // extern "C"
