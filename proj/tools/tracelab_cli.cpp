#include <cstdio>
#include <string>

#include <CLI11.hpp>

#include "tracelab/tracelab.h"

namespace {

struct Flags {
  std::string config;
  std::string out = "out";
  uint64_t seed = 0;
  int threads = 1;
  bool emit_plots = false;
  bool timing = false;
};

int report_failure(tl_status s) {
  std::fprintf(stderr, "error (%s): %s\n", tl_status_name(s), tl_last_error());
  return static_cast<int>(s);
}

void print_warnings(const tl_config* cfg) {
  for (size_t i = 0; i < tl_config_warning_count(cfg); ++i) std::fprintf(stderr, "warning: %s\n", tl_config_warning(cfg, i));
}

// Writes and frees an owned string.
tl_status emit(const std::string& dir, const char* name, char* text) {
  const tl_status s = tl_write_text(dir.c_str(), name, text);
  tl_string_free(text);
  if (s == TL_OK) std::printf("wrote %s/%s\n", dir.c_str(), name);
  return s;
}

int run_report(const Flags& f, const tl_config* cfg, bool calibrate) {
  tl_run_options o = tl_run_options_default();
  o.threads = f.threads;
  o.seed = f.seed;
  o.timing = f.timing;
  o.emit_plots = f.emit_plots;
  tl_report* rep = nullptr;
  tl_status s = calibrate ? tl_sweep(cfg, &o, &rep) : tl_compare(cfg, &o, &rep);
  if (s != TL_OK) return report_failure(s);
  for (size_t i = 0; i < tl_report_warning_count(rep); ++i) std::fprintf(stderr, "warning: %s\n", tl_report_warning(rep, i));
  std::printf("%-10s %-24s %-24s %-12s\n", "h", "quantum", "semiclassical", "rel_err");
  for (size_t i = 0; i < tl_report_row_count(rep); ++i) {
    tl_row r;
    tl_report_row(rep, i, &r);
    std::printf("%-10.6g %+.6e%+.6ei %+.6e%+.6ei %.4e%s\n", r.h, r.quantum_re, r.quantum_im, r.semicl_re, r.semicl_im,
                r.rel_err, r.calibration ? "  (calibration)" : "");
  }
  s = tl_report_write(rep, f.out.c_str());
  tl_report_free(rep);
  if (s != TL_OK) return report_failure(s);
  std::printf("wrote %s/report.csv, %s/components.json%s\n", f.out.c_str(), f.out.c_str(),
              f.emit_plots ? ", plot.gnuplot" : "");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Semiclassical trace formula workbench"};
  app.require_subcommand(1);
  Flags f;
  app.add_option("--config", f.config, "JSON config file")->required()->check(CLI::ExistingFile);
  app.add_option("--out", f.out, "output directory");
  app.add_option("--seed", f.seed, "random seed (recorded in outputs)");
  app.add_option("--threads", f.threads, "worker threads")->check(CLI::PositiveNumber);
  app.add_flag("--emit-plots", f.emit_plots, "also write plot.gnuplot");
  app.add_flag("--timing", f.timing, "fill the wall_ms column");
  app.fallthrough();

  auto* analyze = app.add_subcommand("analyze-quadratic", "component densities, measures and phases");
  auto* bt = app.add_subcommand("berry-tabor", "periodic tori and amplitude table");
  auto* classify = app.add_subcommand("classify", "period sets and clean-intersection predicates");
  auto* compare = app.add_subcommand("compare", "quantum vs semiclassical with branch-tracked phases");
  auto* sweep = app.add_subcommand("sweep", "h-sweep with phase calibration at the smallest h");

  CLI11_PARSE(app, argc, argv);

  tl_config* cfg = nullptr;
  tl_status s = tl_config_load(f.config.c_str(), &cfg);
  if (s != TL_OK) return report_failure(s);
  print_warnings(cfg);

  tl_run_options o = tl_run_options_default();
  o.threads = f.threads;
  o.seed = f.seed;
  int rc = 0;
  if (sweep->parsed() || compare->parsed()) {
    rc = run_report(f, cfg, sweep->parsed());
  } else if (analyze->parsed()) {
    char* text = nullptr;
    s = tl_analyze_quadratic(cfg, &o, &text);
    if (s == TL_OK) s = emit(f.out, "components.json", text);
    rc = s == TL_OK ? 0 : report_failure(s);
  } else if (classify->parsed()) {
    char* text = nullptr;
    s = tl_classify(cfg, &text);
    if (s == TL_OK) s = emit(f.out, "classify.json", text);
    rc = s == TL_OK ? 0 : report_failure(s);
  } else if (bt->parsed()) {
    char* tori = nullptr;
    char* amps = nullptr;
    s = tl_berry_tabor(cfg, &o, &tori, &amps);
    if (s == TL_OK) {
      s = emit(f.out, "tori.json", tori);
      const tl_status s2 = emit(f.out, "amplitudes.csv", amps);
      if (s == TL_OK) s = s2;
    }
    rc = s == TL_OK ? 0 : report_failure(s);
  }
  tl_config_free(cfg);
  return rc;
}
