#pragma once

// Config-driven runs: semiclassical model assembly, phase calibration,
// h-sweeps, classification and report files.

#include <array>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "tracelab/berry_tabor.hpp"
#include "tracelab/spectral.hpp"

namespace tracelab {

enum class SystemType { Quadratic, Torus, ActionAngle };
const char* to_string(SystemType t);

struct SystemConfig {
  SystemType type = SystemType::Quadratic;
  std::vector<double> w;          // quadratic
  int n = 0;                      // torus, action-angle
  std::vector<double> mu;         // torus EBK offsets
  std::string builtin = "flat";   // action-angle: flat | linear | polynomial
  std::vector<double> linear;     // action-angle linear builtin
  PolynomialCoefficients coeffs;  // action-angle polynomial builtin
  double box = 10.0;
};

struct WindowConfig {
  WindowKind kind = WindowKind::Triangle;
  double center = 0.0;
  double halfwidth = 1.0;
};

struct ToleranceConfig {
  double rank_tol = 1e-8;
  double gap_factor = 10.0;
  double tol_newton = 1e-10;
};

struct RunConfig {
  SystemConfig system;
  double energy = 1.0;
  double epsilon = 0.5;  // ψ halfwidth
  double psi_plateau = 0.0;
  std::vector<double> hs;  // decreasing, deduplicated
  WindowConfig fhat;
  std::optional<std::array<double, 2>> t_range;  // classify / analyze; defaults to supp f̂
  double m_bound = 3.0;
  long rational_bound = 1000000;
  ToleranceConfig tolerances;
  std::vector<std::string> warnings;

  TestFunctionPair window() const;
  EnergyCutoff cutoff() const;
  RankPolicy rank_policy() const;
  std::array<double, 2> period_range() const;
};

/// Throws ConfigError with a JSON-pointer path to the offending field.
RunConfig parse_config(const std::string& json_text);
RunConfig load_config(const std::string& path);

struct RunOptions {
  int threads = 1;
  std::uint64_t seed = 0;
  bool timing = false;
  bool emit_plots = false;
};

enum class PhaseSource { Unresolved, Fixed, Track, Calibrated };
const char* to_string(PhaseSource s);

enum class ComponentKind { DensityFamily, Torus };

struct ComponentRecord {
  ComponentKind kind = ComponentKind::DensityFamily;
  std::string family;  // calibration key (T, |M|)
  double t = 0.0;
  int dim = 0;
  double action = 0.0;
  std::string label;
  std::array<int, 2> candidates{0, 4};
  std::optional<int> track_phase;
  double track_quarter_turns = 0.0;
  std::optional<int> phase;
  PhaseSource phase_source = PhaseSource::Unresolved;

  // density families
  PeriodicComponent component;
  DensityResult density;
  double measure = 0.0;  // ∫_Y |d| dσ

  // tori
  PeriodicTorus torus;
  double curvature = 0.0;
  double curvature_check = 0.0;  // parametrization route
};

struct SemiclassicalModel {
  std::vector<ComponentRecord> components;
  std::shared_ptr<const ActionAngleSystem> action_system;
  std::vector<std::string> warnings;

  /// One amplitude per component; throws UnresolvedPhase if any phase is unset.
  std::vector<Complex> amplitudes(double h, const TestFunctionPair& fpair, double psi_e) const;
};

SemiclassicalModel build_semiclassical(const RunConfig& cfg, const RunOptions& opts = {});

/// Resolve phases from the branch track where one exists.
void apply_track_phases(SemiclassicalModel& model);

struct Calibration {
  double h = 0.0;
  std::vector<std::pair<std::string, int>> choices;  // family -> phase integer
  double residual = 0.0;
};

/// Brute force over both candidates of every unresolved family.
Calibration calibrate_phases(SemiclassicalModel& model, Complex quantum, double h, const TestFunctionPair& fpair,
                             double psi_e);

struct SweepRow {
  double h = 0.0;
  Complex quantum;
  Complex semiclassical;
  double abs_err = 0.0;
  double rel_err = 0.0;
  long n_eigenvalues = 0;
  double wall_ms = 0.0;
  bool calibration = false;
  std::vector<Complex> contributions;
};

struct SweepReport {
  RunConfig config;
  RunOptions options;
  SemiclassicalModel model;
  std::vector<SweepRow> rows;  // decreasing h
  std::optional<Calibration> calibration;
  std::vector<std::string> warnings;
};

enum class PhasePolicy { Calibrate, Track };

/// Quantum and semiclassical sides over cfg.hs. With Calibrate the
/// unresolved phases are fixed at the smallest h.
SweepReport run_sweep(const RunConfig& cfg, const RunOptions& opts = {}, PhasePolicy policy = PhasePolicy::Calibrate);

/// Shortest round-trip decimal.
std::string format_double(double x);

std::string report_csv(const SweepReport& report);
std::string components_json(const SweepReport& report);
std::string components_json(const RunConfig& cfg, const SemiclassicalModel& model);
std::string plot_script(const std::string& csv_name = "report.csv");

/// {periods:[{T, J, dim, labels, predicates:{...}}], frequencies:{...}}.
std::string classify_json(const RunConfig& cfg);

struct BerryTaborTables {
  std::string tori_json;
  std::string amplitudes_csv;
};
BerryTaborTables berry_tabor_tables(const RunConfig& cfg, const RunOptions& opts = {});

/// Writes `content` to dir/name, creating dir. Throws IoError.
void write_text_file(const std::string& dir, const std::string& name, const std::string& content);

}  // namespace tracelab
