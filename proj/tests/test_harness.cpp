#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "tracelab/error.hpp"
#include "tracelab/harness.hpp"

using namespace tracelab;
using json = nlohmann::json;

namespace {

ErrorCode code_of(const std::string& text, std::string* msg = nullptr) {
  try {
    parse_config(text);
  } catch (const Error& e) {
    if (msg) *msg = e.what();
    return e.code();
  }
  return ErrorCode{};
}

const char* kPeriodicFlow = R"({
  "system": {"type": "quadratic", "w": [1, 1]},
  "E": 1, "epsilon": 0.5, "hs": [0.02, 0.01],
  "fhat": {"type": "triangle", "center": 6.283185307179586, "halfwidth": 0.5}
})";

}  // namespace

TEST(Config, ParsesAndNormalizesHs) {
  const auto cfg = parse_config(R"({
    "system": {"type": "quadratic", "w": [1, 1.4142135623730951]},
    "E": 1, "psi": {"halfwidth": 0.5}, "hs": [0.01, 0.02, 0.01],
    "fhat": {"type": "bump", "center": 0, "halfwidth": 1},
    "tolerances": {"rank_tol": 1e-9}
  })");
  EXPECT_EQ(cfg.hs, (std::vector<double>{0.02, 0.01}));
  ASSERT_EQ(cfg.warnings.size(), 1u);
  EXPECT_NE(cfg.warnings[0].find("duplicate"), std::string::npos);
  EXPECT_EQ(cfg.epsilon, 0.5);
  EXPECT_EQ(cfg.fhat.kind, WindowKind::Bump);
  EXPECT_EQ(cfg.tolerances.rank_tol, 1e-9);
  EXPECT_EQ(cfg.system.n, 2);
}

TEST(Config, ErrorsCarryPaths) {
  std::string msg;
  const std::string base = R"("system": {"type": "quadratic", "w": [1]}, "E": 1, "epsilon": 0.5,
                              "fhat": {"type": "triangle", "center": 0, "halfwidth": 1})";
  EXPECT_EQ(code_of("{" + base + R"(, "hs": []})", &msg), ErrorCode::ConfigError);
  EXPECT_NE(msg.find("/hs"), std::string::npos);
  EXPECT_EQ(code_of("{" + base + R"(, "hs": [0.1], "colour": 1})", &msg), ErrorCode::ConfigError);
  EXPECT_NE(msg.find("/colour"), std::string::npos);
  EXPECT_EQ(code_of("{" + base + R"(, "hs": [0.1, -1]})", &msg), ErrorCode::ConfigError);
  EXPECT_NE(msg.find("/hs/1"), std::string::npos);
  EXPECT_EQ(code_of("{" + base + R"(, "psi": {"halfwidth": 0.3}})", &msg), ErrorCode::ConfigError);
  EXPECT_NE(msg.find("/psi/halfwidth"), std::string::npos);
  EXPECT_EQ(code_of(R"({"system": {"type": "quadratic", "w": [1, 0]}})", &msg), ErrorCode::ConfigError);
  EXPECT_NE(msg.find("/system/w/1"), std::string::npos);
  EXPECT_EQ(code_of(R"({"system": {"type": "blob"}})", &msg), ErrorCode::ConfigError);
  EXPECT_NE(msg.find("/system/type"), std::string::npos);
  EXPECT_EQ(code_of("{not json"), ErrorCode::ConfigError);
  EXPECT_EQ(code_of("{" + base + "}"), ErrorCode{});
}

TEST(Config, LoadMissingFile) {
  try {
    load_config("/nonexistent/config.json");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::IoError);
  }
}

TEST(Sweep, EmptyHsAndActionAngleRejected) {
  auto cfg = parse_config(kPeriodicFlow);
  cfg.hs.clear();
  EXPECT_THROW(run_sweep(cfg), Error);
  const auto aa = parse_config(R"({"system": {"type": "action-angle", "builtin": "flat", "n": 2},
    "E": 1, "epsilon": 0.5, "hs": [0.1], "fhat": {"type": "triangle", "center": 4.4, "halfwidth": 0.5}})");
  try {
    run_sweep(aa);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ConfigError);
  }
}

TEST(Sweep, PeriodicFlowCalibrationMatchesTrack) {
  const auto cfg = parse_config(kPeriodicFlow);
  const auto rep = run_sweep(cfg);
  ASSERT_EQ(rep.rows.size(), 2u);
  ASSERT_TRUE(rep.calibration.has_value());
  EXPECT_TRUE(rep.rows[1].calibration);
  ASSERT_EQ(rep.model.components.size(), 1u);
  const auto& c = rep.model.components[0];
  EXPECT_EQ(c.phase_source, PhaseSource::Calibrated);
  ASSERT_TRUE(c.track_phase.has_value());
  EXPECT_EQ(*c.phase, *c.track_phase);
  EXPECT_LT(rep.rows[0].rel_err, 0.15);
  EXPECT_LT(rep.rows[1].rel_err, rep.rows[0].rel_err);

  const auto tracked = run_sweep(cfg, {}, PhasePolicy::Track);
  EXPECT_FALSE(tracked.calibration.has_value());
  EXPECT_EQ(tracked.rows[0].semiclassical, rep.rows[0].semiclassical);
}

TEST(Sweep, CsvDeterministicAcrossThreads) {
  const auto cfg = parse_config(kPeriodicFlow);
  RunOptions one, many;
  many.threads = 8;
  const auto a = report_csv(run_sweep(cfg, one));
  const auto b = report_csv(run_sweep(cfg, many));
  EXPECT_EQ(a, b);
  EXPECT_EQ(a.substr(0, a.find('\n')), "h,quantum_re,quantum_im,semicl_re,semicl_im,abs_err,rel_err,n_eigenvalues,wall_ms");
  EXPECT_EQ(std::count(a.begin(), a.end(), '\n'), 3);
}

TEST(Sweep, WeylTermOnFlatTorus) {
  const auto cfg = parse_config(R"({"system": {"type": "torus", "n": 2},
    "E": 1, "epsilon": 0.5, "hs": [0.02], "fhat": {"type": "bump", "center": 0, "halfwidth": 1}})");
  const auto rep = run_sweep(cfg);
  ASSERT_EQ(rep.model.components.size(), 1u);
  EXPECT_EQ(rep.model.components[0].phase_source, PhaseSource::Fixed);
  EXPECT_LT(rep.rows[0].rel_err, 0.05);
}

TEST(Reports, ComponentsJsonShape) {
  const auto rep = run_sweep(parse_config(kPeriodicFlow));
  const auto j = json::parse(components_json(rep));
  ASSERT_EQ(j["components"].size(), 1u);
  const auto& c = j["components"][0];
  EXPECT_NEAR(c["T"].get<double>(), 2 * M_PI, 1e-9);
  EXPECT_EQ(c["dim"], 3);
  EXPECT_TRUE(c["phase"].is_number_integer());
  EXPECT_EQ(c["contributions"].size(), 2u);
  EXPECT_TRUE(j["calibration"].is_object());
  EXPECT_EQ(j["seed"], 0);
}

TEST(Reports, FormatDoubleRoundTrips) {
  for (double x : {0.1, 1.0 / 3.0, 2 * M_PI, -1e-300, 12345.0}) {
    EXPECT_EQ(std::stod(format_double(x)), x);
  }
  EXPECT_EQ(format_double(0.5), "0.5");
  EXPECT_NE(plot_script().find("report.csv"), std::string::npos);
}

TEST(Classify, CounterexampleAndVerdict) {
  auto cfg = parse_config(R"({"system": {"type": "quadratic", "w": [1, 2]},
    "E": 1, "epsilon": 0.5, "fhat": {"type": "triangle", "center": 0, "halfwidth": 1},
    "t_range": [0.1, 7]})");
  const auto j = json::parse(classify_json(cfg));
  EXPECT_TRUE(j["frequencies"]["all_rational"].get<bool>());
  ASSERT_FALSE(j["periods"].empty());
  bool saw_2pi = false;
  for (const auto& p : j["periods"]) {
    EXPECT_TRUE(p["predicates"].contains("sigma_normal"));
    if (std::abs(p["T"].get<double>() - 2 * M_PI) < 1e-9) saw_2pi = true;
  }
  EXPECT_TRUE(saw_2pi);
  cfg.system.type = SystemType::Torus;
  EXPECT_THROW(classify_json(cfg), Error);
}

TEST(BerryTabor, TablesOnFlatTorus) {
  const auto cfg = parse_config(R"({"system": {"type": "action-angle", "builtin": "flat", "n": 2},
    "E": 1, "epsilon": 0.5, "fhat": {"type": "triangle", "center": 4.442882938158366, "halfwidth": 0.5},
    "M_bound": 2})");
  const auto t = berry_tabor_tables(cfg);
  const auto j = json::parse(t.tori_json);
  ASSERT_EQ(j["tori"].size(), 4u);
  for (const auto& torus : j["tori"]) {
    EXPECT_NEAR(torus["curvature_frequencies"].get<double>(), -1 / std::sqrt(2.0), 1e-9);
    EXPECT_NEAR(torus["T"].get<double>(), 2 * M_PI / std::sqrt(2.0), 1e-9);
  }
  EXPECT_EQ(std::count(t.amplitudes_csv.begin(), t.amplitudes_csv.end(), '\n'), 5);
}

TEST(Files, WriteTextFile) {
  const auto dir = std::filesystem::temp_directory_path() / "tracelab_harness_test" / "nested";
  std::filesystem::remove_all(dir.parent_path());
  write_text_file(dir.string(), "a.txt", "hello\n");
  std::ifstream in(dir / "a.txt");
  std::string s;
  std::getline(in, s);
  EXPECT_EQ(s, "hello");
  std::filesystem::remove_all(dir.parent_path());
  EXPECT_THROW(write_text_file("/proc/forbidden_dir", "x", "y"), Error);
}

TEST(Sweep, TorusFamiliesCalibrateTogether) {
  const auto cfg = parse_config(R"({"system": {"type": "torus", "n": 2},
    "E": 1, "epsilon": 0.5, "hs": [0.02, 0.01],
    "fhat": {"type": "triangle", "center": 4.442882938158366, "halfwidth": 2.2}, "M_bound": 2})");
  const auto rep = run_sweep(cfg);
  ASSERT_EQ(rep.model.components.size(), 8u);
  ASSERT_TRUE(rep.calibration.has_value());
  EXPECT_EQ(rep.calibration->choices.size(), 2u);
  for (const auto& c : rep.model.components) EXPECT_EQ(c.phase_source, PhaseSource::Calibrated);
}

TEST(Sweep, TrackPolicyLeavesToriUnresolved) {
  const auto cfg = parse_config(R"({"system": {"type": "torus", "n": 2},
    "E": 1, "epsilon": 0.5, "hs": [0.02],
    "fhat": {"type": "triangle", "center": 4.442882938158366, "halfwidth": 0.5}})");
  try {
    run_sweep(cfg, {}, PhasePolicy::Track);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::UnresolvedPhase);
  }
}
