#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <string>

#include "tracelab/tracelab.h"

namespace {

const char* kConfig = R"({
  "system": {"type": "quadratic", "w": [1, 1]},
  "E": 1, "epsilon": 0.5, "hs": [0.02, 0.01, 0.02],
  "fhat": {"type": "triangle", "center": 6.283185307179586, "halfwidth": 0.5}
})";

std::string take(char* s) {
  std::string out(s);
  tl_string_free(s);
  return out;
}

}  // namespace

TEST(CApi, ParseErrorsSetStatusAndMessage) {
  tl_config* cfg = reinterpret_cast<tl_config*>(1);
  EXPECT_EQ(tl_config_parse(R"({"system": {"type": "quadratic", "w": []}})", &cfg), TL_CONFIG_ERROR);
  EXPECT_EQ(cfg, nullptr);
  EXPECT_NE(std::string(tl_last_error()).find("/system/w"), std::string::npos);
  EXPECT_EQ(tl_config_parse(nullptr, &cfg), TL_INVALID_ARGUMENT);
  EXPECT_EQ(tl_config_load("/nonexistent.json", &cfg), TL_IO_ERROR);
  EXPECT_STREQ(tl_status_name(TL_OK), "ok");
}

TEST(CApi, SweepRowsComponentsAndWarnings) {
  tl_config* cfg = nullptr;
  ASSERT_EQ(tl_config_parse(kConfig, &cfg), TL_OK);
  EXPECT_EQ(tl_config_warning_count(cfg), 1u);
  tl_report* rep = nullptr;
  tl_run_options o = tl_run_options_default();
  ASSERT_EQ(tl_sweep(cfg, &o, &rep), TL_OK) << tl_last_error();
  ASSERT_EQ(tl_report_row_count(rep), 2u);
  tl_row r;
  ASSERT_EQ(tl_report_row(rep, 1, &r), TL_OK);
  EXPECT_EQ(r.h, 0.01);
  EXPECT_TRUE(r.calibration);
  EXPECT_GT(r.n_eigenvalues, 0);
  EXPECT_EQ(tl_report_row(rep, 2, &r), TL_INVALID_ARGUMENT);
  ASSERT_EQ(tl_report_component_count(rep), 1u);
  tl_component c;
  ASSERT_EQ(tl_report_component(rep, 0, &c), TL_OK);
  EXPECT_TRUE(c.has_phase);
  EXPECT_TRUE(c.has_track_phase);
  EXPECT_EQ(c.phase, c.track_phase);
  EXPECT_NEAR(c.t, 2 * M_PI, 1e-9);
  EXPECT_FALSE(c.is_torus);
  EXPECT_GE(tl_report_warning_count(rep), 1u);

  char* csv = nullptr;
  ASSERT_EQ(tl_report_csv(rep, &csv), TL_OK);
  EXPECT_EQ(take(csv).rfind("h,quantum_re", 0), 0u);

  const auto dir = std::filesystem::temp_directory_path() / "tracelab_capi_test";
  std::filesystem::remove_all(dir);
  ASSERT_EQ(tl_report_write(rep, dir.c_str()), TL_OK);
  EXPECT_TRUE(std::filesystem::exists(dir / "report.csv"));
  EXPECT_TRUE(std::filesystem::exists(dir / "components.json"));
  EXPECT_FALSE(std::filesystem::exists(dir / "plot.gnuplot"));
  std::filesystem::remove_all(dir);
  tl_report_free(rep);
  tl_config_free(cfg);
}

TEST(CApi, CompareUsesTrackPhases) {
  tl_config* cfg = nullptr;
  ASSERT_EQ(tl_config_parse(kConfig, &cfg), TL_OK);
  tl_report* rep = nullptr;
  ASSERT_EQ(tl_compare(cfg, nullptr, &rep), TL_OK) << tl_last_error();
  tl_row r;
  ASSERT_EQ(tl_report_row(rep, 1, &r), TL_OK);
  EXPECT_FALSE(r.calibration);
  EXPECT_LT(r.rel_err, 0.1);
  tl_report_free(rep);
  tl_config_free(cfg);
}

TEST(CApi, AnalyzeClassifyBerryTabor) {
  tl_config* cfg = nullptr;
  ASSERT_EQ(tl_config_parse(kConfig, &cfg), TL_OK);
  char* text = nullptr;
  ASSERT_EQ(tl_analyze_quadratic(cfg, nullptr, &text), TL_OK);
  EXPECT_NE(take(text).find("\"track\""), std::string::npos);
  ASSERT_EQ(tl_classify(cfg, &text), TL_OK);
  EXPECT_NE(take(text).find("\"periods\""), std::string::npos);
  char* amps = nullptr;
  EXPECT_EQ(tl_berry_tabor(cfg, nullptr, &text, &amps), TL_CONFIG_ERROR);
  tl_config_free(cfg);

  ASSERT_EQ(tl_config_parse(R"({"system": {"type": "torus", "n": 2}, "E": 1, "epsilon": 0.5,
    "fhat": {"type": "triangle", "center": 4.442882938158366, "halfwidth": 0.5}})", &cfg), TL_OK);
  ASSERT_EQ(tl_berry_tabor(cfg, nullptr, &text, &amps), TL_OK) << tl_last_error();
  EXPECT_NE(take(text).find("\"tori\""), std::string::npos);
  EXPECT_EQ(take(amps).rfind("M,T,", 0), 0u);
  EXPECT_EQ(tl_analyze_quadratic(cfg, nullptr, &text), TL_CONFIG_ERROR);
  tl_config_free(cfg);
}
