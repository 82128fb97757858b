#include "test_util.hpp"

#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace aghf;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch_dir(const std::string& name) {
  const fs::path d = fs::temp_directory_path() / ("aghf_test_" + name);
  fs::remove_all(d);
  return d;
}

json minimal_config() {
  return json::parse(R"({"system": "kinematic_unicycle", "x_i": [0,0,0], "x_f": [0,1,0], "T": 1, "lambda": 10,
                         "flow": {"n_t": 11, "s_max": 0.5}})");
}

/// Parses a CSV, checking header, constant width and finite values.
std::vector<std::vector<double>> read_csv(const fs::path& p, std::vector<std::string>* header) {
  std::ifstream in(p);
  std::string line;
  std::getline(in, line);
  std::stringstream hs(line);
  std::string cell;
  header->clear();
  while (std::getline(hs, cell, ',')) header->push_back(cell);
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    std::stringstream ls(line);
    std::vector<double> row;
    while (std::getline(ls, cell, ',')) row.push_back(std::stod(cell));
    EXPECT_EQ(row.size(), header->size()) << p;
    for (double v : row) EXPECT_TRUE(std::isfinite(v)) << p;
    rows.push_back(row);
  }
  return rows;
}

}  // namespace

TEST(Cases, BundledConfigFilesMatchEmbeddedCases) {
  for (const auto& name : case_names()) {
    const fs::path file = fs::path(AGHF_SOURCE_DIR) / "configs" / (name + ".json");
    ASSERT_TRUE(fs::exists(file)) << file;
    EXPECT_EQ(load_run_config(file.string()).raw, load_case(name).config.raw) << name;
    EXPECT_NO_THROW(resolve(load_case(name).config)) << name;
  }
}

TEST(Cases, PaperParameters) {
  const auto pp = load_case("parallel_parking").config;
  EXPECT_EQ(pp.x_i, Vec::Zero(3));
  EXPECT_EQ(pp.x_f, Vec::Unit(3, 1));
  EXPECT_EQ(pp.lambda, 1000.0);
  EXPECT_EQ(pp.T, 5.0);
  const auto du = resolve(load_case("dynamic_unicycle").config);
  Vec xf = Vec::Zero(5);
  xf(1) = -1;
  EXPECT_EQ(du.problem.x_f, xf);
  for (double t : {0.1, 0.25, 0.7}) {
    const Vec v = du.problem.initial_sketch(t);
    EXPECT_NEAR(v(0), std::sin(2 * std::numbers::pi * t), 1e-15);
    EXPECT_NEAR(v(1), -t, 1e-15);
  }
  for (const auto& c : case_names())
    for (const auto& check : load_case(c).expected) EXPECT_EQ(check.criterion[0], 'A') << c;
  EXPECT_THROW(load_case("nope"), Error);
}

TEST(Config, RejectsMalformedInput) {
  auto expect_config_error = [](const json& j) {
    try {
      resolve(parse_run_config(j));
      ADD_FAILURE() << j.dump();
    } catch (const Error& e) {
      EXPECT_EQ(e.category(), ErrorCategory::config) << j.dump();
    }
  };
  json j = minimal_config();
  j.erase("T");
  expect_config_error(j);
  j = minimal_config();
  j["x_f"] = {0, 1};
  expect_config_error(j);
  j = minimal_config();
  j["sketch"] = {{"kind", "spiral"}};
  expect_config_error(j);
  j = minimal_config();
  j["system"] = "bicycle";
  expect_config_error(j);
  j = minimal_config();
  j["flow"]["n_t"] = 3;
  expect_config_error(j);
  j = minimal_config();
  j["flow"]["rhs_form"] = "magic";
  expect_config_error(j);
  // sketch leaves the barrier's feasible set
  j = json::parse(R"({"system": {"augment": "kinematic_unicycle", "u_i": [0, 0], "u_f": [3, 0]},
                      "x_i": [0,0,0], "x_f": [0,1,0], "T": 1, "lambda": 10,
                      "barrier": {"bounds": [{"channel": 0, "u_max": 2}]}})");
  expect_config_error(j);
}

TEST(Config, WaypointSketch) {
  json j = minimal_config();
  j["sketch"] = json::parse(R"({"kind": "waypoints", "points": [[0, 0,0,0], [0.5, 1,0.5,0], [1, 0,1,0]]})");
  const auto r = resolve(parse_run_config(j));
  const Vec v = r.problem.initial_sketch(0.25);
  EXPECT_NEAR(v(0), 0.5, 1e-15);
  EXPECT_NEAR(v(1), 0.25, 1e-15);
  j["sketch"]["points"][2] = {1, 0, 2, 0};
  EXPECT_THROW(resolve(parse_run_config(j)), Error);
}

TEST(Pipeline, ArtifactsAreWellFormedAndReproducible) {
  const auto cfg = parse_run_config(minimal_config());
  const auto a = run_pipeline(cfg);
  const auto b = run_pipeline(cfg);
  const fs::path da = scratch_dir("a"), db = scratch_dir("b");
  write_artifacts(a, da);
  write_artifacts(b, db);
  for (const char* f : {"flow_history.csv", "path_final.csv", "controls.csv", "integrated.csv"})
    EXPECT_EQ(slurp(da / f), slurp(db / f)) << f;

  std::vector<std::string> h;
  auto rows = read_csv(da / "flow_history.csv", &h);
  EXPECT_EQ(h, (std::vector<std::string>{"s", "action", "residual_max", "step_accepted"}));
  rows = read_csv(da / "controls.csv", &h);
  EXPECT_EQ(h, (std::vector<std::string>{"t", "u_1", "u_2", "uc_1"}));
  EXPECT_EQ(rows.size(), 11u);
  rows = read_csv(da / "path_final.csv", &h);
  EXPECT_EQ(h, (std::vector<std::string>{"t", "x_1", "x_2", "x_3"}));
  rows = read_csv(da / "integrated.csv", &h);
  EXPECT_EQ(h, (std::vector<std::string>{"t", "xtilde_1", "xtilde_2", "xtilde_3"}));
  size_t snaps = 0;
  for (const auto& e : fs::directory_iterator(da / "snapshots")) {
    read_csv(e.path(), &h);
    ++snaps;
  }
  EXPECT_EQ(snaps, a.flow.snapshots.size());

  const json s = json::parse(slurp(da / "summary.json"));
  EXPECT_EQ(s["config"], cfg.raw);
  for (const char* key : {"endpoint_error", "action_initial", "action_final", "energy_u", "energy_uc", "bound",
                          "converged", "wall_time"})
    EXPECT_TRUE(s.contains(key)) << key;
  EXPECT_EQ(slurp(da / "summary.json").find('\r'), std::string::npos);
}

TEST(Pipeline, OutputDirectoryOverride) {
  auto cfg = parse_run_config(minimal_config());
  cfg.output_dir = "somewhere";
  ::setenv("AGHF_OUTPUT_DIR", "/tmp/elsewhere", 1);
  EXPECT_EQ(output_dir_for(cfg), fs::path("/tmp/elsewhere"));
  ::unsetenv("AGHF_OUTPUT_DIR");
  EXPECT_EQ(output_dir_for(cfg), fs::path("somewhere"));
}

TEST(Pipeline, ExitCodes) {
  EXPECT_EQ(exit_code(ErrorCategory::config), 2);
  EXPECT_EQ(exit_code(ErrorCategory::stiffness), 3);
  EXPECT_EQ(exit_code(ErrorCategory::singular_frame), 3);
  EXPECT_EQ(exit_code(ErrorCategory::constraint), 4);
}

TEST(Sweep, SingleElementMatchesRun) {
  const auto cfg = parse_run_config(minimal_config());
  const auto rows = sweep(cfg, {10.0});
  const auto run = run_pipeline(cfg);
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_TRUE(rows[0].error.empty());
  EXPECT_EQ(rows[0].endpoint_error, run.plan.endpoint_error);
  EXPECT_EQ(rows[0].action_final, run.flow.action_final);
  const fs::path d = scratch_dir("sweep");
  write_sweep_csv(rows, d / "sweep.csv");
  std::vector<std::string> h;
  EXPECT_EQ(read_csv(d / "sweep.csv", &h).size(), 1u);
  EXPECT_EQ(h, (std::vector<std::string>{"lambda", "endpoint_error", "action_final", "energy_uc", "bound"}));
}

TEST(Sweep, ErrorsAreRecordedPerRow) {
  auto cfg = parse_run_config(minimal_config());
  const auto rows = sweep(cfg, {-1.0, 10.0}, false);
  EXPECT_FALSE(rows[0].error.empty());
  EXPECT_TRUE(rows[1].error.empty());
}

TEST(Sweep, LogLogSlopeOracle) {
  const std::vector<double> l{100, 1000, 10000};
  std::vector<double> e;
  for (double x : l) e.push_back(3.0 * std::pow(x, -0.5));
  EXPECT_NEAR(loglog_slope(l, e), -0.5, 1e-12);
  e = {1.0, 0.2, 0.1};
  // hand least squares on (2, 0), (3, log10 0.2), (4, -1) in log10 units
  EXPECT_NEAR(loglog_slope(l, e), (std::log10(0.1) - 0.0) / 2.0, 1e-12);
}
