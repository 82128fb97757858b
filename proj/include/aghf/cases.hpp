#pragma once

#include "aghf/config.hpp"
#include "aghf/error.hpp"

#include <string>
#include <vector>

namespace aghf {

/// A named scalar check on a bundled run; `criterion` is the acceptance id.
struct ExpectedCheck {
  std::string name;
  std::string criterion;
  double threshold = 0.0;
};

struct BenchmarkCase {
  std::string name;
  std::string description;
  double wall_budget_s = 0.0;
  std::vector<ExpectedCheck> expected;
  RunConfig config;
};

namespace detail {

struct CaseSource {
  const char* name;
  const char* description;
  double wall_budget_s;
  std::vector<ExpectedCheck> expected;
  const char* config_json;
};

// Same documents as configs/<name>.json.
inline const std::vector<CaseSource>& case_sources() {
  static const std::vector<CaseSource> sources = {
  {"parallel_parking", "Parallel parking of the constant-velocity unicycle, straight sketch.", 120.0, {{"action_monotone", "A1", 1e-08}, {"endpoint_error_max", "A6", 0.02}, {"bound_dominates", "A8", 0}, {"complement_suppression", "A9", 1e-08}, {"grid_order_min", "A12", 1.7}},
   R"json({
  "name": "parallel_parking",
  "system": "constant_velocity_unicycle",
  "x_i": [0, 0, 0],
  "x_f": [0, 1, 0],
  "T": 5,
  "lambda": 1000,
  "sketch": {"kind": "straight_line"},
  "flow": {"n_t": 201, "s_max": 1e8, "residual_tol": 1e-12, "steady_tol": 1e-7},
  "bound": {"L_drift": 1, "L_control": 0},
  "outputs": {"dir": "runs/parallel_parking"}
}
)json"},
  {"dynamic_unicycle", "Dynamic unicycle, partial sinusoid sketch.", 120.0, {{"action_monotone", "A1", 1e-08}, {"complement_suppression", "A9", 1e-08}, {"endpoint_error_max", "A10", 0.05}},
   R"json({
  "name": "dynamic_unicycle",
  "system": "dynamic_unicycle",
  "x_i": [0, 0, 0, 0, 0],
  "x_f": [0, -1, 0, 0, 0],
  "T": 1,
  "lambda": 50000,
  "sketch": {"kind": "sinusoid_x", "amplitude": 1, "cycles": 1},
  "flow": {"n_t": 101, "s_max": 1e8, "residual_tol": 1e-12, "steady_tol": 1e-7},
  "outputs": {"dir": "runs/dynamic_unicycle"}
}
)json"},
  {"constrained_v", "Dynamic extension of the kinematic unicycle with |u1| < 2.", 120.0, {{"action_monotone", "A1", 1e-08}, {"strictly_feasible", "A11", 0}, {"near_bound_fraction_min", "A11", 0.3}},
   R"json({
  "name": "constrained_v",
  "system": {"augment": "kinematic_unicycle", "u_i": [0, 0], "u_f": [0, 0]},
  "x_i": [0, 0, 0],
  "x_f": [0, -1, 0],
  "T": 1,
  "lambda": 50000,
  "sketch": {"kind": "sinusoid_x", "amplitude": 1, "cycles": 1},
  "barrier": {"form": "reciprocal_quadratic", "bounds": [{"channel": 0, "u_max": 2}]},
  "flow": {"n_t": 101, "s_max": 1e8, "residual_tol": 1e-12, "steady_tol": 1e-7, "rtol": 0.1, "atol": 0.1},
  "outputs": {"dir": "runs/constrained_v"}
}
)json"},
  {"constrained_steer", "Dynamic extension of the kinematic unicycle with |u2| < pi/2.", 120.0, {{"action_monotone", "A1", 1e-08}, {"strictly_feasible", "A11", 0}, {"near_bound_fraction_min", "A11", 0.3}},
   R"json({
  "name": "constrained_steer",
  "system": {"augment": "kinematic_unicycle", "u_i": [0, 0], "u_f": [0, 0]},
  "x_i": [0, 0, 0],
  "x_f": [0, -1, 0],
  "T": 1,
  "lambda": 50000,
  "sketch": {"kind": "sinusoid_x", "amplitude": 1, "cycles": 1},
  "barrier": {"form": "reciprocal_quadratic", "bounds": [{"channel": 1, "u_max": 1.5707963267948966}]},
  "flow": {"n_t": 101, "s_max": 1e8, "residual_tol": 1e-12, "steady_tol": 1e-7, "rtol": 0.1, "atol": 0.1},
  "outputs": {"dir": "runs/constrained_steer"}
}
)json"},
  {"ghf_sanity", "Single integrator with a flat metric; the straight sketch is already steady.", 10.0, {{"action_monotone", "A1", 1e-08}, {"complement_suppression", "A9", 1e-08}},
   R"json({
  "name": "ghf_sanity",
  "system": "single_integrator",
  "x_i": [0, 0],
  "x_f": [1, 2],
  "T": 1,
  "lambda": 1,
  "sketch": {"kind": "straight_line"},
  "flow": {"n_t": 21, "s_max": 10},
  "outputs": {"dir": "runs/ghf_sanity"}
}
)json"},
  {"driftless_unicycle", "Kinematic unicycle sideways shift from a sinusoidal sketch; no drift.", 60.0, {{"action_monotone", "A1", 1e-08}, {"complement_suppression", "A9", 1e-08}},
   R"json({
  "name": "driftless_unicycle",
  "system": "kinematic_unicycle",
  "x_i": [0, 0, 0],
  "x_f": [0, 1, 0],
  "T": 1,
  "lambda": 100,
  "sketch": {"kind": "sinusoid_x", "amplitude": 0.5, "cycles": 1},
  "flow": {"n_t": 51, "s_max": 1e6, "residual_tol": 1e-12, "steady_tol": 1e-7},
  "outputs": {"dir": "runs/driftless_unicycle"}
}
)json"},
  };
  return sources;
}

}  // namespace detail

inline std::vector<std::string> case_names() {
  std::vector<std::string> out;
  for (const auto& c : detail::case_sources()) out.emplace_back(c.name);
  return out;
}

inline BenchmarkCase load_case(const std::string& name) {
  for (const auto& c : detail::case_sources()) {
    if (name != c.name) continue;
    return {c.name, c.description, c.wall_budget_s, c.expected, parse_run_config(json::parse(c.config_json))};
  }
  std::string valid;
  for (const auto& n : case_names()) valid += (valid.empty() ? "" : ", ") + n;
  throw Error(ErrorCategory::lookup, "unknown case '" + name + "'; valid names: " + valid);
}

}  // namespace aghf
