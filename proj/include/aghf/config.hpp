#pragma once

#include "aghf/barrier.hpp"
#include "aghf/constraints.hpp"
#include "aghf/error.hpp"
#include "aghf/extraction.hpp"
#include "aghf/flow.hpp"
#include "aghf/metric.hpp"
#include "aghf/system.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <fstream>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace aghf {

using json = nlohmann::json;

/// Run configuration. `raw` is the document as read, echoed into summary.json.
///
/// Schema (all keys except system, x_i, x_f, T, lambda optional):
///   name: string
///   system: builtin name, or {"augment": builtin name, "u_i": [...], "u_f": [...]}
///   x_i, x_f: arrays (base states for augmented systems)
///   T, lambda: numbers
///   sketch: {"kind": "straight_line"}
///         | {"kind": "sinusoid_x", "amplitude": a, "cycles": c}
///         | {"kind": "waypoints", "points": [[t, x_1, ..., x_n], ...]}
///   flow: FlowConfig fields by name, plus rtol / atol of the step controller
///   barrier: {"form": "reciprocal_quadratic" | "additive",
///             "bounds": [{"channel": j, "u_max": v} | {"index": i, "u_max": v}, ...]}
///   bound: {"C", "M", "L_drift", "L_control"}  (overrides)
///   outputs: {"dir": path}
///   integration_substeps: RK4 steps per grid interval
struct RunConfig {
  json raw;
  std::string name = "run";
  std::string system_name;
  bool augmented = false;
  Vec u_i, u_f;
  Vec x_i, x_f;
  double T = 1.0;
  double lambda = 1.0;
  json sketch = json{{"kind", "straight_line"}};
  FlowConfig flow;
  json barrier;  // null when absent
  std::optional<double> bound_C, bound_M, bound_L_drift, bound_L_control;
  std::string output_dir = "runs/run";
  int substeps = 10;
};

namespace detail {

inline Error config_error(const std::string& msg) { return Error(ErrorCategory::config, msg); }

inline Vec json_vec(const json& j, const std::string& key) {
  if (!j.is_array()) throw config_error("'" + key + "' must be an array of numbers");
  Vec v(static_cast<Eigen::Index>(j.size()));
  for (size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) throw config_error("'" + key + "' must be an array of numbers");
    v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
  }
  return v;
}

template <class T>
void read_opt(const json& j, const char* key, T* out) {
  if (!j.contains(key)) return;
  try {
    *out = j.at(key).get<T>();
  } catch (const json::exception&) {
    throw config_error(std::string("flow.") + key + " has the wrong type");
  }
}

inline RhsForm parse_rhs_form(const std::string& s) {
  if (s == "euler_lagrange") return RhsForm::euler_lagrange;
  if (s == "covariant") return RhsForm::covariant;
  throw config_error("flow.rhs_form must be euler_lagrange or covariant, got '" + s + "'");
}

inline Stepper parse_stepper(const std::string& s) {
  if (s == "linearly_implicit") return Stepper::linearly_implicit;
  if (s == "explicit_euler") return Stepper::explicit_euler;
  throw config_error("flow.stepper must be linearly_implicit or explicit_euler, got '" + s + "'");
}

inline FlowConfig parse_flow(const json& j) {
  FlowConfig c;
  if (j.is_null()) return c;
  if (!j.is_object()) throw config_error("'flow' must be an object");
  read_opt(j, "n_t", &c.n_t);
  read_opt(j, "s_max", &c.s_max);
  read_opt(j, "initial_ds", &c.initial_ds);
  read_opt(j, "ds_min", &c.ds_min);
  read_opt(j, "ds_max", &c.ds_max);
  read_opt(j, "residual_tol", &c.residual_tol);
  read_opt(j, "steady_tol", &c.steady_tol);
  read_opt(j, "jacobian_reuse", &c.jacobian_reuse);
  read_opt(j, "action_log_stride", &c.action_log_stride);
  read_opt(j, "snapshot_count", &c.snapshot_count);
  read_opt(j, "max_steps", &c.max_steps);
  read_opt(j, "rtol", &c.control.rtol);
  read_opt(j, "atol", &c.control.atol);
  read_opt(j, "safety", &c.control.safety);
  if (j.contains("rhs_form")) c.rhs_form = parse_rhs_form(j["rhs_form"].get<std::string>());
  if (j.contains("stepper")) c.stepper = parse_stepper(j["stepper"].get<std::string>());
  return c;
}

}  // namespace detail

inline RunConfig parse_run_config(const json& j) {
  using detail::config_error;
  if (!j.is_object()) throw config_error("config must be a JSON object");
  for (const char* key : {"system", "x_i", "x_f", "T", "lambda"})
    if (!j.contains(key)) throw config_error(std::string("missing required key '") + key + "'");
  RunConfig c;
  c.raw = j;
  try {
    c.name = j.value("name", c.name);
    const json& sys = j["system"];
    if (sys.is_string()) {
      c.system_name = sys.get<std::string>();
    } else if (sys.is_object() && sys.contains("augment")) {
      c.augmented = true;
      c.system_name = sys["augment"].get<std::string>();
      if (!sys.contains("u_i") || !sys.contains("u_f"))
        throw config_error("augmented system needs boundary controls u_i and u_f");
      c.u_i = detail::json_vec(sys["u_i"], "system.u_i");
      c.u_f = detail::json_vec(sys["u_f"], "system.u_f");
    } else {
      throw config_error("'system' must be a builtin name or {\"augment\": name, ...}");
    }
    c.x_i = detail::json_vec(j["x_i"], "x_i");
    c.x_f = detail::json_vec(j["x_f"], "x_f");
    if (!j["T"].is_number() || !j["lambda"].is_number()) throw config_error("'T' and 'lambda' must be numbers");
    c.T = j["T"].get<double>();
    c.lambda = j["lambda"].get<double>();
    if (j.contains("sketch")) c.sketch = j["sketch"];
    c.flow = detail::parse_flow(j.value("flow", json()));
    if (j.contains("barrier")) c.barrier = j["barrier"];
    if (j.contains("bound")) {
      const json& b = j["bound"];
      if (b.contains("C")) c.bound_C = b["C"].get<double>();
      if (b.contains("M")) c.bound_M = b["M"].get<double>();
      if (b.contains("L_drift")) c.bound_L_drift = b["L_drift"].get<double>();
      if (b.contains("L_control")) c.bound_L_control = b["L_control"].get<double>();
    }
    c.output_dir = "runs/" + c.name;
    if (j.contains("outputs")) c.output_dir = j["outputs"].value("dir", c.output_dir);
    c.substeps = j.value("integration_substeps", c.substeps);
  } catch (const json::exception& e) {
    throw config_error(std::string("malformed config: ") + e.what());
  }
  return c;
}

inline RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCategory::config, "cannot open config '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw Error(ErrorCategory::config, "cannot parse '" + path + "': " + e.what());
  }
  return parse_run_config(j);
}

/// Everything needed to run the pipeline, built from a RunConfig.
struct ResolvedRun {
  PlanningProblem problem;
  MetricField metric;
  FlowConfig flow;
  PlanOptions plan;
};

namespace detail {

/// Sketch over the base states (size n_base) from x_i to x_f.
inline std::function<Vec(double)> make_sketch(const json& s, const Vec& x_i, const Vec& x_f, double T) {
  const std::string kind = s.value("kind", "straight_line");
  auto line = [x_i, x_f, T](double t) -> Vec { return x_i + (x_f - x_i) * (t / T); };
  if (kind == "straight_line") return line;
  if (kind == "sinusoid_x") {
    const double a = s.value("amplitude", 1.0), cycles = s.value("cycles", 1.0);
    return [line, a, cycles, T](double t) -> Vec {
      Vec v = line(t);
      v(0) += a * std::sin(2.0 * std::numbers::pi * cycles * t / T);
      return v;
    };
  }
  if (kind == "waypoints") {
    if (!s.contains("points") || !s["points"].is_array() || s["points"].size() < 2)
      throw config_error("waypoint sketch needs at least two points [t, x_1, ..., x_n]");
    std::vector<double> ts;
    std::vector<Vec> xs;
    for (const auto& p : s["points"]) {
      const Vec row = json_vec(p, "sketch.points");
      if (row.size() != x_i.size() + 1) throw config_error("waypoint rows must be [t, x_1, ..., x_n]");
      if (!ts.empty() && !(row(0) > ts.back())) throw config_error("waypoint times must increase");
      ts.push_back(row(0));
      xs.push_back(row.tail(x_i.size()));
    }
    if (std::abs(ts.front()) > 1e-12 || std::abs(ts.back() - T) > 1e-12)
      throw config_error("waypoints must start at t = 0 and end at t = T");
    if ((xs.front() - x_i).cwiseAbs().maxCoeff() > 1e-12 || (xs.back() - x_f).cwiseAbs().maxCoeff() > 1e-12)
      throw config_error("waypoints must start at x_i and end at x_f");
    return [ts, xs](double t) -> Vec {
      size_t k = 1;
      while (k + 1 < ts.size() && t > ts[k]) ++k;
      const double a = std::clamp((t - ts[k - 1]) / (ts[k] - ts[k - 1]), 0.0, 1.0);
      return xs[k - 1] + a * (xs[k] - xs[k - 1]);
    };
  }
  throw config_error("unknown sketch kind '" + kind + "' (straight_line, sinusoid_x, waypoints)");
}

inline std::optional<BarrierSpec> make_barrier(const json& b, int n_state, int n_base) {
  if (b.is_null()) return std::nullopt;
  BarrierSpec spec;
  const std::string form = b.value("form", "reciprocal_quadratic");
  if (form == "reciprocal_quadratic") spec.form = BarrierForm::reciprocal_quadratic;
  else if (form == "additive") spec.form = BarrierForm::additive;
  else throw config_error("barrier.form must be reciprocal_quadratic or additive");
  if (!b.contains("bounds") || !b["bounds"].is_array()) throw config_error("barrier.bounds must be an array");
  for (const auto& e : b["bounds"]) {
    const double umax = e.at("u_max").get<double>();
    if (!(umax > 0)) throw config_error("barrier u_max must be positive");
    int index;
    std::string label;
    if (e.contains("channel")) {
      const int ch = e["channel"].get<int>();
      index = n_base + ch;
      label = "|u" + std::to_string(ch + 1) + "| < " + std::to_string(umax);
    } else if (e.contains("index")) {
      index = e["index"].get<int>();
      label = "|x" + std::to_string(index + 1) + "| < " + std::to_string(umax);
    } else {
      throw config_error("barrier bounds need 'channel' or 'index'");
    }
    if (index < 0 || index >= n_state) throw config_error("barrier bound refers to state " + std::to_string(index) + " out of range");
    spec.constraints.push_back(magnitude_constraint(index, umax, label));
  }
  return spec;
}

}  // namespace detail

/// Builds the problem, metric and solver settings, checking every
/// precondition including feasibility of the sketch under the barrier.
inline ResolvedRun resolve(const RunConfig& c) {
  using detail::config_error;
  ResolvedRun r;
  try {
    const ControlSystem base = builtin_system(c.system_name);
    if (c.x_i.size() != base.n || c.x_f.size() != base.n)
      throw config_error("x_i and x_f must have size " + std::to_string(base.n) + " for " + base.name);
    if (!(c.T > 0)) throw config_error("T must be positive");
    if (!(c.lambda > 0)) throw config_error("lambda must be positive");
    if (c.substeps < 1) throw config_error("integration_substeps must be >= 1");
    validate(c.flow);
    auto sketch = detail::make_sketch(c.sketch, c.x_i, c.x_f, c.T);
    if (c.augmented) {
      if (c.u_i.size() != base.m || c.u_f.size() != base.m)
        throw config_error("u_i and u_f must have size m = " + std::to_string(base.m));
      const auto barrier = detail::make_barrier(c.barrier, base.n + base.m, base.n);
      const AugmentedProblem ap = augment(base, {c.u_i, c.u_f}, barrier);
      r.problem = augmented_planning_problem(ap, c.x_i, c.x_f, c.T, c.lambda, sketch);
      r.metric = augmented_metric(ap, c.lambda);
    } else {
      r.problem.system = base;
      r.problem.x_i = c.x_i;
      r.problem.x_f = c.x_f;
      r.problem.horizon_T = c.T;
      r.problem.lambda = c.lambda;
      r.problem.initial_sketch = sketch;
      r.metric = make_metric(base, c.lambda, detail::make_barrier(c.barrier, base.n, base.n));
    }
    validate(r.problem);
  } catch (const Error& e) {
    if (e.category() == ErrorCategory::config) throw;
    throw config_error(e.what());
  }
  if (c.bound_L_drift) r.metric.system.lipschitz_drift = *c.bound_L_drift;
  if (c.bound_L_control) r.metric.system.lipschitz_control = *c.bound_L_control;
  r.problem.system.lipschitz_drift = r.metric.system.lipschitz_drift;
  r.problem.system.lipschitz_control = r.metric.system.lipschitz_control;
  r.flow = c.flow;
  r.plan.substeps = c.substeps;
  r.plan.C = c.bound_C;
  r.plan.M = c.bound_M;

  if (r.metric.barrier) {
    const HomotopyPath p0 = sample_path(r.problem.initial_sketch, r.problem.x_i, r.problem.x_f, c.T, c.flow.n_t);
    for (Eigen::Index k = 0; k < p0.n_t(); ++k)
      if (!barrier_feasible(*r.metric.barrier, p0.state(k)))
        throw config_error("initial sketch violates the barrier at node " + std::to_string(k));
  }
  return r;
}

}  // namespace aghf
