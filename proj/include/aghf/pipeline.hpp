#pragma once

#include "aghf/config.hpp"
#include "aghf/error.hpp"
#include "aghf/extraction.hpp"
#include "aghf/flow.hpp"

#include <nlohmann/json.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <future>
#include <limits>
#include <string>
#include <vector>

namespace aghf {

struct RunOutcome {
  RunConfig config;
  FlowResult flow;
  PlanSolution plan;
  double wall_time = 0.0;  // seconds, flow and extraction
};

/// Process exit status for an error category.
inline int exit_code(ErrorCategory c) {
  switch (c) {
    case ErrorCategory::config:
    case ErrorCategory::lookup:
    case ErrorCategory::contract:
    case ErrorCategory::precondition: return 2;
    case ErrorCategory::stiffness:
    case ErrorCategory::singular_frame:
    case ErrorCategory::frame_completion:
    case ErrorCategory::divergence: return 3;
    case ErrorCategory::constraint: return 4;
  }
  return 1;
}

/// AGHF_OUTPUT_DIR, when set, replaces the configured output directory.
inline std::filesystem::path output_dir_for(const RunConfig& c) {
  if (const char* env = std::getenv("AGHF_OUTPUT_DIR"); env && *env) return env;
  return c.output_dir;
}

inline RunOutcome run_pipeline(const RunConfig& c) {
  const ResolvedRun r = resolve(c);
  RunOutcome out;
  out.config = c;
  const auto t0 = std::chrono::steady_clock::now();
  out.flow = solve_aghf(r.problem, r.metric, r.flow);
  out.plan = build_plan(r.problem, r.metric, out.flow.final_path, r.plan);
  out.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return out;
}

// ---------------------------------------------------------------------------
// Artifacts

namespace detail {

inline std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline void write_header(std::ostream& os, const std::vector<std::string>& cols) {
  for (size_t i = 0; i < cols.size(); ++i) os << (i ? "," : "") << cols[i];
  os << '\n';
}

inline std::vector<std::string> numbered(const std::string& prefix, Eigen::Index count) {
  std::vector<std::string> out;
  for (Eigen::Index i = 1; i <= count; ++i) out.push_back(prefix + std::to_string(i));
  return out;
}

/// Writes columns t, <prefix>1..<prefix>k with one row per time.
inline void write_table(const std::filesystem::path& file, const Vec& t, const std::vector<const Mat*>& blocks,
                        const std::vector<std::string>& prefixes) {
  std::ofstream os(file, std::ios::binary);
  if (!os) throw Error(ErrorCategory::config, "cannot write '" + file.string() + "'");
  std::vector<std::string> cols{"t"};
  for (size_t b = 0; b < blocks.size(); ++b) {
    auto names = numbered(prefixes[b], blocks[b]->cols());
    cols.insert(cols.end(), names.begin(), names.end());
  }
  write_header(os, cols);
  for (Eigen::Index k = 0; k < t.size(); ++k) {
    os << num(t(k));
    for (const Mat* m : blocks)
      for (Eigen::Index j = 0; j < m->cols(); ++j) os << ',' << num((*m)(k, j));
    os << '\n';
  }
}

inline std::string snapshot_name(double s) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "s_%.6g.csv", s);
  return buf;
}

inline json nullable(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

}  // namespace detail

inline json summary_json(const RunOutcome& o) {
  json s;
  s["name"] = o.config.name;
  s["endpoint_error"] = o.plan.endpoint_error;
  s["action_initial"] = o.flow.action_initial;
  s["action_final"] = o.flow.action_final;
  s["energy_u"] = o.plan.energy_u;
  s["energy_uc"] = o.plan.energy_uc;
  s["converged"] = o.flow.converged;
  s["stop_reason"] = o.flow.stop_reason;
  s["s_final"] = o.flow.s_final;
  s["residual_initial"] = o.flow.residual_initial;
  s["residual_final"] = o.flow.residual_final;
  s["residual_tol"] = o.flow.residual_tol;
  s["steady_distance"] = detail::nullable(o.flow.steady_distance);
  s["steps_taken"] = o.flow.steps_taken;
  s["steps_rejected"] = o.flow.steps_rejected;
  s["wall_time"] = o.wall_time;
  if (o.plan.bound) {
    const auto& b = *o.plan.bound;
    s["bound"] = {{"value", detail::nullable(b.value)}, {"C", b.C},           {"M", b.M},
                  {"L_drift", b.L_drift},                 {"L_control", b.L_control}, {"T", b.T},
                  {"lambda", b.lambda},                   {"C_is_surrogate", b.C_is_surrogate}};
  } else {
    s["bound"] = nullptr;
  }
  s["config"] = o.config.raw;
  return s;
}

/// Writes every run artifact into `dir` (created if needed).
inline void write_artifacts(const RunOutcome& o, const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir / "snapshots");
  {
    std::ofstream os(dir / "flow_history.csv", std::ios::binary);
    detail::write_header(os, {"s", "action", "residual_max", "step_accepted"});
    for (const auto& r : o.flow.history)
      os << detail::num(r.s) << ',' << detail::num(r.action) << ',' << detail::num(r.residual) << ','
         << (r.accepted ? 1 : 0) << '\n';
  }
  const HomotopyPath& p = o.plan.path;
  detail::write_table(dir / "path_final.csv", p.times, {&p.states}, {"x_"});
  detail::write_table(dir / "controls.csv", p.times, {&o.plan.controls_u, &o.plan.controls_uc}, {"u_", "uc_"});
  detail::write_table(dir / "integrated.csv", o.plan.integrated_path.times, {&o.plan.integrated_path.states},
                      {"xtilde_"});
  for (const auto& snap : o.flow.snapshots)
    detail::write_table(dir / "snapshots" / detail::snapshot_name(snap.s), snap.path.times, {&snap.path.states},
                        {"x_"});
  std::ofstream js(dir / "summary.json", std::ios::binary);
  js << summary_json(o).dump(2) << '\n';
}

// ---------------------------------------------------------------------------
// λ sweeps

struct SweepRow {
  double lambda = 0.0;
  double endpoint_error = std::numeric_limits<double>::quiet_NaN();
  double action_final = std::numeric_limits<double>::quiet_NaN();
  double energy_uc = std::numeric_limits<double>::quiet_NaN();
  double bound = std::numeric_limits<double>::quiet_NaN();
  bool converged = false;
  std::string error;  // empty on success
};

inline SweepRow sweep_one(RunConfig c, double lambda) {
  SweepRow row;
  row.lambda = lambda;
  c.lambda = lambda;
  c.raw["lambda"] = lambda;
  try {
    const RunOutcome o = run_pipeline(c);
    row.endpoint_error = o.plan.endpoint_error;
    row.action_final = o.flow.action_final;
    row.energy_uc = o.plan.energy_uc;
    if (o.plan.bound) row.bound = o.plan.bound->value;
    row.converged = o.flow.converged;
  } catch (const std::exception& e) {
    row.error = e.what();
  }
  return row;
}

/// One pipeline run per λ; runs are independent and may execute concurrently.
inline std::vector<SweepRow> sweep(const RunConfig& base, const std::vector<double>& lambdas, bool parallel = true) {
  std::vector<SweepRow> rows;
  if (!parallel) {
    for (double l : lambdas) rows.push_back(sweep_one(base, l));
    return rows;
  }
  std::vector<std::future<SweepRow>> jobs;
  for (double l : lambdas) jobs.push_back(std::async(std::launch::async, sweep_one, base, l));
  for (auto& j : jobs) rows.push_back(j.get());
  return rows;
}

inline void write_sweep_csv(const std::vector<SweepRow>& rows, const std::filesystem::path& file) {
  if (file.has_parent_path()) std::filesystem::create_directories(file.parent_path());
  std::ofstream os(file, std::ios::binary);
  if (!os) throw Error(ErrorCategory::config, "cannot write '" + file.string() + "'");
  detail::write_header(os, {"lambda", "endpoint_error", "action_final", "energy_uc", "bound"});
  for (const auto& r : rows)
    os << detail::num(r.lambda) << ',' << detail::num(r.endpoint_error) << ',' << detail::num(r.action_final)
       << ',' << detail::num(r.energy_uc) << ',' << detail::num(r.bound) << '\n';
}

/// Least-squares slope of log(error) against log(λ).
inline double loglog_slope(const std::vector<double>& lambdas, const std::vector<double>& errors) {
  require(lambdas.size() == errors.size() && lambdas.size() >= 2, ErrorCategory::contract,
          "slope needs at least two points");
  const size_t n = lambdas.size();
  double mx = 0, my = 0;
  for (size_t i = 0; i < n; ++i) {
    mx += std::log(lambdas[i]);
    my += std::log(errors[i]);
  }
  mx /= double(n);
  my /= double(n);
  double sxy = 0, sxx = 0;
  for (size_t i = 0; i < n; ++i) {
    const double dx = std::log(lambdas[i]) - mx;
    sxy += dx * (std::log(errors[i]) - my);
    sxx += dx * dx;
  }
  return sxy / sxx;
}

}  // namespace aghf
