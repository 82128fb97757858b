#pragma once

#include "aghf/error.hpp"
#include "aghf/flow.hpp"
#include "aghf/lagrangian.hpp"
#include "aghf/linalg.hpp"
#include "aghf/metric.hpp"
#include "aghf/system.hpp"

#include <cmath>
#include <optional>
#include <string>

namespace aghf {

/// Controls recovered from a path at the grid nodes.
struct ControlSplit {
  Mat u;   // N_t x m
  Mat uc;  // N_t x (n − m), along the completion directions
};

/// (u_c; u) = F̄(x)⁻¹ (ẋ − F_d(x)) at every node, ẋ from the node stencil.
inline ControlSplit extract_controls(const MetricField& mf, const HomotopyPath& path) {
  const int n = mf.system.n, m = mf.system.m;
  const Mat vel = node_velocities(path);
  ControlSplit out{Mat(path.n_t(), m), Mat(path.n_t(), n - m)};
  for (Eigen::Index k = 0; k < path.n_t(); ++k) {
    const Vec x = path.state(k);
    Vec z;
    try {
      const auto ev = evaluate_metric(mf, x, false);
      z = ev.frame_inv * (vel.row(k).transpose() - mf.system.drift(x));
    } catch (SingularFrameError& e) {
      e.node = static_cast<int>(k);
      throw;
    }
    out.uc.row(k) = z.head(n - m).transpose();
    out.u.row(k) = z.tail(m).transpose();
  }
  return out;
}

struct EnergySplit {
  double energy_u = 0.0;   // ∫|u|² dt
  double energy_uc = 0.0;  // ∫|u_c|² dt
};

/// Control energies with the same cell quadrature as `action`, so that
/// energy_u + λ·energy_uc = 2𝒜 whenever F̄ is orthonormal and b ≡ 1.
inline EnergySplit energy_split(const MetricField& mf, const HomotopyPath& path) {
  const int n = mf.system.n, m = mf.system.m;
  EnergySplit e;
  for (Eigen::Index c = 0; c + 1 < path.n_t(); ++c) {
    const auto cs = cell_sample(path, c);
    const auto ev = evaluate_metric(mf, cs.x, false);
    const Vec z = ev.frame_inv * (cs.v - mf.system.drift(cs.x));
    e.energy_uc += z.head(n - m).squaredNorm();
    e.energy_u += z.tail(m).squaredNorm();
  }
  e.energy_u *= path.dt();
  e.energy_uc *= path.dt();
  return e;
}

/// Dense forward trajectory; row k of `states` is x̃(times(k)).
struct Trajectory {
  Vec times;
  Mat states;
  Vec final_state() const { return states.row(states.rows() - 1).transpose(); }
};

/// Classical RK4 on ẋ = F_d(x) + F(x)u(t) with u piecewise linear between
/// the grid nodes, `substeps` steps per grid interval.
inline Trajectory integrate_path(const ControlSystem& sys, const Vec& grid_times, const Mat& controls_u,
                                 const Vec& x_i, int substeps = 10) {
  require(substeps >= 1, ErrorCategory::contract, "substeps must be >= 1");
  require_dims(controls_u.rows() == grid_times.size() && controls_u.cols() == sys.m,
               "controls must be N_t x m");
  require_dims(x_i.size() == sys.n, "initial state");
  const Eigen::Index N = grid_times.size();
  Trajectory tr;
  tr.times.resize((N - 1) * substeps + 1);
  tr.states.resize(tr.times.size(), sys.n);
  tr.times(0) = grid_times(0);
  tr.states.row(0) = x_i.transpose();
  Vec x = x_i;
  Eigen::Index row = 1;
  for (Eigen::Index i = 0; i + 1 < N; ++i) {
    const double t0 = grid_times(i), t1 = grid_times(i + 1);
    const double h = (t1 - t0) / substeps;
    const Vec u0 = controls_u.row(i).transpose(), u1 = controls_u.row(i + 1).transpose();
    auto u_at = [&](double t) -> Vec { return u0 + (u1 - u0) * ((t - t0) / (t1 - t0)); };
    auto rhs = [&](const Vec& y, double t) { return eval_dynamics(sys, y, u_at(t)); };
    for (int j = 0; j < substeps; ++j) {
      const double t = t0 + j * h;
      const Vec k1 = rhs(x, t);
      const Vec k2 = rhs(x + 0.5 * h * k1, t + 0.5 * h);
      const Vec k3 = rhs(x + 0.5 * h * k2, t + 0.5 * h);
      const Vec k4 = rhs(x + h * k3, t + h);
      x += (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4);
      if (!x.allFinite())
        throw Error(ErrorCategory::divergence, "integration diverged at t = " + std::to_string(t + h));
      tr.times(row) = j + 1 == substeps ? t1 : t + h;
      tr.states.row(row) = x.transpose();
      ++row;
    }
  }
  return tr;
}

inline double endpoint_error(const Trajectory& integrated, const Vec& x_f) {
  return (integrated.final_state() - x_f).norm();
}

// ---------------------------------------------------------------------------
// Endpoint bound  |x̃(T) − x_f| ≤ sqrt(3TMC/λ)·exp(3T/2·(L_drift²·T + L_control²·C))

struct ErrorBound {
  double C = 0.0;
  double M = 0.0;
  double L_drift = 0.0;
  double L_control = 0.0;
  double T = 0.0;
  double lambda = 0.0;
  double value = 0.0;
  bool C_is_surrogate = false;
};

struct BoundInputs {
  std::optional<double> C;  // default: 2·𝒜·(1 + 1e-6)
  std::optional<double> M;  // default: 1.1 × measured max λ_max(F_cᵀF_c)
  double L_drift = 0.0;
  double L_control = 0.0;
  double T = 0.0;
  double lambda = 0.0;
  double measured_action = 0.0;  // 𝒜 of the converged path
  double measured_M = 0.0;
};

/// max over path nodes of the largest eigenvalue of F_cᵀ F_c.
inline double measure_completion_bound(const MetricField& mf, const HomotopyPath& path) {
  double M = 0.0;
  if (mf.system.n == mf.system.m) return M;
  for (Eigen::Index k = 0; k < path.n_t(); ++k) {
    const Mat Fc = completion_at(mf, path.state(k));
    Eigen::SelfAdjointEigenSolver<Mat> es(Fc.transpose() * Fc, Eigen::EigenvaluesOnly);
    M = std::max(M, es.eigenvalues().maxCoeff());
  }
  return M;
}

inline double endpoint_error_bound_value(double C, double M, double L_drift, double L_control, double T,
                                  double lambda) {
  return std::sqrt(3.0 * T * M * C / lambda) *
         std::exp(1.5 * T * (L_drift * L_drift * T + L_control * L_control * C));
}

inline ErrorBound endpoint_error_bound(const BoundInputs& in) {
  require(in.T > 0 && in.lambda > 0, ErrorCategory::precondition, "bound needs T > 0 and lambda > 0");
  ErrorBound b;
  const double needed_C = 2.0 * in.measured_action;
  b.C_is_surrogate = !in.C.has_value();
  b.C = in.C.value_or(needed_C * (1.0 + 1e-6));
  b.M = in.M.value_or(1.1 * in.measured_M);
  require(b.C >= needed_C, ErrorCategory::precondition,
          "C = " + std::to_string(b.C) + " is below twice the measured action " + std::to_string(needed_C));
  require(b.M >= in.measured_M, ErrorCategory::precondition,
          "M = " + std::to_string(b.M) + " is below the measured completion bound " +
              std::to_string(in.measured_M));
  b.L_drift = in.L_drift;
  b.L_control = in.L_control;
  b.T = in.T;
  b.lambda = in.lambda;
  b.value = endpoint_error_bound_value(b.C, b.M, b.L_drift, b.L_control, b.T, b.lambda);
  return b;
}

// ---------------------------------------------------------------------------

struct PlanSolution {
  HomotopyPath path;
  Mat controls_u;
  Mat controls_uc;
  Trajectory integrated_path;
  double endpoint_error = 0.0;
  double energy_u = 0.0;
  double energy_uc = 0.0;
  double action = 0.0;
  std::optional<ErrorBound> bound;
};

struct PlanOptions {
  int substeps = 10;
  std::optional<double> C;
  std::optional<double> M;
  bool compute_bound = true;
};

/// Step 4 onwards: controls, forward integration, energies and the bound.
inline PlanSolution build_plan(const PlanningProblem& problem, const MetricField& mf, const HomotopyPath& path,
                               const PlanOptions& opt = {}) {
  PlanSolution sol;
  sol.path = path;
  auto split = extract_controls(mf, path);
  sol.controls_u = std::move(split.u);
  sol.controls_uc = std::move(split.uc);
  sol.integrated_path = integrate_path(mf.system, path.times, sol.controls_u, problem.x_i, opt.substeps);
  sol.endpoint_error = endpoint_error(sol.integrated_path, problem.x_f);
  const auto e = energy_split(mf, path);
  sol.energy_u = e.energy_u;
  sol.energy_uc = e.energy_uc;
  sol.action = action(mf, path);
  if (opt.compute_bound && std::isfinite(mf.system.lipschitz_drift) &&
      std::isfinite(mf.system.lipschitz_control)) {
    BoundInputs in;
    in.C = opt.C;
    in.M = opt.M;
    in.L_drift = mf.system.lipschitz_drift;
    in.L_control = mf.system.lipschitz_control;
    in.T = path.horizon();
    in.lambda = mf.lambda;
    in.measured_action = sol.action;
    in.measured_M = measure_completion_bound(mf, path);
    sol.bound = endpoint_error_bound(in);
  }
  return sol;
}

}  // namespace aghf
