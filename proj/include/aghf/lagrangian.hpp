#pragma once

#include "aghf/error.hpp"
#include "aghf/linalg.hpp"
#include "aghf/metric.hpp"
#include "aghf/system.hpp"

#include <functional>
#include <string>

namespace aghf {

/// State, velocity and (optionally) acceleration of a curve at one instant.
/// An empty xddot means "not provided".
struct CurvePoint {
  Vec x;
  Vec xdot;
  Vec xddot;
};

/// Uniformly sampled curve t_0 = 0, …, t_{N-1} = T with pinned endpoints.
/// Row k of `states` is x(t_k).
struct HomotopyPath {
  Vec times;
  Mat states;
  Vec x_i;
  Vec x_f;

  Eigen::Index n_t() const { return states.rows(); }
  Eigen::Index n() const { return states.cols(); }
  double horizon() const { return times(times.size() - 1); }
  double dt() const { return times(1) - times(0); }
  Vec state(Eigen::Index k) const { return states.row(k).transpose(); }
};

inline constexpr int kMinGridPoints = 5;

inline Vec uniform_times(double T, int n_t) {
  return Vec::LinSpaced(n_t, 0.0, T);
}

/// Samples `sketch` on the grid; rows 0 and N-1 are set to x_i, x_f exactly.
inline HomotopyPath sample_path(const std::function<Vec(double)>& sketch, const Vec& x_i,
                                const Vec& x_f, double T, int n_t) {
  require(n_t >= kMinGridPoints, ErrorCategory::contract,
          "grid needs at least " + std::to_string(kMinGridPoints) + " points");
  require(T > 0, ErrorCategory::contract, "horizon must be positive");
  require_dims(x_i.size() == x_f.size(), "endpoint states");
  HomotopyPath p;
  p.times = uniform_times(T, n_t);
  p.states.resize(n_t, x_i.size());
  for (int k = 1; k + 1 < n_t; ++k) {
    const Vec v = sketch(p.times(k));
    require_dims(v.size() == x_i.size(), "sketch state size");
    p.states.row(k) = v.transpose();
  }
  p.states.row(0) = x_i.transpose();
  p.states.row(n_t - 1) = x_f.transpose();
  p.x_i = x_i;
  p.x_f = x_f;
  return p;
}

inline void validate(const HomotopyPath& p) {
  require(p.n_t() >= kMinGridPoints, ErrorCategory::contract, "path has too few grid points");
  require_dims(p.times.size() == p.n_t(), "path times vs states");
  require(p.states.row(0).transpose() == p.x_i && p.states.row(p.n_t() - 1).transpose() == p.x_f,
          ErrorCategory::contract, "path endpoints are not pinned to x_i, x_f");
}

// ---------------------------------------------------------------------------
// Grid stencils

/// ẋ at every node: central in the interior, one-sided second order at the ends.
inline Mat node_velocities(const HomotopyPath& p) {
  const Eigen::Index N = p.n_t();
  const double h = p.dt();
  Mat v(N, p.n());
  v.middleRows(1, N - 2) = (p.states.bottomRows(N - 2) - p.states.topRows(N - 2)) / (2 * h);
  v.row(0) = (-3 * p.states.row(0) + 4 * p.states.row(1) - p.states.row(2)) / (2 * h);
  v.row(N - 1) = (3 * p.states.row(N - 1) - 4 * p.states.row(N - 2) + p.states.row(N - 3)) / (2 * h);
  return v;
}

/// ẍ at interior nodes; endpoint rows are zero (pinned, never needed).
inline Mat node_accelerations(const HomotopyPath& p) {
  const Eigen::Index N = p.n_t();
  const double h = p.dt();
  Mat a = Mat::Zero(N, p.n());
  a.middleRows(1, N - 2) =
      (p.states.bottomRows(N - 2) - 2 * p.states.middleRows(1, N - 2) + p.states.topRows(N - 2)) /
      (h * h);
  return a;
}

inline CurvePoint curve_point(const HomotopyPath& p, const Mat& vel, const Mat& acc, Eigen::Index k) {
  return {p.state(k), vel.row(k).transpose(), acc.row(k).transpose()};
}

// ---------------------------------------------------------------------------
// Lagrangian  L(x, ẋ) = ½ (ẋ − F_d)ᵀ G (ẋ − F_d)

inline double lagrangian_value(const MetricField& mf, const CurvePoint& p) {
  const Vec w = p.xdot - mf.system.drift(p.x);
  return 0.5 * w.dot(metric_G(mf, p.x) * w);
}

struct LagrangianPartials {
  Vec d_x;     // ∂L/∂x
  Vec d_xdot;  // ∂L/∂ẋ
};

/// Partials with the metric and drift data already evaluated at p.x.
inline LagrangianPartials lagrangian_partials(const MetricEval& ev, const Vec& w, const Mat& fx) {
  LagrangianPartials out;
  out.d_xdot = ev.G * w;
  out.d_x = -fx.transpose() * out.d_xdot;
  for (size_t k = 0; k < ev.dG.size(); ++k)
    out.d_x(static_cast<Eigen::Index>(k)) += 0.5 * w.dot(ev.dG[k] * w);
  return out;
}

inline LagrangianPartials lagrangian_partials(const MetricField& mf, const CurvePoint& p) {
  const auto ev = evaluate_metric(mf, p.x, true);
  const Vec w = p.xdot - mf.system.drift(p.x);
  return lagrangian_partials(ev, w, drift_jacobian(mf.system, p.x));
}

/// Euler-Lagrange residual d/dt ∂L/∂ẋ − ∂L/∂x at a point with known ẍ.
inline Vec el_residual(const MetricField& mf, const CurvePoint& p) {
  require(p.xddot.size() == p.x.size(), ErrorCategory::contract, "el_residual needs xddot");
  const auto ev = evaluate_metric(mf, p.x, true);
  const Vec f = mf.system.drift(p.x);
  const Mat fx = drift_jacobian(mf.system, p.x);
  const Vec w = p.xdot - f;
  const Vec Gw = ev.G * w;
  return directional_metric_derivative(p.xdot, ev.dG) * w + ev.G * (p.xddot - fx * p.xdot) +
         fx.transpose() * Gw - 0.5 * bracket_vector(w, ev.dG, w);
}

// ---------------------------------------------------------------------------
// Discrete action on cells [t_k, t_{k+1}]: midpoint state, forward difference.

struct CellSample {
  Vec x;  // (x_k + x_{k+1}) / 2
  Vec v;  // (x_{k+1} − x_k) / dt
};

inline CellSample cell_sample(const HomotopyPath& p, Eigen::Index c) {
  return {0.5 * (p.state(c) + p.state(c + 1)), (p.state(c + 1) - p.state(c)) / p.dt()};
}

/// 𝒜 ≈ Σ_cells dt · L(x̄_c, δ_c). Second-order accurate; its exact gradient
/// drives the Euler-Lagrange flow so the discrete action is a Lyapunov function.
inline double action(const MetricField& mf, const HomotopyPath& p) {
  double a = 0.0;
  for (Eigen::Index c = 0; c + 1 < p.n_t(); ++c) {
    const auto cs = cell_sample(p, c);
    a += lagrangian_value(mf, {cs.x, cs.v, {}});
  }
  return a * p.dt();
}

/// Per-cell partials ∂L/∂x, ∂L/∂ẋ for the discrete action.
inline std::vector<LagrangianPartials> cell_partials(const MetricField& mf, const HomotopyPath& p) {
  std::vector<LagrangianPartials> out;
  out.reserve(static_cast<size_t>(p.n_t() - 1));
  for (Eigen::Index c = 0; c + 1 < p.n_t(); ++c) {
    const auto cs = cell_sample(p, c);
    try {
      out.push_back(lagrangian_partials(mf, {cs.x, cs.v, {}}));
    } catch (SingularFrameError& e) {
      e.node = static_cast<int>(c);
      throw;
    }
  }
  return out;
}

/// Discrete Euler-Lagrange residual at interior nodes, −(1/dt)·∂𝒜_h/∂x_k.
/// Endpoint rows are zero.
inline Mat discrete_el_residual(const MetricField& mf, const HomotopyPath& p) {
  const auto cells = cell_partials(mf, p);
  const double h = p.dt();
  Mat r = Mat::Zero(p.n_t(), p.n());
  for (Eigen::Index k = 1; k + 1 < p.n_t(); ++k) {
    const auto& lo = cells[static_cast<size_t>(k - 1)];
    const auto& hi = cells[static_cast<size_t>(k)];
    r.row(k) = ((hi.d_xdot - lo.d_xdot) / h - 0.5 * (lo.d_x + hi.d_x)).transpose();
  }
  return r;
}

}  // namespace aghf
