#pragma once

#include "aghf/barrier.hpp"
#include "aghf/error.hpp"
#include "aghf/lagrangian.hpp"
#include "aghf/linalg.hpp"
#include "aghf/metric.hpp"
#include "aghf/system.hpp"

#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <utility>

namespace aghf {

/// General dynamics ẋ = f(x, u), not necessarily control-affine.
struct GeneralDynamics {
  int n = 0;
  int m = 0;
  std::string name;
  std::function<Vec(const Vec&, const Vec&)> f;
  /// Optional (∂f/∂x | ∂f/∂u), n x (n + m).
  std::function<Mat(const Vec&, const Vec&)> jacobian;
};

/// Dynamic extension y = (x, u), ẏ = (f(x, u); 0) + (0; I_m) v with v = u̇.
struct AugmentedProblem {
  ControlSystem base;       // empty evaluators when built from GeneralDynamics
  ControlSystem augmented;  // n + m states, m inputs
  std::optional<BarrierSpec> barrier;
  Vec boundary_u_i;
  Vec boundary_u_f;
};

namespace detail {

inline ControlSystem augmented_system(const GeneralDynamics& g) {
  const int n = g.n, m = g.m;
  ControlSystem s;
  s.name = "augmented(" + g.name + ")";
  s.n = n + m;
  s.m = m;
  s.drift = [n, m, f = g.f](const Vec& y) -> Vec {
    Vec out = Vec::Zero(n + m);
    out.head(n) = f(y.head(n), y.tail(m));
    return out;
  };
  s.control_matrix = [n, m](const Vec&) -> Mat {
    Mat F = Mat::Zero(n + m, m);
    F.bottomRows(m).setIdentity();
    return F;
  };
  if (g.jacobian) {
    s.drift_jacobian = [n, m, jac = g.jacobian](const Vec& y) -> Mat {
      Mat J = Mat::Zero(n + m, n + m);
      J.topRows(n) = jac(y.head(n), y.tail(m));
      return J;
    };
    s.control_matrix_derivs = [n, m](const Vec&) -> MatList {
      return MatList(static_cast<size_t>(n + m), Mat::Zero(n + m, m));
    };
  }
  // u enters f multiplied by state-dependent terms in general.
  s.lipschitz_drift = std::numeric_limits<double>::infinity();
  s.lipschitz_control = 0.0;
  return s;
}

inline void check_boundary(int m, const std::pair<Vec, Vec>& u) {
  require_dims(u.first.size() == m && u.second.size() == m,
               "boundary controls must have size m=" + std::to_string(m));
}

}  // namespace detail

inline AugmentedProblem augment(const GeneralDynamics& g, const std::pair<Vec, Vec>& boundary_u,
                                std::optional<BarrierSpec> barrier = std::nullopt) {
  require(g.m >= 1 && g.n >= 1 && static_cast<bool>(g.f), ErrorCategory::contract,
          "general dynamics need n, m >= 1 and f");
  detail::check_boundary(g.m, boundary_u);
  AugmentedProblem p;
  p.augmented = detail::augmented_system(g);
  p.barrier = std::move(barrier);
  p.boundary_u_i = boundary_u.first;
  p.boundary_u_f = boundary_u.second;
  return p;
}

/// Extends a control-affine system; f(x, u) = F_d(x) + F(x)u.
inline AugmentedProblem augment(const ControlSystem& base, const std::pair<Vec, Vec>& boundary_u,
                                std::optional<BarrierSpec> barrier = std::nullopt) {
  validate(base);
  GeneralDynamics g;
  g.n = base.n;
  g.m = base.m;
  g.name = base.name;
  g.f = [base](const Vec& x, const Vec& u) { return eval_dynamics(base, x, u); };
  if (base.has_analytic_derivatives()) {
    g.jacobian = [base](const Vec& x, const Vec& u) {
      const int n = base.n, m = base.m;
      Mat J(n, n + m);
      Mat fx = base.drift_jacobian(x);
      const MatList dF = base.control_matrix_derivs(x);
      for (int k = 0; k < n; ++k) fx.col(k) += dF[static_cast<size_t>(k)] * u;
      J.leftCols(n) = fx;
      J.rightCols(m) = base.control_matrix(x);
      return J;
    };
  }
  AugmentedProblem p = augment(g, boundary_u, std::move(barrier));
  p.base = base;
  p.augmented.name = "augmented(" + base.name + ")";
  return p;
}

/// Metric on the augmented space with the fixed completion F_c = (I_n; 0),
/// so F̄ = I and G(y) = b(y)·D.
inline MetricField augmented_metric(const AugmentedProblem& p, double lambda) {
  const int N = p.augmented.n, m = p.augmented.m, n = N - m;
  MetricField mf;
  mf.system = p.augmented;
  mf.lambda = lambda;
  mf.barrier = p.barrier;
  UserCompletion uc;
  uc.frame = [N, n](const Vec&) -> Mat {
    Mat Fc = Mat::Zero(N, n);
    Fc.topRows(n).setIdentity();
    return Fc;
  };
  uc.derivs = [N, n](const Vec&) { return MatList(static_cast<size_t>(N), Mat::Zero(N, n)); };
  mf.completion = std::move(uc);
  mf.deriv_mode = p.augmented.has_analytic_derivatives() ? DerivMode::analytic : DerivMode::finite_difference;
  require(lambda > 0, ErrorCategory::contract, "lambda must be positive");
  return mf;
}

/// Planning problem on y = (x, u). The sketch of the u-components defaults
/// to the linear interpolation of the boundary controls.
inline PlanningProblem augmented_planning_problem(const AugmentedProblem& p, const Vec& x_i, const Vec& x_f,
                                                  double T, double lambda,
                                                  std::function<Vec(double)> state_sketch,
                                                  std::function<Vec(double)> control_sketch = {}) {
  const int N = p.augmented.n, m = p.augmented.m, n = N - m;
  require_dims(x_i.size() == n && x_f.size() == n, "base endpoint states must have size " + std::to_string(n));
  PlanningProblem P;
  P.system = p.augmented;
  P.x_i.resize(N);
  P.x_i << x_i, p.boundary_u_i;
  P.x_f.resize(N);
  P.x_f << x_f, p.boundary_u_f;
  P.horizon_T = T;
  P.lambda = lambda;
  if (!control_sketch) {
    control_sketch = [ui = p.boundary_u_i, uf = p.boundary_u_f, T](double t) -> Vec {
      return ui + (uf - ui) * (t / T);
    };
  }
  P.initial_sketch = [N, state_sketch = std::move(state_sketch), control_sketch = std::move(control_sketch)](
                         double t) -> Vec {
    Vec y(N);
    y << state_sketch(t), control_sketch(t);
    return y;
  };
  return P;
}

struct ConstrainedLagrangianReport {
  int samples = 0;
  double max_discrepancy = 0.0;  // relative, max over samples
};

/// ½·b(y)·(λ|ẋ − f(x, u)|² + |u̇|²).
inline double constrained_lagrangian_closed_form(const MetricField& mf, const Vec& y, const Vec& ydot) {
  const int N = mf.system.n, m = mf.system.m;
  const Vec w = ydot - mf.system.drift(y);
  const double b = mf.barrier ? barrier_value_grad(*mf.barrier, y).b : 1.0;
  return 0.5 * b * (mf.lambda * w.head(N - m).squaredNorm() + w.tail(m).squaredNorm());
}

/// Compares the generic Lagrangian with the closed form at every cell sample
/// of `path`.
inline ConstrainedLagrangianReport constrained_lagrangian_check(const MetricField& mf, const HomotopyPath& path) {
  ConstrainedLagrangianReport rep;
  for (Eigen::Index c = 0; c + 1 < path.n_t(); ++c) {
    const auto cs = cell_sample(path, c);
    const Mat frame = frame_at(mf, cs.x);
    require((frame - Mat::Identity(frame.rows(), frame.cols())).cwiseAbs().maxCoeff() <= 1e-12,
            ErrorCategory::precondition, "closed-form check needs F̄ = I");
    const double generic = lagrangian_value(mf, {cs.x, cs.v, {}});
    const double closed = constrained_lagrangian_closed_form(mf, cs.x, cs.v);
    rep.max_discrepancy = std::max(rep.max_discrepancy, rel_err(generic, closed, 1e-12));
    ++rep.samples;
  }
  return rep;
}

/// Per-channel magnitude bounds on the u-part of y = (x, u).
inline BarrierSpec input_bounds(int n_base, const std::vector<std::pair<int, double>>& channel_bounds,
                                BarrierForm form = BarrierForm::reciprocal_quadratic) {
  BarrierSpec spec;
  spec.form = form;
  for (const auto& [channel, umax] : channel_bounds) {
    require(channel >= 0, ErrorCategory::contract, "input channel must be nonnegative");
    spec.constraints.push_back(
        magnitude_constraint(n_base + channel, umax, "|u" + std::to_string(channel + 1) + "| < " + std::to_string(umax)));
  }
  return spec;
}

}  // namespace aghf
