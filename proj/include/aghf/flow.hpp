#pragma once

#include "aghf/error.hpp"
#include "aghf/lagrangian.hpp"
#include "aghf/linalg.hpp"
#include "aghf/metric.hpp"
#include "aghf/system.hpp"

#include <Eigen/SparseCore>
#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace aghf {

enum class RhsForm {
  euler_lagrange,  // G⁻¹ × discrete EL residual (gradient of the discrete action)
  covariant,       // ∇_ẋ(ẋ − F_d) + r, pointwise with node stencils
};

enum class Stepper {
  linearly_implicit,  // (I − ds·J) Δ = ds·R, J by colored finite differences
  explicit_euler,
};

struct StepControl {
  double rtol = 1e-3;
  double atol = 1e-4;
  double safety = 0.9;
  double max_growth = 4.0;
  double min_shrink = 0.2;
  /// Relative slack allowed on the action when accepting a step.
  double action_slack = 1e-8;
};

struct FlowConfig {
  int n_t = 101;
  double s_max = 100.0;
  double initial_ds = 1e-4;
  double ds_min = 1e-14;
  double ds_max = 1e4;
  RhsForm rhs_form = RhsForm::euler_lagrange;
  Stepper stepper = Stepper::linearly_implicit;
  /// Steady-state threshold on max |∂x/∂s|; <= 0 means 1e-3 × initial residual.
  double residual_tol = -1.0;
  /// Steady-state threshold on the estimated distance to equilibrium,
  /// max |J⁻¹R| (one Newton step); <= 0 disables this test.
  double steady_tol = -1.0;
  /// Accepted steps a Jacobian may be reused for before it is rebuilt.
  int jacobian_reuse = 8;
  int action_log_stride = 1;
  /// Number of geometrically spaced snapshot targets in (0, s_max].
  int snapshot_count = 10;
  long max_steps = 1'000'000;
  StepControl control;
};

inline void validate(const FlowConfig& c) {
  require(c.n_t >= kMinGridPoints, ErrorCategory::config, "flow.n_t must be >= 5");
  require(c.s_max > 0, ErrorCategory::config, "flow.s_max must be positive");
  require(c.ds_min > 0 && c.ds_min <= c.initial_ds && c.initial_ds <= c.ds_max, ErrorCategory::config,
          "flow step bounds must satisfy 0 < ds_min <= initial_ds <= ds_max");
  require(c.jacobian_reuse >= 1, ErrorCategory::config, "flow.jacobian_reuse must be >= 1");
  require(c.action_log_stride >= 1, ErrorCategory::config, "flow.action_log_stride must be >= 1");
  require(c.snapshot_count >= 0, ErrorCategory::config, "flow.snapshot_count must be >= 0");
  require(c.control.rtol > 0 && c.control.atol > 0, ErrorCategory::config,
          "step tolerances must be positive");
}

struct FlowRecord {
  double s = 0.0;
  double action = 0.0;
  double residual = 0.0;
  bool accepted = true;
};

struct Snapshot {
  double s = 0.0;
  HomotopyPath path;
};

struct FlowResult {
  HomotopyPath final_path;
  std::vector<FlowRecord> history;
  std::vector<Snapshot> snapshots;
  long steps_taken = 0;
  long steps_rejected = 0;
  bool converged = false;
  double s_final = 0.0;
  double action_initial = 0.0;
  double action_final = 0.0;
  double residual_initial = 0.0;
  double residual_final = 0.0;
  double residual_tol = 0.0;
  double steady_distance = std::numeric_limits<double>::quiet_NaN();  // last Newton-step estimate
  std::string stop_reason;

  std::vector<std::pair<double, double>> action_history() const {
    std::vector<std::pair<double, double>> out;
    for (const auto& r : history)
      if (r.accepted) out.emplace_back(r.s, r.action);
    return out;
  }
  std::vector<std::pair<double, double>> residual_history() const {
    std::vector<std::pair<double, double>> out;
    for (const auto& r : history)
      if (r.accepted) out.emplace_back(r.s, r.residual);
    return out;
  }
};

// ---------------------------------------------------------------------------
// Right-hand sides

namespace detail {

template <class Fn>
auto at_node(Eigen::Index k, Fn&& fn) {
  try {
    return fn();
  } catch (SingularFrameError& e) {
    e.node = static_cast<int>(k);
    throw;
  }
}

inline double interior_max_abs(const Mat& r) {
  if (r.rows() <= 2) return 0.0;
  return r.middleRows(1, r.rows() - 2).cwiseAbs().maxCoeff();
}

}  // namespace detail

/// Euler-Lagrange form: G(x_k)⁻¹ times the discrete EL residual at each
/// interior node. Endpoint rows are zero.
inline Mat aghf_rhs_el(const MetricField& mf, const HomotopyPath& p) {
  Mat r = discrete_el_residual(mf, p);
  for (Eigen::Index k = 1; k + 1 < p.n_t(); ++k) {
    detail::at_node(k, [&] {
      const Mat G = metric_G(mf, p.state(k));
      r.row(k) = G.ldlt().solve(r.row(k).transpose()).transpose();
      return 0;
    });
  }
  return r;
}

/// G⁻¹ · el_residual at a single point (continuous Euler-Lagrange form).
inline Vec aghf_rhs_el(const MetricField& mf, const CurvePoint& p) {
  return metric_G(mf, p.x).ldlt().solve(el_residual(mf, p));
}

/// ∇_ẋ(ẋ − F_d) + r at a point, where the covariant derivative along the
/// curve is d/dt(ẋ − F_d) + Γ(ẋ, ẋ − F_d) and
/// r = G⁻¹((∂F_d/∂x)ᵀ G (ẋ − F_d) + ½[(ẋ − F_d) ∂G F_d]).
inline Vec aghf_rhs_covariant(const MetricField& mf, const CurvePoint& p) {
  require(p.xddot.size() == p.x.size(), ErrorCategory::contract, "covariant rhs needs xddot");
  const auto ev = evaluate_metric(mf, p.x, true);
  const Vec f = mf.system.drift(p.x);
  const Mat fx = drift_jacobian(mf.system, p.x);
  const Vec w = p.xdot - f;
  const Christoffel gamma = christoffel_from(ev.G, ev.dG);
  const Vec transport = (p.xddot - fx * p.xdot) + contract_christoffel(gamma, p.xdot, w);
  const Vec r = ev.G.ldlt().solve(fx.transpose() * (ev.G * w) + 0.5 * bracket_vector(w, ev.dG, f));
  return transport + r;
}

/// Plain geometric heat flow ∇_ẋ ẋ = ẍ + Γ(ẋ, ẋ); reference for the
/// driftless case.
inline Vec ghf_rhs(const MetricField& mf, const CurvePoint& p) {
  const auto ev = evaluate_metric(mf, p.x, true);
  return p.xddot + contract_christoffel(christoffel_from(ev.G, ev.dG), p.xdot, p.xdot);
}

/// Applies a pointwise rhs at interior nodes using the node stencils.
template <class PointRhs>
Mat pointwise_rhs(const HomotopyPath& p, PointRhs&& rhs) {
  const Mat vel = node_velocities(p);
  const Mat acc = node_accelerations(p);
  Mat r = Mat::Zero(p.n_t(), p.n());
  for (Eigen::Index k = 1; k + 1 < p.n_t(); ++k)
    r.row(k) = detail::at_node(k, [&] { return Vec(rhs(curve_point(p, vel, acc, k))); }).transpose();
  return r;
}

inline Mat aghf_rhs_covariant(const MetricField& mf, const HomotopyPath& p) {
  return pointwise_rhs(p, [&](const CurvePoint& cp) { return aghf_rhs_covariant(mf, cp); });
}

inline Mat ghf_rhs(const MetricField& mf, const HomotopyPath& p) {
  return pointwise_rhs(p, [&](const CurvePoint& cp) { return ghf_rhs(mf, cp); });
}

inline Mat aghf_rhs(const MetricField& mf, const HomotopyPath& p, RhsForm form) {
  return form == RhsForm::euler_lagrange ? aghf_rhs_el(mf, p) : aghf_rhs_covariant(mf, p);
}

// ---------------------------------------------------------------------------
// Method-of-lines integration in s

/// What the stepper needs from a problem: the rhs over the whole path, the
/// monotone functional, and a node feasibility test.
struct FlowModel {
  std::function<Mat(const HomotopyPath&)> rhs;
  std::function<double(const HomotopyPath&)> action;
  std::function<bool(const Vec&)> feasible;
  /// True when rhs is the exact descent direction of action, so a step that
  /// raises the action is rejected. The covariant form only approximates it.
  bool descends_action = true;
};

namespace detail {

/// Block-tridiagonal Jacobian of the rhs w.r.t. interior node states.
struct BandedJacobian {
  Eigen::Index nodes = 0;  // interior node count
  Eigen::Index n = 0;
  std::vector<Mat> lower, diag, upper;  // ∂R_k/∂x_{k-1}, ∂R_k/∂x_k, ∂R_k/∂x_{k+1}
};

inline BandedJacobian colored_jacobian(const FlowModel& model, const HomotopyPath& p, const Mat& r0) {
  const Eigen::Index N = p.n_t(), n = p.n(), I = N - 2;
  BandedJacobian J;
  J.nodes = I;
  J.n = n;
  J.lower.assign(static_cast<size_t>(I), Mat::Zero(n, n));
  J.diag.assign(static_cast<size_t>(I), Mat::Zero(n, n));
  J.upper.assign(static_cast<size_t>(I), Mat::Zero(n, n));
  HomotopyPath q = p;
  Vec eps(N);
  for (int color = 0; color < 3; ++color) {
    for (Eigen::Index comp = 0; comp < n; ++comp) {
      q.states = p.states;
      eps.setZero();
      for (Eigen::Index j = 1 + color; j <= N - 2; j += 3) {
        eps(j) = 1e-7 * std::max(1.0, std::abs(p.states(j, comp)));
        q.states(j, comp) += eps(j);
      }
      const Mat r = model.rhs(q);
      for (Eigen::Index j = 1 + color; j <= N - 2; j += 3) {
        for (Eigen::Index i = std::max<Eigen::Index>(1, j - 1); i <= std::min(N - 2, j + 1); ++i) {
          const Vec col = (r.row(i) - r0.row(i)).transpose() / eps(j);
          const size_t row = static_cast<size_t>(i - 1);
          if (i == j) J.diag[row].col(comp) = col;
          else if (i == j + 1) J.lower[row].col(comp) = col;
          else J.upper[row].col(comp) = col;
        }
      }
    }
  }
  return J;
}

/// Factorizations of (I − h·J) for the step sizes used in one attempt.
class ImplicitSolver {
 public:
  explicit ImplicitSolver(BandedJacobian J) : J_(std::move(J)) {
    const Eigen::Index dim = J.nodes * J.n;
    mat_.resize(dim, dim);
    std::vector<Eigen::Triplet<double>> trip;
    fill(1.0, &trip);
    mat_.setFromTriplets(trip.begin(), trip.end());
    lu_.analyzePattern(mat_);
  }

  /// Returns Δ solving (I − h J) Δ = h R on interior rows; endpoint rows zero.
  bool step(double h, const Mat& R, Mat* delta) {
    std::vector<Eigen::Triplet<double>> trip;
    fill(h, &trip);
    mat_.setFromTriplets(trip.begin(), trip.end());
    lu_.factorize(mat_);
    if (lu_.info() != Eigen::Success) return false;
    return solve(h, R, delta);
  }

  /// Newton correction Δ with −J Δ = R; a measure of the distance to steady state.
  bool newton(const Mat& R, Mat* delta) {
    std::vector<Eigen::Triplet<double>> trip;
    fill(1.0, &trip, false);
    mat_.setFromTriplets(trip.begin(), trip.end());
    lu_.factorize(mat_);
    if (lu_.info() != Eigen::Success) return false;
    return solve(1.0, R, delta);
  }

 private:
  bool solve(double h, const Mat& R, Mat* delta) {
    const Eigen::Index n = J_.n, I = J_.nodes;
    Vec b(I * n);
    for (Eigen::Index k = 0; k < I; ++k) b.segment(k * n, n) = h * R.row(k + 1).transpose();
    const Vec x = lu_.solve(b);
    if (lu_.info() != Eigen::Success || !x.allFinite()) return false;
    delta->setZero(I + 2, n);
    for (Eigen::Index k = 0; k < I; ++k) delta->row(k + 1) = x.segment(k * n, n).transpose();
    return true;
  }

  void fill(double h, std::vector<Eigen::Triplet<double>>* trip, bool identity = true) const {
    const Eigen::Index n = J_.n, I = J_.nodes;
    trip->reserve(static_cast<size_t>(3 * I * n * n));
    for (Eigen::Index k = 0; k < I; ++k) {
      const size_t kk = static_cast<size_t>(k);
      for (Eigen::Index a = 0; a < n; ++a) {
        for (Eigen::Index b = 0; b < n; ++b) {
          const double d = (identity && a == b ? 1.0 : 0.0) - h * J_.diag[kk](a, b);
          trip->emplace_back(k * n + a, k * n + b, d);
          if (k > 0) trip->emplace_back(k * n + a, (k - 1) * n + b, -h * J_.lower[kk](a, b));
          if (k + 1 < I) trip->emplace_back(k * n + a, (k + 1) * n + b, -h * J_.upper[kk](a, b));
        }
      }
    }
  }

  BandedJacobian J_;
  Eigen::SparseMatrix<double> mat_;
  Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>> lu_;
};

inline std::vector<double> snapshot_targets(const FlowConfig& cfg) {
  std::vector<double> t;
  if (cfg.snapshot_count <= 0) return t;
  const double hi = cfg.s_max;
  const double lo = std::min(hi, std::max(cfg.initial_ds, hi * 1e-4));
  if (cfg.snapshot_count == 1 || lo >= hi) return {hi};
  for (int i = 0; i < cfg.snapshot_count; ++i)
    t.push_back(lo * std::pow(hi / lo, double(i) / (cfg.snapshot_count - 1)));
  return t;
}

}  // namespace detail

/// Integrates ∂x/∂s = rhs(x) from `initial` with adaptive step doubling.
///
/// A step is accepted only if the step-doubling error estimate is within
/// tolerance, every node stays feasible, and the action does not grow by
/// more than `action_slack` relative. Stops at s_max or once the residual
/// max |rhs| falls below the steady-state threshold.
inline FlowResult solve_flow(const FlowModel& model, HomotopyPath initial, const FlowConfig& cfg) {
  validate(cfg);
  validate(initial);
  FlowResult res;
  const auto& ctl = cfg.control;
  HomotopyPath x = std::move(initial);

  auto with_s = [](double s, auto&& fn) {
    try {
      return fn();
    } catch (SingularFrameError& e) {
      e.s = s;
      throw;
    }
  };

  double s = 0.0;
  Mat R = with_s(s, [&] { return model.rhs(x); });
  double A = model.action(x);
  double resid = detail::interior_max_abs(R);
  res.action_initial = A;
  res.residual_initial = resid;
  if (cfg.residual_tol > 0) {
    res.residual_tol = cfg.residual_tol;
  } else {
    // relative to the initial residual, floored at the rounding level of the stencil
    const double dt = x.times(1) - x.times(0);
    const double floor = 64.0 * std::numeric_limits<double>::epsilon() *
                         std::max(1.0, x.states.cwiseAbs().maxCoeff()) / (dt * dt);
    res.residual_tol = std::max(1e-3 * resid, floor);
  }
  res.history.push_back({s, A, resid, true});
  res.snapshots.push_back({0.0, x});
  auto targets = detail::snapshot_targets(cfg);
  size_t next_target = 0;

  double ds = cfg.initial_ds;
  long accepted_since_log = 0;
  std::optional<detail::ImplicitSolver> solver;
  int jac_age = 0;
  // After a step leaves the feasible set, steps stay below half its size
  // and the cap is relaxed gradually.
  double h_cap = std::numeric_limits<double>::infinity();
  bool just_rejected = false;

  auto finish = [&](std::string why, bool converged) {
    res.final_path = x;
    res.s_final = s;
    res.action_final = A;
    res.residual_final = resid;
    res.converged = converged;
    res.stop_reason = std::move(why);
    if (res.history.back().s != s || !res.history.back().accepted)
      res.history.push_back({s, A, resid, true});
    if (res.snapshots.back().s != s) res.snapshots.push_back({s, x});
    return res;
  };

  if (resid <= res.residual_tol) return finish("initial path already steady", true);

  while (true) {
    if (s >= cfg.s_max) return finish("reached s_max", false);
    if (res.steps_taken + res.steps_rejected >= cfg.max_steps)
      return finish("step budget exhausted", false);

    const double h = std::min({ds, h_cap, cfg.s_max - s});
    HomotopyPath full = x, half = x, cand = x;
    double err = std::numeric_limits<double>::infinity();
    double A_new = std::numeric_limits<double>::quiet_NaN();
    bool ok = true;
    try {
      if (cfg.stepper == Stepper::linearly_implicit) {
        if (!solver) {
          solver.emplace(with_s(s, [&] { return detail::colored_jacobian(model, x, R); }));
          jac_age = 0;
        }
        Mat d_full, d_half1, d_half2;
        ok = solver->step(h, R, &d_full) && solver->step(0.5 * h, R, &d_half1);
        if (ok) {
          full.states += d_full;
          half.states += d_half1;
          const Mat R_half = model.rhs(half);
          ok = solver->step(0.5 * h, R_half, &d_half2);
          if (ok) cand.states = half.states + d_half2;
        }
      } else {
        full.states += h * R;
        half.states += 0.5 * h * R;
        cand.states = half.states + 0.5 * h * model.rhs(half);
      }
      if (ok) {
        for (Eigen::Index k = 1; ok && k + 1 < cand.n_t(); ++k)
          ok = cand.states.row(k).allFinite() && model.feasible(cand.state(k));
      }
      if (ok) {
        // max-norm error against a path-wide scale
        const double scale = ctl.atol + ctl.rtol * cand.states.cwiseAbs().maxCoeff();
        err = (cand.states - full.states).cwiseAbs().maxCoeff() / scale;
        A_new = model.action(cand);
      }
    } catch (const SingularFrameError&) {
      ok = false;
    } catch (const ConstraintViolation&) {
      ok = false;
    }

    const bool action_ok =
        std::isfinite(A_new) && (!model.descends_action || A_new <= A + ctl.action_slack * std::abs(A));
    if (ok && std::isfinite(err) && err <= 1.0 && action_ok) {
      x = std::move(cand);
      s += h;
      A = A_new;
      R = with_s(s, [&] { return model.rhs(x); });
      resid = detail::interior_max_abs(R);
      ++res.steps_taken;
      if (solver && ++jac_age >= cfg.jacobian_reuse) solver.reset();
      if (++accepted_since_log >= cfg.action_log_stride) {
        res.history.push_back({s, A, resid, true});
        accepted_since_log = 0;
      }
      while (next_target < targets.size() && s >= targets[next_target] * (1 - 1e-12)) {
        if (res.snapshots.back().s != s) res.snapshots.push_back({s, x});
        ++next_target;
      }
      const double grow = err > 1e-12 ? ctl.safety / std::sqrt(err) : ctl.max_growth;
      ds = std::min(cfg.ds_max, h * std::clamp(grow, 1.0, just_rejected ? 1.0 : ctl.max_growth));
      just_rejected = false;
      h_cap *= 1.25;
      if (!R.allFinite()) throw Error(ErrorCategory::stiffness, "non-finite rhs at s = " + std::to_string(s));
      if (resid <= res.residual_tol) return finish("residual below tolerance", true);
      if (cfg.steady_tol > 0 && cfg.stepper == Stepper::linearly_implicit) {
        if (!solver) {
          solver.emplace(with_s(s, [&] { return detail::colored_jacobian(model, x, R); }));
          jac_age = 0;
        }
        Mat dn;
        if (solver->newton(R, &dn)) {
          res.steady_distance = dn.cwiseAbs().maxCoeff();
          if (res.steady_distance <= cfg.steady_tol) return finish("distance to steady state below tolerance", true);
        }
      }
    } else {
      ++res.steps_rejected;
      if (jac_age > 0) solver.reset();
      if (std::isfinite(A_new)) res.history.push_back({s + h, A_new, resid, false});
      double shrink = 0.5;
      if (ok && std::isfinite(err) && err > 1.0) shrink = std::max(ctl.min_shrink, ctl.safety / std::sqrt(err));
      if (!ok) {
        shrink = 0.25;
        h_cap = 0.5 * h;
      }
      just_rejected = true;
      ds = h * shrink;
      if (ds < cfg.ds_min) {
        throw Error(ErrorCategory::stiffness,
                    "step size underflow at s = " + std::to_string(s) + " (ds = " + std::to_string(ds) +
                        ", residual = " + std::to_string(resid) + ", action = " + std::to_string(A) +
                        ", accepted = " + std::to_string(res.steps_taken) +
                        ", rejected = " + std::to_string(res.steps_rejected) + ")");
      }
    }
  }
}

inline FlowModel make_flow_model(const MetricField& mf, RhsForm form) {
  FlowModel m;
  m.rhs = [&mf, form](const HomotopyPath& p) { return aghf_rhs(mf, p, form); };
  m.action = [&mf](const HomotopyPath& p) { return action(mf, p); };
  m.feasible = [&mf](const Vec& x) { return !mf.barrier || barrier_feasible(*mf.barrier, x); };
  m.descends_action = form == RhsForm::euler_lagrange;
  return m;
}

/// Runs the flow for a planning problem from its initial sketch.
inline FlowResult solve_aghf(const PlanningProblem& problem, const MetricField& mf, const FlowConfig& cfg) {
  validate(problem);
  validate(cfg);
  HomotopyPath p0 = sample_path(problem.initial_sketch, problem.x_i, problem.x_f, problem.horizon_T, cfg.n_t);
  if (mf.barrier) {
    for (Eigen::Index k = 0; k < p0.n_t(); ++k)
      if (!barrier_feasible(*mf.barrier, p0.state(k)))
        throw ConstraintViolation("initial sketch violates a barrier constraint at node " + std::to_string(k),
                                  "sketch");
  }
  return solve_flow(make_flow_model(mf, cfg.rhs_form), std::move(p0), cfg);
}

}  // namespace aghf
