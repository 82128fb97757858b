#pragma once

#include "aghf/error.hpp"
#include "aghf/linalg.hpp"

#include <cmath>
#include <functional>
#include <limits>
#include <string>
#include <vector>

namespace aghf {

/// Control-affine system  ẋ = F_d(x) + F(x) u  on R^n with m inputs.
///
/// The derivative evaluators are optional; when empty, central finite
/// differences are used. A ControlSystem is immutable once built and all
/// evaluators must be pure.
struct ControlSystem {
  int n = 0;
  int m = 0;
  std::string name;

  std::function<Vec(const Vec&)> drift;           // F_d
  std::function<Mat(const Vec&)> control_matrix;  // F, n x m

  std::function<Mat(const Vec&)> drift_jacobian;         // ∂F_d/∂x, optional
  std::function<MatList(const Vec&)> control_matrix_derivs;  // ∂F/∂x_k, optional

  /// Declared (not computed) Lipschitz constants of F_d and F. May be +inf
  /// when the map is only locally Lipschitz.
  double lipschitz_drift = 0.0;
  double lipschitz_control = 0.0;

  bool has_analytic_derivatives() const {
    return static_cast<bool>(drift_jacobian) && static_cast<bool>(control_matrix_derivs);
  }
};

inline void validate(const ControlSystem& sys) {
  require(sys.m >= 1 && sys.m <= sys.n, ErrorCategory::contract,
          "system '" + sys.name + "': need 1 <= m <= n, got n=" + std::to_string(sys.n) +
              " m=" + std::to_string(sys.m));
  require(static_cast<bool>(sys.drift) && static_cast<bool>(sys.control_matrix),
          ErrorCategory::contract, "system '" + sys.name + "': drift and control matrix required");
  require(sys.lipschitz_drift >= 0 && sys.lipschitz_control >= 0, ErrorCategory::contract,
          "system '" + sys.name + "': Lipschitz constants must be nonnegative");
}

inline Vec eval_dynamics(const ControlSystem& sys, const Vec& x, const Vec& u) {
  require_dims(x.size() == sys.n, "state has size " + std::to_string(x.size()) + ", system n=" +
                                      std::to_string(sys.n));
  require_dims(u.size() == sys.m, "input has size " + std::to_string(u.size()) + ", system m=" +
                                      std::to_string(sys.m));
  return sys.drift(x) + sys.control_matrix(x) * u;
}

inline Mat drift_jacobian(const ControlSystem& sys, const Vec& x) {
  if (sys.drift_jacobian) return sys.drift_jacobian(x);
  return fd_jacobian(sys.drift, x);
}

inline MatList control_matrix_derivs(const ControlSystem& sys, const Vec& x) {
  if (sys.control_matrix_derivs) return sys.control_matrix_derivs(x);
  return fd_matrix_derivs(sys.control_matrix, x);
}

// ---------------------------------------------------------------------------
// Assumption A diagnostics

struct RankSample {
  Vec singular_values;
  int rank = 0;
};

struct AssumptionReport {
  std::vector<RankSample> samples;
  int max_rank = 0;
  std::vector<size_t> rank_drops;  // sample indices with rank < max_rank
  bool constant_rank = true;
  double empirical_lipschitz_drift = 0.0;
  double empirical_lipschitz_control = 0.0;
  std::vector<std::string> warnings;
};

/// Numerical rank with the σ_k > 1e-10·σ_1 convention.
inline int numerical_rank(const Eigen::Ref<const Vec>& sv) {
  if (sv.size() == 0 || sv(0) <= 0.0) return 0;
  int r = 0;
  for (Eigen::Index k = 0; k < sv.size(); ++k)
    if (sv(k) > 1e-10 * sv(0)) ++r;
  return r;
}

inline AssumptionReport check_assumption_a(const ControlSystem& sys, const std::vector<Vec>& samples) {
  AssumptionReport rep;
  if (samples.empty()) {
    rep.warnings.emplace_back("no samples supplied");
    return rep;
  }
  std::vector<Vec> fd;
  std::vector<Mat> fm;
  for (const Vec& x : samples) {
    Mat F = sys.control_matrix(x);
    Eigen::JacobiSVD<Mat> svd(F);
    RankSample s{svd.singularValues(), 0};
    s.rank = numerical_rank(s.singular_values);
    rep.max_rank = std::max(rep.max_rank, s.rank);
    rep.samples.push_back(std::move(s));
    fd.push_back(sys.drift(x));
    fm.push_back(std::move(F));
  }
  for (size_t i = 0; i < rep.samples.size(); ++i)
    if (rep.samples[i].rank < rep.max_rank) rep.rank_drops.push_back(i);
  rep.constant_rank = rep.rank_drops.empty();
  if (!rep.constant_rank)
    rep.warnings.push_back("rank of F drops at " + std::to_string(rep.rank_drops.size()) +
                           " sample(s)");
  if (rep.max_rank < sys.m)
    rep.warnings.push_back("F never reaches full column rank m=" + std::to_string(sys.m));

  for (size_t i = 0; i < samples.size(); ++i) {
    for (size_t j = i + 1; j < samples.size(); ++j) {
      const double dx = (samples[i] - samples[j]).norm();
      if (dx <= 0.0) continue;
      rep.empirical_lipschitz_drift =
          std::max(rep.empirical_lipschitz_drift, (fd[i] - fd[j]).norm() / dx);
      Eigen::JacobiSVD<Mat> svd(fm[i] - fm[j]);
      rep.empirical_lipschitz_control =
          std::max(rep.empirical_lipschitz_control, svd.singularValues()(0) / dx);
    }
  }
  if (rep.empirical_lipschitz_drift > sys.lipschitz_drift * (1 + 1e-9))
    rep.warnings.push_back("empirical drift Lipschitz estimate exceeds declared constant");
  if (rep.empirical_lipschitz_control > sys.lipschitz_control * (1 + 1e-9))
    rep.warnings.push_back("empirical control-matrix Lipschitz estimate exceeds declared constant");
  return rep;
}

// ---------------------------------------------------------------------------
// Builtin systems

namespace detail {

inline ControlSystem kinematic_unicycle() {
  ControlSystem s;
  s.name = "kinematic_unicycle";
  s.n = 3;
  s.m = 2;
  s.drift = [](const Vec&) -> Vec { return Vec::Zero(3); };
  s.control_matrix = [](const Vec& x) -> Mat {
    Mat F = Mat::Zero(3, 2);
    F(0, 0) = std::cos(x(2));
    F(1, 0) = std::sin(x(2));
    F(2, 1) = 1.0;
    return F;
  };
  s.drift_jacobian = [](const Vec&) -> Mat { return Mat::Zero(3, 3); };
  s.control_matrix_derivs = [](const Vec& x) -> MatList {
    MatList d(3, Mat::Zero(3, 2));
    d[2](0, 0) = -std::sin(x(2));
    d[2](1, 0) = std::cos(x(2));
    return d;
  };
  s.lipschitz_drift = 0.0;
  s.lipschitz_control = 1.0;
  return s;
}

// Unicycle with u_1 ≡ 1: heading drift, steering input.
inline ControlSystem constant_velocity_unicycle() {
  ControlSystem s;
  s.name = "constant_velocity_unicycle";
  s.n = 3;
  s.m = 1;
  s.drift = [](const Vec& x) -> Vec {
    Vec f(3);
    f << std::cos(x(2)), std::sin(x(2)), 0.0;
    return f;
  };
  s.control_matrix = [](const Vec&) -> Mat {
    Mat F = Mat::Zero(3, 1);
    F(2, 0) = 1.0;
    return F;
  };
  s.drift_jacobian = [](const Vec& x) -> Mat {
    Mat J = Mat::Zero(3, 3);
    J(0, 2) = -std::sin(x(2));
    J(1, 2) = std::cos(x(2));
    return J;
  };
  s.control_matrix_derivs = [](const Vec&) -> MatList { return MatList(3, Mat::Zero(3, 1)); };
  s.lipschitz_drift = 1.0;
  s.lipschitz_control = 0.0;
  return s;
}

// State (q_x, q_y, θ, u_1, u_2); inputs act on the velocity states.
inline ControlSystem dynamic_unicycle() {
  ControlSystem s;
  s.name = "dynamic_unicycle";
  s.n = 5;
  s.m = 2;
  s.drift = [](const Vec& x) -> Vec {
    Vec f = Vec::Zero(5);
    f(0) = x(3) * std::cos(x(2));
    f(1) = x(3) * std::sin(x(2));
    f(2) = x(4);
    return f;
  };
  s.control_matrix = [](const Vec&) -> Mat {
    Mat F = Mat::Zero(5, 2);
    F(3, 0) = 1.0;
    F(4, 1) = 1.0;
    return F;
  };
  s.drift_jacobian = [](const Vec& x) -> Mat {
    Mat J = Mat::Zero(5, 5);
    const double c = std::cos(x(2)), sn = std::sin(x(2));
    J(0, 2) = -x(3) * sn;
    J(0, 3) = c;
    J(1, 2) = x(3) * c;
    J(1, 3) = sn;
    J(2, 4) = 1.0;
    return J;
  };
  s.control_matrix_derivs = [](const Vec&) -> MatList { return MatList(5, Mat::Zero(5, 2)); };
  // u_1 cos θ is only locally Lipschitz.
  s.lipschitz_drift = std::numeric_limits<double>::infinity();
  s.lipschitz_control = 0.0;
  return s;
}

// ẋ = u on R^2: flat metric, no drift.
inline ControlSystem single_integrator() {
  ControlSystem s;
  s.name = "single_integrator";
  s.n = 2;
  s.m = 2;
  s.drift = [](const Vec&) -> Vec { return Vec::Zero(2); };
  s.control_matrix = [](const Vec&) -> Mat { return Mat::Identity(2, 2); };
  s.drift_jacobian = [](const Vec&) -> Mat { return Mat::Zero(2, 2); };
  s.control_matrix_derivs = [](const Vec&) -> MatList { return MatList(2, Mat::Zero(2, 2)); };
  return s;
}

}  // namespace detail

inline std::vector<std::string> builtin_names() {
  return {"kinematic_unicycle", "constant_velocity_unicycle", "dynamic_unicycle",
          "single_integrator"};
}

inline ControlSystem builtin_system(const std::string& name) {
  if (name == "kinematic_unicycle") return detail::kinematic_unicycle();
  if (name == "constant_velocity_unicycle") return detail::constant_velocity_unicycle();
  if (name == "dynamic_unicycle") return detail::dynamic_unicycle();
  if (name == "single_integrator") return detail::single_integrator();
  std::string valid;
  for (const auto& n : builtin_names()) valid += (valid.empty() ? "" : ", ") + n;
  throw Error(ErrorCategory::lookup, "unknown system '" + name + "'; valid names: " + valid);
}

// ---------------------------------------------------------------------------

/// Planning from x_i to x_f in time T, starting the flow at `initial_sketch`.
struct PlanningProblem {
  ControlSystem system;
  Vec x_i;
  Vec x_f;
  double horizon_T = 1.0;
  double lambda = 1.0;
  std::function<Vec(double)> initial_sketch;
};

inline void validate(const PlanningProblem& p) {
  validate(p.system);
  require_dims(p.x_i.size() == p.system.n && p.x_f.size() == p.system.n,
               "endpoint states must have size n=" + std::to_string(p.system.n));
  require(p.horizon_T > 0, ErrorCategory::contract, "horizon T must be positive");
  require(p.lambda > 0, ErrorCategory::contract, "lambda must be positive");
  require(static_cast<bool>(p.initial_sketch), ErrorCategory::contract, "initial sketch missing");
  const Vec v0 = p.initial_sketch(0.0);
  const Vec vT = p.initial_sketch(p.horizon_T);
  require_dims(v0.size() == p.system.n && vT.size() == p.system.n, "sketch must return size-n states");
  require((v0 - p.x_i).cwiseAbs().maxCoeff() <= 1e-12 && (vT - p.x_f).cwiseAbs().maxCoeff() <= 1e-12,
          ErrorCategory::contract, "initial sketch does not match the endpoint states");
}

}  // namespace aghf
