#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <vector>

namespace aghf {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
/// One matrix per state coordinate, e.g. ∂G/∂x_k for k = 0..n-1.
using MatList = std::vector<Mat>;

/// Central-difference step used whenever an analytic derivative is missing.
inline double fd_step(const Vec& x) { return 1e-6 * std::max(1.0, x.norm()); }

/// Jacobian of a vector map by central differences; column k is ∂g/∂x_k.
template <class Fn>
Mat fd_jacobian(Fn&& g, const Vec& x) {
  const double h = fd_step(x);
  const Eigen::Index n = x.size();
  Vec xp = x;
  Mat J;
  for (Eigen::Index k = 0; k < n; ++k) {
    xp(k) = x(k) + h;
    Vec gp = g(xp);
    xp(k) = x(k) - h;
    Vec gm = g(xp);
    xp(k) = x(k);
    if (k == 0) J.resize(gp.size(), n);
    J.col(k) = (gp - gm) / (2.0 * h);
  }
  return J;
}

/// Partial derivatives of a matrix-valued map by central differences.
template <class Fn>
MatList fd_matrix_derivs(Fn&& g, const Vec& x) {
  const double h = fd_step(x);
  Vec xp = x;
  MatList out;
  out.reserve(static_cast<size_t>(x.size()));
  for (Eigen::Index k = 0; k < x.size(); ++k) {
    xp(k) = x(k) + h;
    Mat gp = g(xp);
    xp(k) = x(k) - h;
    Mat gm = g(xp);
    xp(k) = x(k);
    out.emplace_back((gp - gm) / (2.0 * h));
  }
  return out;
}

inline bool all_finite(const Vec& v) { return v.allFinite(); }

/// Relative error with an absolute floor, the comparison used by the
/// derivative checks: |a-b| / max(|b|, floor).
inline double rel_err(double a, double b, double floor = 1e-8) {
  return std::abs(a - b) / std::max(std::abs(b), floor);
}

inline double rel_err(const Eigen::Ref<const Mat>& a, const Eigen::Ref<const Mat>& b,
                      double floor = 1e-8) {
  return (a - b).cwiseAbs().maxCoeff() / std::max(b.cwiseAbs().maxCoeff(), floor);
}

}  // namespace aghf
