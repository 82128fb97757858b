#pragma once

#include "aghf/error.hpp"
#include "aghf/linalg.hpp"

#include <functional>
#include <string>
#include <vector>

namespace aghf {

/// A differentiable constraint l(y) > 0 and its gradient.
struct BarrierConstraint {
  std::string name;
  std::function<double(const Vec&)> value;
  std::function<Vec(const Vec&)> gradient;
};

enum class BarrierForm {
  additive,              // b = 1 + Σ 1/l_j
  reciprocal_quadratic,  // b = Π 1/l_j
};

struct BarrierSpec {
  std::vector<BarrierConstraint> constraints;
  BarrierForm form = BarrierForm::reciprocal_quadratic;
  /// l_j <= floor counts as violated.
  double floor = 1e-9;
};

struct BarrierValue {
  double b = 1.0;
  Vec grad;
};

/// l(y) = u_max² − y_index², i.e. |y_index| < u_max.
inline BarrierConstraint magnitude_constraint(int index, double u_max, std::string name = {}) {
  require(u_max > 0, ErrorCategory::contract, "magnitude bound must be positive");
  if (name.empty()) name = "|y" + std::to_string(index) + "| < " + std::to_string(u_max);
  BarrierConstraint c;
  c.name = std::move(name);
  c.value = [index, u_max](const Vec& y) { return u_max * u_max - y(index) * y(index); };
  c.gradient = [index](const Vec& y) {
    Vec g = Vec::Zero(y.size());
    g(index) = -2.0 * y(index);
    return g;
  };
  return c;
}

inline bool barrier_feasible(const BarrierSpec& spec, const Vec& y) {
  for (const auto& c : spec.constraints)
    if (!(c.value(y) > spec.floor)) return false;
  return true;
}

inline BarrierValue barrier_value_grad(const BarrierSpec& spec, const Vec& y) {
  BarrierValue out;
  out.grad = Vec::Zero(y.size());
  // For the product form accumulate Σ ∇l_j / l_j and scale by -b at the end.
  Vec log_grad = Vec::Zero(y.size());
  for (const auto& c : spec.constraints) {
    const double l = c.value(y);
    if (!(l > spec.floor))
      throw ConstraintViolation("constraint '" + c.name + "' violated (l = " + std::to_string(l) + ")",
                                c.name);
    const Vec gl = c.gradient(y);
    if (spec.form == BarrierForm::additive) {
      out.b += 1.0 / l;
      out.grad -= gl / (l * l);
    } else {
      out.b /= l;
      log_grad += gl / l;
    }
  }
  if (spec.form == BarrierForm::reciprocal_quadratic) out.grad = -out.b * log_grad;
  return out;
}

}  // namespace aghf
