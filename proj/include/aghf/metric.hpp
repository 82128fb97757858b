#pragma once

#include "aghf/barrier.hpp"
#include "aghf/error.hpp"
#include "aghf/linalg.hpp"
#include "aghf/system.hpp"

#include <functional>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace aghf {

/// Condition-number cutoff beyond which F̄ is declared singular.
inline constexpr double kSingularFrameCondition = 1e12;
/// Gram-Schmidt candidates with a smaller residual norm are skipped.
inline constexpr double kCompletionResidualFloor = 1e-8;

namespace detail {

inline std::string format_state(const Vec& x) {
  std::ostringstream os;
  os.precision(6);
  os << "(";
  for (Eigen::Index i = 0; i < x.size(); ++i) os << (i ? ", " : "") << x(i);
  os << ")";
  return os.str();
}

struct GramSchmidtTrace {
  Mat q;                    // n x n, first m columns span F, then completion columns
  std::vector<int> pivots;  // standard-basis index of each completion column
  std::vector<double> norms;  // residual norm before normalization, per column of q
  std::vector<double> signs;  // sign applied to each completion column
};

inline Vec orthogonalize(const Mat& q, Eigen::Index k, Vec v) {
  // two passes of classical Gram-Schmidt
  for (int pass = 0; pass < 2; ++pass) {
    if (k > 0) v -= q.leftCols(k) * (q.leftCols(k).transpose() * v);
  }
  return v;
}

inline GramSchmidtTrace gram_schmidt(const Mat& F, const Vec* x_for_errors) {
  const Eigen::Index n = F.rows(), m = F.cols();
  auto fail = [&](const std::string& why) {
    std::string msg = "frame completion failed: " + why;
    if (x_for_errors) msg += " at x = " + format_state(*x_for_errors);
    throw Error(ErrorCategory::frame_completion, msg);
  };
  GramSchmidtTrace tr;
  tr.q = Mat::Zero(n, n);
  tr.norms.reserve(static_cast<size_t>(n));
  for (Eigen::Index j = 0; j < m; ++j) {
    Vec v = orthogonalize(tr.q, j, F.col(j));
    const double nv = v.norm();
    if (!(nv > 1e-10 * F.col(j).norm())) fail("control matrix is rank deficient");
    tr.q.col(j) = v / nv;
    tr.norms.push_back(nv);
  }
  Eigen::Index k = m;
  for (Eigen::Index e = 0; e < n && k < n; ++e) {
    Vec v = orthogonalize(tr.q, k, Vec::Unit(n, e));
    const double nv = v.norm();
    if (nv < kCompletionResidualFloor) continue;
    v /= nv;
    Eigen::Index imax = 0;
    v.cwiseAbs().maxCoeff(&imax);
    const double sgn = v(imax) < 0 ? -1.0 : 1.0;
    tr.q.col(k) = sgn * v;
    tr.pivots.push_back(static_cast<int>(e));
    tr.norms.push_back(nv);
    tr.signs.push_back(sgn);
    ++k;
  }
  if (k < n) fail("could not complete the frame");
  return tr;
}

}  // namespace detail

/// Orthonormal completion F_c of the column space of F, by Gram-Schmidt over
/// e_1..e_n in index order. Largest-magnitude entry of each column is positive.
inline Mat complete_frame(const Mat& F) {
  const auto tr = detail::gram_schmidt(F, nullptr);
  return tr.q.rightCols(F.rows() - F.cols());
}

/// Completion and its partials ∂F_c/∂x_k given ∂F/∂x_k, for a fixed pivot sequence.
inline std::pair<Mat, MatList> complete_frame_with_derivs(const Mat& F, const MatList& dF,
                                                          const Vec* x = nullptr) {
  const auto tr = detail::gram_schmidt(F, x);
  const Eigen::Index n = F.rows(), m = F.cols();
  MatList dFc;
  dFc.reserve(dF.size());
  for (const Mat& dFk : dF) {
    Mat dq = Mat::Zero(n, n);
    // Unnormalized q_j = normalize(a_j − Q_{<j} Q_{<j}ᵀ a_j), differentiated.
    for (Eigen::Index j = 0; j < n; ++j) {
      Vec a, da;
      if (j < m) {
        a = F.col(j);
        da = dFk.col(j);
      } else {
        a = Vec::Unit(n, tr.pivots[static_cast<size_t>(j - m)]);
        da = Vec::Zero(n);
      }
      Vec dv = da;
      if (j > 0) {
        const auto Q = tr.q.leftCols(j);
        const auto dQ = dq.leftCols(j);
        dv -= dQ * (Q.transpose() * a) + Q * (dQ.transpose() * a) + Q * (Q.transpose() * da);
      }
      const double sgn = j < m ? 1.0 : tr.signs[static_cast<size_t>(j - m)];
      const Vec qj = sgn * tr.q.col(j);  // unsigned normalized vector
      Vec dqj = (dv - qj * qj.dot(dv)) / tr.norms[static_cast<size_t>(j)];
      dq.col(j) = sgn * dqj;
    }
    dFc.emplace_back(dq.rightCols(n - m));
  }
  return {tr.q.rightCols(n - m), std::move(dFc)};
}

/// Strategy tag: complete the frame by Gram-Schmidt at every state.
struct GramSchmidtCompletion {};

/// Caller-supplied completion x ↦ F_c(x), optionally with ∂F_c/∂x_k.
struct UserCompletion {
  std::function<Mat(const Vec&)> frame;
  std::function<MatList(const Vec&)> derivs;
};

enum class DerivMode { analytic, finite_difference };

/// Riemannian metric G(x) = b(x)·(F̄⁻¹)ᵀ D F̄⁻¹ with F̄ = (F_c | F) and
/// D = diag(λ,…,λ, 1,…,1) (n−m copies of λ first).
struct MetricField {
  ControlSystem system;
  std::variant<GramSchmidtCompletion, UserCompletion> completion;
  double lambda = 1.0;
  std::optional<BarrierSpec> barrier;
  DerivMode deriv_mode = DerivMode::finite_difference;
};

/// Builtins (analytic derivatives available) default to analytic mode.
inline MetricField make_metric(ControlSystem sys, double lambda,
                               std::optional<BarrierSpec> barrier = std::nullopt) {
  validate(sys);
  require(lambda > 0, ErrorCategory::contract, "lambda must be positive");
  MetricField mf;
  mf.deriv_mode = sys.has_analytic_derivatives() ? DerivMode::analytic : DerivMode::finite_difference;
  mf.system = std::move(sys);
  mf.lambda = lambda;
  mf.barrier = std::move(barrier);
  return mf;
}

inline Vec metric_weights(const MetricField& mf) {
  const int n = mf.system.n, m = mf.system.m;
  Vec d = Vec::Ones(n);
  d.head(n - m).setConstant(mf.lambda);
  return d;
}

inline Mat completion_at(const MetricField& mf, const Vec& x) {
  if (const auto* uc = std::get_if<UserCompletion>(&mf.completion)) return uc->frame(x);
  return detail::gram_schmidt(mf.system.control_matrix(x), &x)
      .q.rightCols(mf.system.n - mf.system.m);
}

inline Mat frame_at(const MetricField& mf, const Vec& x) {
  const int n = mf.system.n, m = mf.system.m;
  Mat Fbar(n, n);
  Fbar.leftCols(n - m) = completion_at(mf, x);
  Fbar.rightCols(m) = mf.system.control_matrix(x);
  return Fbar;
}

/// Everything the flow needs at one state, computed with shared work.
struct MetricEval {
  Mat frame;       // F̄
  Mat frame_inv;   // F̄⁻¹
  Mat G;
  MatList dG;      // ∂G/∂x_k, empty unless requested
  double barrier = 1.0;
};

namespace detail {

inline Mat invert_frame(const Mat& Fbar, const Vec& x) {
  Eigen::PartialPivLU<Mat> lu(Fbar);
  const double rc = lu.rcond();
  if (!(rc > 1.0 / kSingularFrameCondition)) {
    const double cond = rc > 0 ? 1.0 / rc : std::numeric_limits<double>::infinity();
    throw SingularFrameError("frame F̄ is singular at x = " + format_state(x) +
                                 " (condition estimate " + std::to_string(cond) + ")",
                             cond);
  }
  return lu.inverse();
}

inline Mat base_metric(const Mat& P, const Vec& d) {
  return P.transpose() * d.asDiagonal() * P;
}

}  // namespace detail

inline MetricEval evaluate_metric(const MetricField& mf, const Vec& x, bool with_derivs) {
  require_dims(x.size() == mf.system.n, "metric evaluated at state of size " +
                                            std::to_string(x.size()));
  const int n = mf.system.n, m = mf.system.m;
  const Vec d = metric_weights(mf);
  MetricEval ev;
  MatList dFc;
  const bool analytic = with_derivs && mf.deriv_mode == DerivMode::analytic;
  MatList dF;
  if (analytic) dF = control_matrix_derivs(mf.system, x);

  const Mat F = mf.system.control_matrix(x);
  ev.frame.resize(n, n);
  ev.frame.rightCols(m) = F;
  if (const auto* uc = std::get_if<UserCompletion>(&mf.completion)) {
    ev.frame.leftCols(n - m) = uc->frame(x);
    if (analytic) dFc = uc->derivs ? uc->derivs(x) : fd_matrix_derivs(uc->frame, x);
  } else if (analytic) {
    auto [Fc, dFc_] = complete_frame_with_derivs(F, dF, &x);
    ev.frame.leftCols(n - m) = Fc;
    dFc = std::move(dFc_);
  } else {
    ev.frame.leftCols(n - m) = detail::gram_schmidt(F, &x).q.rightCols(n - m);
  }
  ev.frame_inv = detail::invert_frame(ev.frame, x);
  const Mat G0 = detail::base_metric(ev.frame_inv, d);

  BarrierValue bv;
  if (mf.barrier) {
    bv = barrier_value_grad(*mf.barrier, x);
    ev.barrier = bv.b;
  }
  ev.G = mf.barrier ? Mat(bv.b * G0) : G0;

  if (!with_derivs) return ev;
  if (analytic) {
    ev.dG.reserve(static_cast<size_t>(n));
    Mat dFbar(n, n);
    for (int k = 0; k < n; ++k) {
      dFbar.leftCols(n - m) = dFc[static_cast<size_t>(k)];
      dFbar.rightCols(m) = dF[static_cast<size_t>(k)];
      const Mat dP = -ev.frame_inv * dFbar * ev.frame_inv;
      const Mat half = dP.transpose() * d.asDiagonal() * ev.frame_inv;
      Mat dG0 = half + half.transpose();
      if (mf.barrier) dG0 = bv.grad(k) * G0 + bv.b * dG0;
      ev.dG.push_back(std::move(dG0));
    }
  } else {
    ev.dG = fd_matrix_derivs([&](const Vec& y) { return evaluate_metric(mf, y, false).G; }, x);
  }
  return ev;
}

inline Mat metric_G(const MetricField& mf, const Vec& x) { return evaluate_metric(mf, x, false).G; }

inline MatList metric_derivatives(const MetricField& mf, const Vec& x) {
  return evaluate_metric(mf, x, true).dG;
}

/// Γ[k](i, j) = Γ^k_{ij}.
using Christoffel = std::vector<Mat>;

inline Christoffel christoffel_from(const Mat& G, const MatList& dG) {
  const Eigen::Index n = G.rows();
  const Mat Ginv = G.ldlt().solve(Mat::Identity(n, n));
  // first kind: c[l](i, j) = ½(∂_i G_lj + ∂_j G_li − ∂_l G_ij)
  std::vector<Mat> first(static_cast<size_t>(n), Mat(n, n));
  for (Eigen::Index l = 0; l < n; ++l)
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < n; ++j)
        first[l](i, j) = 0.5 * (dG[i](l, j) + dG[j](l, i) - dG[l](i, j));
  Christoffel gamma(static_cast<size_t>(n), Mat::Zero(n, n));
  for (Eigen::Index k = 0; k < n; ++k)
    for (Eigen::Index l = 0; l < n; ++l)
      if (Ginv(k, l) != 0.0) gamma[k] += Ginv(k, l) * first[l];
  return gamma;
}

inline Christoffel christoffel(const MetricField& mf, const Vec& x) {
  const auto ev = evaluate_metric(mf, x, true);
  return christoffel_from(ev.G, ev.dG);
}

/// Γ(a, g)^k = Σ_ij Γ^k_ij a_i g_j.
inline Vec contract_christoffel(const Christoffel& gamma, const Vec& a, const Vec& g) {
  Vec out(static_cast<Eigen::Index>(gamma.size()));
  for (size_t k = 0; k < gamma.size(); ++k) out(static_cast<Eigen::Index>(k)) = a.dot(gamma[k] * g);
  return out;
}

/// Vector with i-th entry fᵀ (∂G/∂x_i) g.
inline Vec bracket_vector(const Vec& f, const MatList& dG, const Vec& g) {
  require_dims(f.size() == g.size() && static_cast<size_t>(f.size()) == dG.size(),
               "bracket_vector operands");
  Vec out(f.size());
  for (size_t i = 0; i < dG.size(); ++i) {
    require_dims(dG[i].rows() == f.size() && dG[i].cols() == f.size(), "bracket_vector dG block");
    out(static_cast<Eigen::Index>(i)) = f.dot(dG[i] * g);
  }
  return out;
}

/// (f · G) = Σ_l f_l ∂G/∂x_l.
inline Mat directional_metric_derivative(const Vec& f, const MatList& dG) {
  require_dims(static_cast<size_t>(f.size()) == dG.size(), "directional derivative operands");
  Mat out = Mat::Zero(f.size(), f.size());
  for (size_t l = 0; l < dG.size(); ++l) {
    require_dims(dG[l].rows() == f.size() && dG[l].cols() == f.size(),
                 "directional derivative dG block");
    out += f(static_cast<Eigen::Index>(l)) * dG[l];
  }
  return out;
}

}  // namespace aghf
