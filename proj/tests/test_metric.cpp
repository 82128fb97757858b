#include "test_util.hpp"

#include <gtest/gtest.h>

using namespace aghf;
using aghf::test::random_mat;
using aghf::test::random_vec;

TEST(CompleteFrame, ConstantVelocityUnicycle) {
  const Mat Fc = complete_frame(Vec::Unit(3, 2));
  Mat expected = Mat::Zero(3, 2);
  expected(0, 0) = 1.0;
  expected(1, 1) = 1.0;
  EXPECT_EQ(Fc, expected);
}

TEST(CompleteFrame, DynamicExtensionBlock) {
  Mat F = Mat::Zero(5, 2);
  F.bottomRows(2).setIdentity();
  const Mat Fc = complete_frame(F);
  Mat expected = Mat::Zero(5, 3);
  expected.topRows(3).setIdentity();
  EXPECT_EQ(Fc, expected);
}

TEST(CompleteFrame, KinematicUnicycleAtZeroHeading) {
  const auto s = builtin_system("kinematic_unicycle");
  const Mat Fc = complete_frame(s.control_matrix(Vec::Zero(3)));
  ASSERT_EQ(Fc.cols(), 1);
  EXPECT_LE((Fc - Vec::Unit(3, 1)).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(CompleteFrame, OrthonormalComplementWithSignRule) {
  std::mt19937 rng(21);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 2 + trial % 5, m = 1 + trial % (n - 1 > 0 ? n - 1 : 1);
    const Mat F = random_mat(rng, n, std::min(m, n - 1));
    const Mat Fc = complete_frame(F);
    ASSERT_EQ(Fc.cols(), n - F.cols());
    EXPECT_LE((Fc.transpose() * Fc - Mat::Identity(Fc.cols(), Fc.cols())).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_LE((Fc.transpose() * F).cwiseAbs().maxCoeff(), 1e-12);
    for (Eigen::Index j = 0; j < Fc.cols(); ++j) {
      Eigen::Index imax;
      Fc.col(j).cwiseAbs().maxCoeff(&imax);
      EXPECT_GT(Fc(imax, j), 0.0);
    }
    EXPECT_EQ(complete_frame(F), Fc);  // deterministic
  }
}

TEST(CompleteFrame, RankDeficientControlMatrixFails) {
  Mat F(3, 2);
  F << 1, 2, 0, 0, 1, 2;
  try {
    complete_frame(F);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.category(), ErrorCategory::frame_completion);
  }
}

TEST(CompleteFrame, AnalyticDerivativesMatchFiniteDifferences) {
  const auto s = builtin_system("kinematic_unicycle");
  std::mt19937 rng(22);
  for (int i = 0; i < 30; ++i) {
    const Vec x = random_vec(rng, 3);
    auto [Fc, dFc] = complete_frame_with_derivs(s.control_matrix(x), s.control_matrix_derivs(x));
    const auto fd = fd_matrix_derivs([&](const Vec& y) { return complete_frame(s.control_matrix(y)); }, x);
    for (int k = 0; k < 3; ++k) EXPECT_LE(rel_err(dFc[k], fd[k], 1.0), 1e-6);
  }
}

TEST(MetricG, PaperDiagonalForms) {
  const auto cv = make_metric(builtin_system("constant_velocity_unicycle"), 1000.0);
  std::mt19937 rng(23);
  const Vec x = random_vec(rng, 3);
  EXPECT_EQ(metric_G(cv, x), Vec(Eigen::Vector3d(1000, 1000, 1)).asDiagonal().toDenseMatrix());
  const auto du = make_metric(builtin_system("dynamic_unicycle"), 7.5);
  Vec d(5);
  d << 7.5, 7.5, 7.5, 1, 1;
  EXPECT_EQ(metric_G(du, random_vec(rng, 5)), d.asDiagonal().toDenseMatrix());
  const auto si = make_metric(builtin_system("single_integrator"), 1.0);
  EXPECT_EQ(metric_G(si, Vec::Ones(2)), Mat::Identity(2, 2));
}

TEST(MetricG, KinematicUnicycleClosedForm) {
  const auto mf = make_metric(builtin_system("kinematic_unicycle"), 50.0);
  std::mt19937 rng(24);
  for (int i = 0; i < 50; ++i) {
    const Vec x = random_vec(rng, 3, -3.0, 3.0);
    // F̄ is orthonormal, so G = λ f_c f_cᵀ + F Fᵀ with f_c = ±(sin θ, −cos θ, 0).
    Vec fc(3);
    fc << std::sin(x(2)), -std::cos(x(2)), 0.0;
    const Mat F = mf.system.control_matrix(x);
    const Mat expected = 50.0 * fc * fc.transpose() + F * F.transpose();
    EXPECT_LE((metric_G(mf, x) - expected).cwiseAbs().maxCoeff(), 1e-11);
  }
}

TEST(MetricG, SymmetricPositiveDefinite) {
  std::mt19937 rng(25);
  for (const auto& name : builtin_names()) {
    const auto mf = make_metric(builtin_system(name), 123.0);
    for (int i = 0; i < 50; ++i) {
      const Mat G = metric_G(mf, random_vec(rng, mf.system.n));
      EXPECT_LE((G - G.transpose()).cwiseAbs().maxCoeff(), 1e-12);
      EXPECT_EQ(G.llt().info(), Eigen::Success);
    }
  }
}

TEST(MetricG, QuadraticFormOnAdmissibleAndComplementDirections) {
  std::mt19937 rng(26);
  for (const auto& name : builtin_names()) {
    const double lambda = 77.0;
    const auto mf = make_metric(builtin_system(name), lambda);
    const int n = mf.system.n, m = mf.system.m;
    for (int i = 0; i < 30; ++i) {
      const Vec x = random_vec(rng, n);
      const Vec u = random_vec(rng, m);
      const Mat G = metric_G(mf, x);
      const Vec Fu = mf.system.control_matrix(x) * u;
      EXPECT_NEAR(Fu.dot(G * Fu), u.squaredNorm(), 1e-10 * (1 + u.squaredNorm()));
      if (n > m) {
        const Vec w = random_vec(rng, n - m);
        const Vec v = completion_at(mf, x) * w + Fu;
        EXPECT_GE(v.dot(G * v), lambda * w.squaredNorm() * (1 - 1e-12));
      }
    }
  }
}

TEST(MetricG, SingularFrameIsReported) {
  UserCompletion uc;
  MetricField user = make_metric(builtin_system("constant_velocity_unicycle"), 10.0);
  uc.frame = [](const Vec&) {
    Mat Fc = Mat::Zero(3, 2);
    Fc(0, 0) = 1.0;
    Fc(0, 1) = 1.0;  // parallel columns
    return Fc;
  };
  user.completion = uc;
  try {
    metric_G(user, Vec::Zero(3));
    FAIL();
  } catch (const SingularFrameError& e) {
    EXPECT_GT(e.condition(), kSingularFrameCondition);
  }
}

TEST(MetricDerivatives, ConstantMetricGivesZero) {
  const auto mf = make_metric(builtin_system("dynamic_unicycle"), 9.0);
  for (const Mat& d : metric_derivatives(mf, Vec::Constant(5, 0.4))) EXPECT_EQ(d.cwiseAbs().maxCoeff(), 0.0);
}

TEST(MetricDerivatives, AnalyticMatchesFiniteDifferences) {
  std::mt19937 rng(27);
  for (const auto& name : builtin_names()) {
    auto mf = make_metric(builtin_system(name), 31.0);
    for (int i = 0; i < 20; ++i) {
      const Vec x = random_vec(rng, mf.system.n);
      const auto an = metric_derivatives(mf, x);
      const auto fd = fd_matrix_derivs([&](const Vec& y) { return metric_G(mf, y); }, x);
      for (size_t k = 0; k < an.size(); ++k) EXPECT_LE(rel_err(an[k], fd[k], 1.0), 1e-5) << name;
    }
  }
}

TEST(MetricDerivatives, FiniteDifferenceModeAgrees) {
  std::mt19937 rng(28);
  auto an = make_metric(builtin_system("kinematic_unicycle"), 20.0);
  auto fd = an;
  fd.deriv_mode = DerivMode::finite_difference;
  const Vec x = random_vec(rng, 3);
  const auto a = metric_derivatives(an, x), b = metric_derivatives(fd, x);
  for (size_t k = 0; k < a.size(); ++k) EXPECT_LE(rel_err(b[k], a[k], 1.0), 1e-6);
}

TEST(MetricDerivatives, ReciprocalBarrierAtHalfBound) {
  const auto mf = test::barrier_unicycle_metric(5.0);
  Vec y = Vec::Zero(5);
  y(3) = 1.0;
  const auto ev = evaluate_metric(mf, y, true);
  Vec d(5);
  d << 5, 5, 5, 1, 1;
  const Mat base = d.asDiagonal();
  EXPECT_NEAR(ev.barrier, 1.0 / 3.0, 1e-15);
  EXPECT_LE((ev.dG[3] - (2.0 / 9.0) * base).cwiseAbs().maxCoeff(), 1e-14);
  const auto fd = fd_matrix_derivs([&](const Vec& z) { return metric_G(mf, z); }, y);
  EXPECT_LE(rel_err(ev.dG[3], fd[3], 1.0), 1e-8);
}

TEST(Christoffel, FlatMetricHasNoSymbols) {
  const auto mf = make_metric(builtin_system("constant_velocity_unicycle"), 10.0);
  for (const Mat& g : christoffel(mf, Vec::Constant(3, 0.2))) EXPECT_EQ(g.cwiseAbs().maxCoeff(), 0.0);
}

TEST(Christoffel, ScalarClosedForm) {
  const auto mf = make_metric(test::scalar_system(), 1.0);
  for (double x : {-1.5, -0.3, 0.0, 0.8, 2.0}) {
    const double F = 1.0 + x * x / 4.0, g = 1.0 / (F * F), dg = -2.0 * (x / 2.0) / (F * F * F);
    const auto gamma = christoffel(mf, Vec::Constant(1, x));
    EXPECT_NEAR(gamma[0](0, 0), dg / (2.0 * g), 1e-8);
  }
}

TEST(Christoffel, SymmetricAndMetricCompatible) {
  std::mt19937 rng(29);
  const auto mf = make_metric(builtin_system("kinematic_unicycle"), 40.0);
  for (int t = 0; t < 20; ++t) {
    const Vec x = random_vec(rng, 3);
    const auto ev = evaluate_metric(mf, x, true);
    const auto gamma = christoffel_from(ev.G, ev.dG);
    for (int k = 0; k < 3; ++k) EXPECT_EQ(gamma[k], gamma[k].transpose());
    for (int k = 0; k < 3; ++k)
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
          double rhs = 0.0;
          for (int l = 0; l < 3; ++l) rhs += gamma[l](k, i) * ev.G(l, j) + gamma[l](k, j) * ev.G(l, i);
          EXPECT_NEAR(ev.dG[k](i, j), rhs, 1e-8 * std::max(1.0, ev.G.cwiseAbs().maxCoeff()));
        }
  }
}

TEST(Brackets, ScalarAndZero) {
  EXPECT_EQ(bracket_vector(Vec::Constant(1, 2.0), {Mat::Constant(1, 1, 5.0)}, Vec::Constant(1, 3.0))(0), 30.0);
  const MatList zero(3, Mat::Zero(3, 3));
  EXPECT_EQ(bracket_vector(Vec::Ones(3), zero, Vec::Ones(3)).norm(), 0.0);
  EXPECT_EQ(directional_metric_derivative(Vec::Ones(3), zero).norm(), 0.0);
}

TEST(Brackets, LoopOracles) {
  std::mt19937 rng(30);
  const int n = 4;
  MatList dG;
  for (int k = 0; k < n; ++k) dG.push_back(random_mat(rng, n, n));
  const Vec f = random_vec(rng, n), g = random_vec(rng, n);
  const Vec b = bracket_vector(f, dG, g);
  const Mat D = directional_metric_derivative(f, dG);
  for (int i = 0; i < n; ++i) {
    double s = 0.0;
    for (int a = 0; a < n; ++a)
      for (int c = 0; c < n; ++c) s += f(a) * dG[i](a, c) * g(c);
    EXPECT_NEAR(b(i), s, 1e-14 * 10);
    for (int j = 0; j < n; ++j) {
      double t = 0.0;
      for (int l = 0; l < n; ++l) t += f(l) * dG[l](i, j);
      EXPECT_NEAR(D(i, j), t, 1e-14 * 10);
    }
  }
  for (int k = 0; k < n; ++k) EXPECT_EQ(directional_metric_derivative(Vec::Unit(n, k), dG), dG[k]);
}

TEST(Brackets, DimensionMismatch) {
  EXPECT_THROW(bracket_vector(Vec::Ones(2), MatList(3, Mat::Zero(3, 3)), Vec::Ones(3)), Error);
  EXPECT_THROW(directional_metric_derivative(Vec::Ones(2), MatList(3, Mat::Zero(3, 3))), Error);
}
