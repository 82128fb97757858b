#include "test_util.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace aghf;

namespace {

Mat smooth_controls(const Vec& t) {
  Mat u(t.size(), 2);
  for (Eigen::Index k = 0; k < t.size(); ++k) {
    u(k, 0) = 1.0 + 0.5 * std::sin(t(k));
    u(k, 1) = std::cos(2.0 * t(k));
  }
  return u;
}

}  // namespace

TEST(Extraction, RoundTripOnKinematicUnicycle) {
  const auto sys = builtin_system("kinematic_unicycle");
  const auto mf = make_metric(sys, 100.0);
  const double T = 2.0;
  const int N = 1001;
  const Vec t = uniform_times(T, N);
  const Mat u = smooth_controls(t);
  const auto tr = integrate_path(sys, t, u, Vec::Zero(3), 1);
  HomotopyPath p;
  p.times = t;
  p.states = tr.states;
  p.x_i = tr.states.row(0).transpose();
  p.x_f = tr.states.row(N - 1).transpose();
  const auto split = extract_controls(mf, p);
  EXPECT_LE((split.u - u).cwiseAbs().maxCoeff(), 1e-3);
  EXPECT_LE(split.uc.cwiseAbs().maxCoeff(), 1e-3);
}

TEST(Extraction, Rk4StepHalvingIsFourthOrder) {
  const auto sys = builtin_system("kinematic_unicycle");
  const Vec t = uniform_times(3.0, 11);
  const Mat u = smooth_controls(t);
  auto end = [&](int sub) { return integrate_path(sys, t, u, Vec::Zero(3), sub).final_state(); };
  const Vec a = end(2), b = end(4), c = end(8);
  const double ratio = (a - b).norm() / (b - c).norm();
  EXPECT_GT(ratio, 12.0);
  EXPECT_LT(ratio, 20.0);
}

TEST(Extraction, IntegrateHonoursGridAndDiverges) {
  const auto sys = builtin_system("kinematic_unicycle");
  const Vec t = uniform_times(1.0, 5);
  const auto tr = integrate_path(sys, t, Mat::Zero(5, 2), Vec::Ones(3), 3);
  EXPECT_EQ(tr.times.size(), 13);
  EXPECT_EQ(tr.times(12), 1.0);
  EXPECT_EQ(tr.final_state(), Vec::Ones(3));

  ControlSystem blow;
  blow.name = "blowup";
  blow.n = 1;
  blow.m = 1;
  blow.drift = [](const Vec& x) { return Vec(x.array().square() * x.array().square()); };
  blow.control_matrix = [](const Vec&) { return Mat::Ones(1, 1); };
  try {
    integrate_path(blow, uniform_times(10.0, 5), Mat::Zero(5, 1), Vec::Constant(1, 10.0), 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.category(), ErrorCategory::divergence);
  }
}

TEST(Extraction, EnergyIdentityForOrthonormalFrame) {
  const auto mf = make_metric(builtin_system("kinematic_unicycle"), 37.0);
  auto sketch = [](double t) {
    Vec v(3);
    v << std::sin(t), t * t, 0.5 * t;
    return v;
  };
  const auto p = test::path_from(sketch, 1.5, 31);
  const auto e = energy_split(mf, p);
  EXPECT_NEAR(e.energy_u + 37.0 * e.energy_uc, 2.0 * action(mf, p), 1e-10 * action(mf, p));
}

TEST(Bound, FormulaSpotValues) {
  EXPECT_NEAR(endpoint_error_bound_value(2.0, 1.0, 0.0, 0.0, 3.0, 18.0), 1.0, 1e-15);
  const double v = endpoint_error_bound_value(2.0, 1.0, 0.5, 0.25, 3.0, 18.0);
  EXPECT_NEAR(v, std::exp(1.5 * 3.0 * (0.25 * 3.0 + 0.0625 * 2.0)), 1e-12 * v);
}

TEST(Bound, DefaultsAndPreconditions) {
  BoundInputs in;
  in.T = 5;
  in.lambda = 1000;
  in.L_drift = 1;
  in.measured_action = 8.0;
  in.measured_M = 1.0;
  const auto b = endpoint_error_bound(in);
  EXPECT_TRUE(b.C_is_surrogate);
  EXPECT_NEAR(b.C, 16.0 * (1 + 1e-6), 1e-12);
  EXPECT_NEAR(b.M, 1.1, 1e-15);
  in.C = 10.0;
  try {
    endpoint_error_bound(in);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.category(), ErrorCategory::precondition);
  }
  in.C = 20.0;
  in.M = 0.5;
  EXPECT_THROW(endpoint_error_bound(in), Error);
}

TEST(Bound, CompletionBoundOfOrthonormalFrameIsOne) {
  const auto mf = make_metric(builtin_system("kinematic_unicycle"), 3.0);
  const auto p = test::path_from([](double t) { return Vec(Vec::Constant(3, t)); }, 1.0, 11);
  EXPECT_NEAR(measure_completion_bound(mf, p), 1.0, 1e-12);
}

TEST(Extraction, AdmissiblePathHasNoComplement) {
  const auto sys = builtin_system("constant_velocity_unicycle");
  const auto mf = make_metric(sys, 1000.0);
  const Vec t = uniform_times(2.0, 401);
  Mat u(401, 1);
  for (int k = 0; k < 401; ++k) u(k, 0) = std::sin(t(k));
  const auto tr = integrate_path(sys, t, u, Vec::Zero(3), 1);
  HomotopyPath p{t, tr.states, tr.states.row(0).transpose(), tr.states.row(400).transpose()};
  const auto split = extract_controls(mf, p);
  EXPECT_LE(split.uc.cwiseAbs().maxCoeff(), 1e-4);
  EXPECT_LE((split.u - u).cwiseAbs().maxCoeff(), 1e-4);
}
