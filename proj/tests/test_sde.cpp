#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "smoothpc/error.hpp"
#include "smoothpc/sde.hpp"
#include "test_support.hpp"

using namespace smoothpc;
using smoothpc::testing::random_matrix;

namespace {

const VpSchedule kSchedule(0.1, 20.0);

// composite Simpson rule
template <typename F>
double simpson(F&& f, double lo, double hi, int n = 2000) {
  const double h = (hi - lo) / n;
  double s = f(lo) + f(hi);
  for (int i = 1; i < n; ++i) s += (i % 2 ? 4.0 : 2.0) * f(lo + i * h);
  return s * h / 3.0;
}

}  // namespace

TEST(Schedule, RejectsBadParameters) {
  EXPECT_THROW(VpSchedule(0.0, 1.0), InvalidParameter);
  EXPECT_THROW(VpSchedule(2.0, 1.0), InvalidParameter);
  EXPECT_THROW(kSchedule.drift_coef(-0.1), InvalidParameter);
  EXPECT_THROW(kSchedule.diffusion_std(1.5), InvalidParameter);
  EXPECT_THROW(kSchedule.beta(std::nan("")), InvalidParameter);
}

TEST(Schedule, DriftCoefficientValues) {
  EXPECT_EQ(kSchedule.drift_coef(0.0), 1.0);
  const double quad = simpson([](double s) { return kSchedule.beta(s); }, 0.0, 1.0);
  EXPECT_NEAR(kSchedule.drift_coef(1.0), std::exp(-0.5 * quad), 1e-12);
  EXPECT_NEAR(kSchedule.drift_coef(1.0), std::exp(-5.025), 1e-15);
  EXPECT_NEAR(kSchedule.drift_coef(0.5), std::exp(-1.26875), 1e-15);
  const double quad_half = simpson([](double s) { return kSchedule.beta(s); }, 0.0, 0.5);
  EXPECT_NEAR(kSchedule.drift_coef(0.5), std::exp(-0.5 * quad_half), 1e-12);
}

TEST(Schedule, DiffusionStdValues) {
  EXPECT_EQ(kSchedule.diffusion_std(0.0), 0.0);
  EXPECT_NEAR(kSchedule.diffusion_std(1.0), std::sqrt(1.0 - std::exp(-10.05)), 1e-15);
  EXPECT_NEAR(kSchedule.diffusion_std(1.0), 0.99998, 1e-5);
  for (int i = 0; i <= 1000; ++i) {
    const double t = i / 1000.0;
    const double a = kSchedule.drift_coef(t), b = kSchedule.diffusion_std(t);
    EXPECT_NEAR(a * a + b * b, 1.0, 1e-12);
  }
}

TEST(Schedule, MonotoneCoefficients) {
  for (int i = 0; i < 1000; ++i) {
    const double t0 = i / 1000.0, t1 = (i + 1) / 1000.0;
    EXPECT_GT(kSchedule.drift_coef(t0), kSchedule.drift_coef(t1));
    EXPECT_LT(kSchedule.diffusion_std(t0), kSchedule.diffusion_std(t1));
  }
}

TEST(Schedule, DriftAndDiffusionFormulas) {
  EXPECT_TRUE(kSchedule.sde_drift(Matrix::Zero(2, 3), 0.3).isZero());
  // beta(t) = 2 at t = 1.9 / 19.9
  const double t = 1.9 / 19.9;
  EXPECT_NEAR(kSchedule.beta(t), 2.0, 1e-14);
  Matrix x(1, 3);
  x << 1, 0, 0;
  EXPECT_NEAR((kSchedule.sde_drift(x, t) - Eigen::RowVector3d(-1, 0, 0)).norm(), 0.0, 1e-14);
  EXPECT_DOUBLE_EQ(kSchedule.sde_diffusion(0.0), std::sqrt(0.1));
  EXPECT_DOUBLE_EQ(kSchedule.sde_diffusion(1.0), std::sqrt(20.0));
}

TEST(Schedule, DriftCoefficientSolvesOde) {
  // RK4 on da/dt = -beta a / 2
  double a = 1.0;
  const int n = 1000;
  const double h = 1.0 / n;
  auto rhs = [](double t, double y) { return -0.5 * kSchedule.beta(t) * y; };
  for (int i = 0; i < n; ++i) {
    const double t = i * h;
    const double k1 = rhs(t, a), k2 = rhs(t + h / 2, a + h / 2 * k1);
    const double k3 = rhs(t + h / 2, a + h / 2 * k2), k4 = rhs(t + h, a + h * k3);
    a += h / 6 * (k1 + 2 * k2 + 2 * k3 + k4);
    EXPECT_NEAR(a, kSchedule.drift_coef(t + h), 1e-6);
  }
}

TEST(Schedule, VarianceSolvesFokkerPlanck) {
  for (int i = 1; i < 100; ++i) {
    const double t = i / 100.0, h = 1e-5;
    auto var = [](double s) { return std::pow(kSchedule.diffusion_std(s), 2); };
    const double lhs = (var(t + h) - var(t - h)) / (2 * h);
    EXPECT_NEAR(lhs, kSchedule.beta(t) * (1.0 - var(t)), 1e-6);
  }
}

TEST(Perturb, IdentitiesAndAffinity) {
  std::mt19937_64 rng(2);
  const Matrix x0 = random_matrix(rng, 5, 3), n = random_matrix(rng, 5, 3);
  EXPECT_EQ(kSchedule.perturb(x0, 0.0, n), x0);
  EXPECT_EQ(kSchedule.perturb(x0, 0.4, Matrix::Zero(5, 3)), kSchedule.drift_coef(0.4) * x0);
  const Matrix c = Matrix::Constant(5, 3, 0.7);
  const Matrix lhs = kSchedule.perturb(x0 + c, 0.4, n);
  const Matrix rhs = kSchedule.perturb(x0, 0.4, n) + kSchedule.drift_coef(0.4) * c;
  EXPECT_LT((lhs - rhs).cwiseAbs().maxCoeff(), 1e-14);
  EXPECT_THROW(kSchedule.perturb(x0, 0.4, Matrix::Zero(4, 3)), InvalidInput);
}

TEST(Perturb, MonteCarloMoments) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> normal;
  Matrix x0(1, 3);
  x0 << 1.0, -2.0, 0.5;
  const double t = 0.3, a = kSchedule.drift_coef(t), b = kSchedule.diffusion_std(t);
  const int draws = 100000;
  Eigen::RowVector3d sum = Eigen::RowVector3d::Zero(), sq = Eigen::RowVector3d::Zero();
  for (int i = 0; i < draws; ++i) {
    Matrix n(1, 3);
    n << normal(rng), normal(rng), normal(rng);
    const Eigen::RowVector3d v = kSchedule.perturb(x0, t, n);
    sum += v;
    sq += v.cwiseProduct(v);
  }
  const Eigen::RowVector3d mean = sum / draws;
  const Eigen::RowVector3d var = sq / draws - mean.cwiseProduct(mean);
  const double se_mean = b / std::sqrt(draws);
  const double se_var = b * b * std::sqrt(2.0 / draws);
  for (int c = 0; c < 3; ++c) {
    EXPECT_NEAR(mean(c), a * x0(0, c), 3 * se_mean);
    EXPECT_NEAR(var(c), b * b, 3 * se_var);
  }
}

TEST(ConditionalScore, ZeroAtMeanLinearAndSingular) {
  std::mt19937_64 rng(4);
  const Matrix x0 = random_matrix(rng, 4, 3);
  const double t = 0.2, a = kSchedule.drift_coef(t);
  EXPECT_LT(kSchedule.conditional_score_target(x0, a * x0, t).norm(), 1e-14);
  const Matrix d = random_matrix(rng, 4, 3);
  const Matrix one = kSchedule.conditional_score_target(x0, a * x0 + d, t);
  const Matrix two = kSchedule.conditional_score_target(x0, a * x0 + 2 * d, t);
  EXPECT_LT((two - 2 * one).cwiseAbs().maxCoeff(), 1e-12 * one.cwiseAbs().maxCoeff());
  EXPECT_THROW(kSchedule.conditional_score_target(x0, x0, 0.0), SingularTime);
}

TEST(ConditionalScore, MatchesFiniteDifferenceOfLogDensity) {
  std::mt19937_64 rng(5);
  const Matrix x0 = random_matrix(rng, 3, 3);
  for (double t : {0.05, 0.3, 0.9}) {
    const double a = kSchedule.drift_coef(t), b = kSchedule.diffusion_std(t);
    const Matrix xt = kSchedule.perturb(x0, t, random_matrix(rng, 3, 3));
    auto log_density = [&](const Matrix& x) {
      return -0.5 * (x - a * x0).squaredNorm() / (b * b) - 9 * std::log(b);
    };
    const Matrix fd = smoothpc::testing::finite_difference(log_density, xt);
    EXPECT_LT((fd - kSchedule.conditional_score_target(x0, xt, t)).cwiseAbs().maxCoeff(), 1e-5);
  }
}
