#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "smoothpc/error.hpp"
#include "smoothpc/score_models.hpp"
#include "smoothpc/training.hpp"
#include "test_support.hpp"

using namespace smoothpc;
using smoothpc::testing::finite_difference;
using smoothpc::testing::random_matrix;
using smoothpc::testing::random_vector;
using smoothpc::testing::relative_error;

namespace {

const VpSchedule kSchedule(0.1, 20.0);

GaussianMixtureScore three_component() {
  Matrix means(3, 3);
  means << 1, 0, 0, -1, 1, 0, 0, -1, 2;
  Vector w(3);
  w << 0.2, 0.5, 0.3;
  return GaussianMixtureScore(means, 0.4, w, kSchedule);
}

// fills every parameter so that no layer is trivially zero
template <typename Net>
void randomise(Net& net, std::uint64_t seed, double scale = 0.3) {
  std::mt19937_64 rng(seed);
  net.parameters() = random_vector(rng, net.parameter_count(), scale);
}

MlpScoreNet small_decoder(int latent = 4) {
  return MlpScoreNet({latent, 16, 2, 8}, kSchedule);
}

// checks a random subset of parameter coordinates
template <typename F>
void expect_param_gradient(F&& objective, Vector params, const Vector& analytic, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<Eigen::Index> pick(0, params.size() - 1);
  const double h = 1e-6;
  double worst = 0.0;
  for (int n = 0; n < 60; ++n) {
    const Eigen::Index i = pick(rng);
    const double saved = params(i);
    params(i) = saved + h;
    const double up = objective(params);
    params(i) = saved - h;
    const double down = objective(params);
    params(i) = saved;
    const double fd = (up - down) / (2 * h);
    worst = std::max(worst, std::abs(fd - analytic(i)) / std::max(analytic.cwiseAbs().maxCoeff(), 1e-8));
  }
  EXPECT_LT(worst, 1e-4);
}

}  // namespace

TEST(GaussianMixture, RejectsBadWeights) {
  Matrix means = Matrix::Zero(2, 3);
  Vector w(2);
  w << 0.5, 0.6;
  EXPECT_THROW(GaussianMixtureScore(means, 0.3, w, kSchedule), InvalidParameter);
  w << 1.0, 0.0;
  EXPECT_THROW(GaussianMixtureScore(means, 0.3, w, kSchedule), InvalidParameter);
  w << 0.5, 0.5;
  EXPECT_THROW(GaussianMixtureScore(means, 0.0, w, kSchedule), InvalidParameter);
}

TEST(GaussianMixture, UnitGaussianScoreIsMinusX) {
  const GaussianMixtureScore gmm(Matrix::Zero(1, 3), 1.0, Vector::Ones(1), kSchedule);
  std::mt19937_64 rng(1);
  const Matrix x = random_matrix(rng, 6, 3);
  for (double t : {1e-5, 0.3, 1.0}) {
    EXPECT_LT((gmm.evaluate(x, Vector(), t) + x).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(GaussianMixture, SymmetricPairVanishesAtOrigin) {
  Matrix means(2, 3);
  means << 2, 0, 0, -2, 0, 0;
  const GaussianMixtureScore gmm(means, 0.3, Vector::Constant(2, 0.5), kSchedule);
  EXPECT_LT(gmm.evaluate(Matrix::Zero(1, 3), Vector(), 0.4).norm(), 1e-15);
}

TEST(GaussianMixture, ScoreMatchesLogDensityDifferences) {
  const auto gmm = three_component();
  std::mt19937_64 rng(2);
  for (double t : {1e-3, 0.1, 0.5, 1.0}) {
    const Matrix x = random_matrix(rng, 5, 3, 1.5);
    const Matrix s = gmm.evaluate(x, Vector(), t);
    for (Eigen::Index i = 0; i < 5; ++i) {
      const Matrix fd = finite_difference(
          [&](const Matrix& p) { return gmm.log_density(p.row(0), t); }, Matrix(x.row(i)), 1e-6);
      EXPECT_LT((fd - s.row(i)).cwiseAbs().maxCoeff(), 1e-5);
    }
  }
}

TEST(GaussianMixture, InputVjpMatchesFiniteDifferences) {
  const auto gmm = three_component();
  std::mt19937_64 rng(3);
  const Matrix x = random_matrix(rng, 4, 3);
  const Matrix v = random_matrix(rng, 4, 3);
  const double t = 0.2;
  const Matrix fd = finite_difference(
      [&](const Matrix& p) { return (gmm.evaluate(p, Vector(), t).array() * v.array()).sum(); }, x);
  EXPECT_LT(relative_error(gmm.input_vjp(x, Vector(), t, v), fd), 1e-6);
}

TEST(GaussianMixture, ConvergesToCleanScoreAtSmallTime) {
  const auto gmm = three_component();
  std::mt19937_64 rng(4);
  const Matrix x = random_matrix(rng, 8, 3);
  const auto clean = [&](const Matrix& p) {
    // score of the unperturbed mixture by differences of its log density
    Matrix out(p.rows(), 3);
    for (Eigen::Index i = 0; i < p.rows(); ++i) {
      out.row(i) = finite_difference(
          [&](const Matrix& q) {
            double total = 0.0;
            for (Eigen::Index k = 0; k < 3; ++k) {
              total += gmm.weights()(k) *
                       std::exp(-0.5 * (q.row(0) - gmm.means().row(k)).squaredNorm() / 0.16);
            }
            return std::log(total);
          },
          Matrix(p.row(i)), 1e-6);
    }
    return out;
  }(x);
  double previous = INFINITY;
  for (double t : {1e-1, 1e-2, 1e-3, 1e-5}) {
    const double dev = (gmm.evaluate(x, Vector(), t) - clean).cwiseAbs().maxCoeff();
    EXPECT_LT(dev, previous);
    previous = dev;
  }
  EXPECT_LT(previous, 1e-4);
}

TEST(Decoder, ZeroInitialisedOutput) {
  auto net = small_decoder();
  net.initialize(7);
  std::mt19937_64 rng(1);
  EXPECT_TRUE(net.evaluate(random_matrix(rng, 10, 3), random_vector(rng, 4), 0.5).isZero());
}

TEST(Decoder, PermutationEquivariantAndDeterministic) {
  auto net = small_decoder();
  randomise(net, 2);
  std::mt19937_64 rng(3);
  const Matrix x = random_matrix(rng, 12, 3);
  const Vector z = random_vector(rng, 4);
  std::vector<Eigen::Index> perm(12);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  Matrix px(12, 3);
  for (Eigen::Index i = 0; i < 12; ++i) px.row(i) = x.row(perm[static_cast<std::size_t>(i)]);
  const Matrix s = net.evaluate(x, z, 0.3);
  const Matrix ps = net.evaluate(px, z, 0.3);
  for (Eigen::Index i = 0; i < 12; ++i) EXPECT_EQ(ps.row(i), s.row(perm[static_cast<std::size_t>(i)]));
  EXPECT_EQ(net.evaluate(x, z, 0.3), s);
}

TEST(Decoder, DimensionErrors) {
  auto net = small_decoder();
  net.initialize(1);
  EXPECT_THROW(net.evaluate(Matrix::Zero(4, 3), Vector::Zero(3), 0.5), InvalidInput);
  EXPECT_THROW(net.evaluate(Matrix::Zero(4, 2), Vector::Zero(4), 0.5), InvalidInput);
}

TEST(Decoder, ThreeGradientPathsMatchFiniteDifferences) {
  auto net = small_decoder();
  randomise(net, 4);
  std::mt19937_64 rng(5);
  const Matrix x = random_matrix(rng, 6, 3);
  const Vector z = random_vector(rng, 4);
  const Matrix v = random_matrix(rng, 6, 3);
  const double t = 0.35;
  auto objective = [&](const Matrix& xs, const Vector& zs) {
    return (net.evaluate(xs, zs, t).array() * v.array()).sum();
  };
  MlpScoreNet::Tape tape;
  net.forward(x, z, t, tape);
  NetGradients g;
  net.backward(tape, v, g);

  EXPECT_LT(relative_error(g.input, finite_difference([&](const Matrix& p) { return objective(p, z); }, x)), 1e-4);
  EXPECT_LT(relative_error(g.latent, finite_difference([&](const Matrix& p) { return objective(x, p); }, Matrix(z))),
            1e-4);
  EXPECT_LT(relative_error(net.input_vjp(x, z, t, v), g.input), 1e-12);
  expect_param_gradient(
      [&](const Vector& p) {
        MlpScoreNet copy = net;
        copy.parameters() = p;
        return (copy.evaluate(x, z, t).array() * v.array()).sum();
      },
      net.parameters(), g.params, 6);
}

TEST(LatentNet, ZeroInitialisedAndGradients) {
  LatentScoreNet net({5, 16, 2, 8}, kSchedule);
  net.initialize(3);
  std::mt19937_64 rng(6);
  EXPECT_TRUE(net.score(random_vector(rng, 5), 0.4).isZero());

  randomise(net, 7);
  const Matrix zt = random_matrix(rng, 3, 5);
  const Matrix v = random_matrix(rng, 3, 5);
  LatentScoreNet::Tape tape;
  net.forward(zt, 0.6, tape);
  NetGradients g;
  net.backward(tape, v, g);
  const Matrix fd = finite_difference(
      [&](const Matrix& p) { return (net.evaluate(p, Vector(), 0.6).array() * v.array()).sum(); }, zt);
  EXPECT_LT(relative_error(g.input, fd), 1e-4);
  expect_param_gradient(
      [&](const Vector& p) {
        LatentScoreNet copy = net;
        copy.parameters() = p;
        return (copy.evaluate(zt, Vector(), 0.6).array() * v.array()).sum();
      },
      net.parameters(), g.params, 8);
  EXPECT_EQ(net.score(zt.row(1).transpose(), 0.6).transpose(), net.evaluate(zt, Vector(), 0.6).row(1));
  EXPECT_THROW(net.evaluate(Matrix::Zero(2, 4), Vector(), 0.6), InvalidInput);
}

TEST(LatentNet, TrainedOnUnitGaussianHasZeroScoreAtOrigin) {
  LatentScoreNet net({2, 32, 2, 8}, kSchedule);
  net.initialize(11);
  nn::Adam opt(net.parameter_count());
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> time(1e-3, 1.0);
  for (int step = 0; step < 3000; ++step) {
    Vector grad = Vector::Zero(net.parameter_count());
    for (int b = 0; b < 32; ++b) {
      NetGradients g;
      latent_dsm_loss_grad(net, random_vector(rng, 2), time(rng), random_vector(rng, 2), g);
      grad += g.params / 32.0;
    }
    opt.step(net.parameters(), grad, step < 2000 ? 2e-3 : 5e-4);
  }
  // the exact score of N(0, I) under the VP kernel is -z; 0 at the origin
  for (double t : {0.1, 0.5, 0.9}) {
    EXPECT_LT(net.score(Vector::Zero(2), t).norm(), 0.25) << "t=" << t;
    const Vector z = Vector::Constant(2, 1.0);
    EXPECT_LT((net.score(z, t) + z).norm(), 0.5) << "t=" << t;
  }
}

TEST(Encoder, PermutationAndDuplicationInvariant) {
  PointEncoder enc({6, 8, 12});
  randomise(enc, 9);
  std::mt19937_64 rng(10);
  const Matrix x = random_matrix(rng, 20, 3);
  const auto out = enc.evaluate(x);
  Matrix reversed = x.colwise().reverse();
  const auto rev = enc.evaluate(reversed);
  EXPECT_LT((rev.mean - out.mean).cwiseAbs().maxCoeff(), 1e-9);
  EXPECT_LT((rev.logvar - out.logvar).cwiseAbs().maxCoeff(), 1e-9);
  Matrix doubled(40, 3);
  doubled << x, x;
  const auto dup = enc.evaluate(doubled);
  EXPECT_EQ(dup.mean, out.mean);
  EXPECT_EQ(dup.logvar, out.logvar);
  EXPECT_LE(out.logvar.maxCoeff(), kLogvarMax);
  EXPECT_GE(out.logvar.minCoeff(), kLogvarMin);
}

TEST(Encoder, ParameterGradientMatchesFiniteDifferences) {
  PointEncoder enc({6, 8, 12});
  randomise(enc, 13);
  std::mt19937_64 rng(14);
  const Matrix x = random_matrix(rng, 15, 3);
  const Vector gm = random_vector(rng, 6), gv = random_vector(rng, 6);
  PointEncoder::Tape tape;
  enc.forward(x, tape);
  const Vector analytic = enc.backward(tape, gm, gv);
  expect_param_gradient(
      [&](const Vector& p) {
        PointEncoder copy = enc;
        copy.parameters() = p;
        const auto o = copy.evaluate(x);
        return o.mean.dot(gm) + o.logvar.dot(gv);
      },
      enc.parameters(), analytic, 15);
}

TEST(Reparameterize, IdentitiesAndMoments) {
  Vector mean(3), logvar(3);
  mean << 1.0, -2.0, 0.5;
  logvar << 0.0, std::log(4.0), -1.0;
  EXPECT_EQ(reparameterize(mean, logvar, Vector::Zero(3)), mean);
  EXPECT_LT((reparameterize(mean, Vector::Constant(3, -1e6), Vector::Ones(3)) - mean).norm(), 1e-4);

  std::mt19937_64 rng(16);
  const int draws = 100000;
  Vector sum = Vector::Zero(3), sq = Vector::Zero(3);
  for (int i = 0; i < draws; ++i) {
    const Vector z = reparameterize(mean, logvar, random_vector(rng, 3));
    sum += z;
    sq += z.cwiseProduct(z);
  }
  const Vector m = sum / draws;
  const Vector var = sq / draws - m.cwiseProduct(m);
  for (int j = 0; j < 3; ++j) {
    const double sigma2 = std::exp(logvar(j));
    EXPECT_NEAR(m(j), mean(j), 3 * std::sqrt(sigma2 / draws));
    EXPECT_NEAR(var(j), sigma2, 3 * sigma2 * std::sqrt(2.0 / draws));
  }
}
