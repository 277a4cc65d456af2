#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>
#include <set>

#include "smoothpc/error.hpp"
#include "smoothpc/metrics.hpp"
#include "test_support.hpp"

using namespace smoothpc;
using smoothpc::testing::random_matrix;

namespace {

std::vector<PointCloud> random_set(std::mt19937_64& rng, int count, int points, double shift = 0.0) {
  std::vector<PointCloud> out;
  for (int i = 0; i < count; ++i) {
    Matrix x = random_matrix(rng, points, 3);
    x.col(0).array() += shift;
    out.emplace_back(x);
  }
  return out;
}

double brute_chamfer(const Matrix& p, const Matrix& q) {
  double a = 0.0, b = 0.0;
  for (Eigen::Index i = 0; i < p.rows(); ++i) {
    double best = std::numeric_limits<double>::infinity();
    for (Eigen::Index j = 0; j < q.rows(); ++j) {
      double d = 0.0;
      for (int c = 0; c < 3; ++c) d += (p(i, c) - q(j, c)) * (p(i, c) - q(j, c));
      best = std::min(best, d);
    }
    a += best;
  }
  for (Eigen::Index j = 0; j < q.rows(); ++j) {
    double best = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < p.rows(); ++i) {
      double d = 0.0;
      for (int c = 0; c < 3; ++c) d += (p(i, c) - q(j, c)) * (p(i, c) - q(j, c));
      best = std::min(best, d);
    }
    b += best;
  }
  return a / p.rows() + b / q.rows();
}

struct Oracle {
  double mmd, cov, nna;
};

// exhaustive enumeration over brute-force chamfer values
Oracle brute_metrics(const std::vector<PointCloud>& ref, const std::vector<PointCloud>& gen) {
  const std::size_t r = ref.size(), g = gen.size();
  Oracle o{};
  for (std::size_t i = 0; i < r; ++i) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < g; ++j) best = std::min(best, brute_chamfer(ref[i].points(), gen[j].points()));
    o.mmd += best;
  }
  o.mmd /= static_cast<double>(r);
  std::set<std::size_t> covered;
  for (std::size_t j = 0; j < g; ++j) {
    std::size_t arg = 0;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < r; ++i) {
      const double d = brute_chamfer(ref[i].points(), gen[j].points());
      if (d < best) best = d, arg = i;
    }
    covered.insert(arg);
  }
  o.cov = static_cast<double>(covered.size()) / static_cast<double>(r);
  std::vector<const PointCloud*> pool;
  for (const auto& c : ref) pool.push_back(&c);
  for (const auto& c : gen) pool.push_back(&c);
  int correct = 0;
  for (std::size_t i = 0; i < pool.size(); ++i) {
    std::size_t arg = 0;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < pool.size(); ++j) {
      if (j == i) continue;
      const double d = brute_chamfer(pool[i]->points(), pool[j]->points());
      if (d < best) best = d, arg = j;
    }
    if ((i < r) == (arg < r)) ++correct;
  }
  o.nna = correct / static_cast<double>(pool.size());
  return o;
}

std::vector<PointCloud> torus_family(std::uint64_t seed, int count) {
  std::vector<PointCloud> out;
  for (int i = 0; i < count; ++i) {
    ShapeSpec spec;
    spec.kind = ShapeKind::torus;
    spec.n_points = 64;
    spec.noise_std = 0.02;
    spec.seed = seed * 1000 + static_cast<std::uint64_t>(i);
    out.push_back(generate_shape(spec));
  }
  return out;
}

}  // namespace

TEST(Chamfer, HandCasesAndSymmetry) {
  Matrix p(1, 3), q(1, 3);
  p << 0, 0, 0;
  q << 1, 0, 0;
  EXPECT_DOUBLE_EQ(chamfer(PointCloud(p), PointCloud(q)), 2.0);
  std::mt19937_64 rng(1);
  const PointCloud a(random_matrix(rng, 20, 3)), b(random_matrix(rng, 25, 3));
  EXPECT_EQ(chamfer(a, a), 0.0);
  EXPECT_EQ(chamfer(a, b), chamfer(b, a));
  EXPECT_NEAR(chamfer(a, b), brute_chamfer(a.points(), b.points()), 1e-12);
  const Eigen::Matrix3d rot = Eigen::AngleAxisd(1.1, Eigen::Vector3d(0, 1, 1).normalized()).toRotationMatrix();
  const Eigen::RowVector3d shift(0.5, -2.0, 1.0);
  const PointCloud ra((a.points() * rot.transpose()).rowwise() + shift);
  const PointCloud rb((b.points() * rot.transpose()).rowwise() + shift);
  EXPECT_NEAR(chamfer(ra, rb), chamfer(a, b), 1e-12);
  EXPECT_THROW(chamfer(PointCloud(), a), InvalidInput);
}

TEST(SetMetrics, SelfComparison) {
  std::mt19937_64 rng(2);
  const auto s = random_set(rng, 6, 16);
  EXPECT_EQ(mmd(s, s), 0.0);
  EXPECT_EQ(cov(s, s), 1.0);
  // duplicates across the two sets: every nearest neighbour is cross-set
  EXPECT_EQ(one_nna(s, s), 0.0);
}

TEST(SetMetrics, SingletonsAndIdenticalGenerated) {
  std::mt19937_64 rng(3);
  const auto r = random_set(rng, 1, 10), g = random_set(rng, 1, 10);
  EXPECT_EQ(mmd(r, g), chamfer(r[0], g[0]));
  const auto refs = random_set(rng, 5, 10);
  const std::vector<PointCloud> same(4, g[0]);
  EXPECT_DOUBLE_EQ(cov(refs, same), 1.0 / 5.0);
}

TEST(SetMetrics, SeparatedSetsGivePerfectAccuracy) {
  std::mt19937_64 rng(4);
  const auto r = random_set(rng, 8, 12), g = random_set(rng, 8, 12, 50.0);
  EXPECT_EQ(one_nna(r, g), 1.0);
  EXPECT_EQ(one_nna(g, r), 1.0);
}

TEST(SetMetrics, MatchBruteForceOracles) {
  std::mt19937_64 rng(5);
  for (auto [nr, ng] : {std::pair{8, 8}, std::pair{5, 5}, std::pair{6, 4}}) {
    const auto r = random_set(rng, nr, 12), g = random_set(rng, ng, 12);
    const Oracle o = brute_metrics(r, g);
    EXPECT_EQ(mmd(r, g), o.mmd);
    EXPECT_EQ(cov(r, g), o.cov);
    EXPECT_EQ(one_nna(r, g), o.nna);
    EXPECT_EQ(one_nna(g, r), one_nna(r, g));
    const auto report = evaluate_metrics(r, g, 4);
    EXPECT_EQ(report.mmd, o.mmd);
    EXPECT_EQ(report.cov, o.cov);
    EXPECT_EQ(report.one_nna, o.nna);
  }
}

TEST(SetMetrics, MatrixTieBreaking) {
  // generated 0 is equidistant to references 0 and 1 -> reference 0
  Matrix d(3, 2);
  d << 1, 5, 1, 5, 4, 2;
  EXPECT_DOUBLE_EQ(cov_from_matrix(d), 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(mmd_from_matrix(d), (1 + 1 + 2) / 3.0);
  // pooled: cloud 0 is equidistant to 1 (same set) and 2 (other set) -> 1
  Matrix pooled(3, 3);
  pooled << 0, 1, 1, 1, 0, 3, 1, 3, 0;
  EXPECT_DOUBLE_EQ(one_nna_from_matrix(pooled, 2), 2.0 / 3.0);
}

TEST(SetMetrics, EmptyInputsThrow) {
  std::mt19937_64 rng(6);
  const auto s = random_set(rng, 2, 5);
  const std::vector<PointCloud> empty;
  EXPECT_THROW(mmd(empty, s), InvalidInput);
  EXPECT_THROW(mmd(s, empty), InvalidInput);
  EXPECT_THROW(cov(s, empty), InvalidInput);
  EXPECT_THROW(one_nna(empty, empty), InvalidInput);
}

TEST(OneNna, SameFamilyIsNearChance) {
  int inside = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const double acc = one_nna(torus_family(2 * seed + 1, 50), torus_family(2 * seed + 2, 50));
    if (acc >= 0.35 && acc <= 0.65) ++inside;
  }
  EXPECT_GE(inside, 8);
}

TEST(RelativeSmoothness, Definition) {
  std::mt19937_64 rng(7);
  const auto a = random_set(rng, 3, 20), b = random_set(rng, 1, 20), c = random_set(rng, 1, 20);
  EXPECT_EQ(rs(a, a, 5), 0.0);
  EXPECT_DOUBLE_EQ(rs(b, c, 5), std::abs(self_smoothness(b[0].points(), 5) - self_smoothness(c[0].points(), 5)));
  EXPECT_EQ(rs(a, b, 5), rs(b, a, 5));
  EXPECT_THROW(rs(a, b, 20), InvalidInput);
  EXPECT_THROW(mean_smoothness({}, 3), InvalidInput);
}

TEST(Report, CsvLayout) {
  MetricReport r;
  r.mmd = 0.25;
  r.cov = 0.5;
  r.one_nna = 0.75;
  r.rs = 3.0;
  r.gt_smoothness = 10.0;
  r.model_smoothness = 13.0;
  EXPECT_EQ(format_metric_csv(r),
            "metric,value\nmmd,0.25\nmmd_x100,25\ncov,0.5\none_nna,0.75\nrs,3\n"
            "gt_smoothness,10\nmodel_smoothness,13\n");
}
