#include "smoothpc/metrics.hpp"

#include <charconv>
#include <cmath>
#include <limits>
#include <set>
#include <string>

#include "smoothpc/error.hpp"

namespace smoothpc {

namespace {

double mean_nearest(const Matrix& from, const Matrix& to) {
  double total = 0.0;
  for (Eigen::Index i = 0; i < from.rows(); ++i) {
    double best = std::numeric_limits<double>::infinity();
    for (Eigen::Index j = 0; j < to.rows(); ++j) {
      best = std::min(best, (from.row(i) - to.row(j)).squaredNorm());
    }
    total += best;
  }
  return total / static_cast<double>(from.rows());
}

void require_nonempty(const std::vector<PointCloud>& set, const char* what) {
  if (set.empty()) throw InvalidInput(std::string(what) + " set is empty");
}

std::string format_double(double value) {
  char buffer[32];
  const auto [ptr, ec] = std::to_chars(buffer, buffer + sizeof buffer, value);
  return std::string(buffer, ptr);
}

}  // namespace

double chamfer(const PointCloud& p, const PointCloud& q) {
  if (p.size() == 0 || q.size() == 0) throw InvalidInput("chamfer: empty cloud");
  return mean_nearest(p.points(), q.points()) + mean_nearest(q.points(), p.points());
}

Matrix pairwise_distances(const std::vector<PointCloud>& rows, const std::vector<PointCloud>& cols,
                          const CloudDistance& distance) {
  Matrix out(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < cols.size(); ++j) {
      out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = distance(rows[i], cols[j]);
    }
  }
  return out;
}

double mmd_from_matrix(const Matrix& ref_by_gen) {
  if (ref_by_gen.rows() == 0 || ref_by_gen.cols() == 0) throw InvalidInput("mmd: empty set");
  // summed in row order so results are reproducible against a plain loop
  double sum = 0.0;
  for (Eigen::Index r = 0; r < ref_by_gen.rows(); ++r) sum += ref_by_gen.row(r).minCoeff();
  return sum / static_cast<double>(ref_by_gen.rows());
}

double mmd(const std::vector<PointCloud>& reference, const std::vector<PointCloud>& generated,
           const CloudDistance& distance) {
  require_nonempty(reference, "reference");
  require_nonempty(generated, "generated");
  return mmd_from_matrix(pairwise_distances(reference, generated, distance));
}

double cov_from_matrix(const Matrix& ref_by_gen) {
  if (ref_by_gen.rows() == 0 || ref_by_gen.cols() == 0) throw InvalidInput("cov: empty set");
  std::set<Eigen::Index> covered;
  for (Eigen::Index g = 0; g < ref_by_gen.cols(); ++g) {
    Eigen::Index best = 0;
    for (Eigen::Index r = 1; r < ref_by_gen.rows(); ++r) {
      if (ref_by_gen(r, g) < ref_by_gen(best, g)) best = r;
    }
    covered.insert(best);
  }
  return static_cast<double>(covered.size()) / static_cast<double>(ref_by_gen.rows());
}

double cov(const std::vector<PointCloud>& reference, const std::vector<PointCloud>& generated,
           const CloudDistance& distance) {
  require_nonempty(reference, "reference");
  require_nonempty(generated, "generated");
  return cov_from_matrix(pairwise_distances(reference, generated, distance));
}

double one_nna_from_matrix(const Matrix& pooled, Eigen::Index n_reference) {
  const Eigen::Index n = pooled.rows();
  if (n < 2) throw InvalidInput("1-NNA needs at least two clouds in the pool");
  Eigen::Index correct = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    Eigen::Index best = -1;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (j == i) continue;
      if (best < 0 || pooled(i, j) < pooled(i, best)) best = j;
    }
    if ((i < n_reference) == (best < n_reference)) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(n);
}

double one_nna(const std::vector<PointCloud>& reference, const std::vector<PointCloud>& generated,
               const CloudDistance& distance) {
  std::vector<PointCloud> pool = reference;
  pool.insert(pool.end(), generated.begin(), generated.end());
  if (pool.size() < 2) throw InvalidInput("1-NNA needs at least two clouds in the pool");
  return one_nna_from_matrix(pairwise_distances(pool, pool, distance),
                             static_cast<Eigen::Index>(reference.size()));
}

double mean_smoothness(const std::vector<PointCloud>& clouds, int k) {
  require_nonempty(clouds, "smoothness");
  double total = 0.0;
  for (const auto& cloud : clouds) {
    if (cloud.size() <= k) {
      throw InvalidInput("relative smoothness: cloud with " + std::to_string(cloud.size()) +
                         " points cannot host a " + std::to_string(k) + "-NN graph");
    }
    total += self_smoothness(cloud.points(), k);
  }
  return total / static_cast<double>(clouds.size());
}

double rs(const std::vector<PointCloud>& model_set, const std::vector<PointCloud>& data_set, int k) {
  return std::abs(mean_smoothness(model_set, k) - mean_smoothness(data_set, k));
}

MetricReport evaluate_metrics(const std::vector<PointCloud>& reference,
                              const std::vector<PointCloud>& generated, int k,
                              const CloudDistance& distance) {
  require_nonempty(reference, "reference");
  require_nonempty(generated, "generated");
  std::vector<PointCloud> pool = reference;
  pool.insert(pool.end(), generated.begin(), generated.end());
  // symmetric distance: fill the upper triangle once
  const auto n = static_cast<Eigen::Index>(pool.size());
  Matrix pooled = Matrix::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      pooled(i, j) = distance(pool[static_cast<std::size_t>(i)], pool[static_cast<std::size_t>(j)]);
      pooled(j, i) = pooled(i, j);
    }
  }
  const auto r = static_cast<Eigen::Index>(reference.size());
  const auto g = static_cast<Eigen::Index>(generated.size());
  const Matrix ref_by_gen = pooled.block(0, r, r, g);

  MetricReport report;
  report.mmd = mmd_from_matrix(ref_by_gen);
  report.cov = cov_from_matrix(ref_by_gen);
  report.one_nna = one_nna_from_matrix(pooled, r);
  report.gt_smoothness = mean_smoothness(reference, k);
  report.model_smoothness = mean_smoothness(generated, k);
  report.rs = std::abs(report.model_smoothness - report.gt_smoothness);
  report.n_reference = reference.size();
  report.n_generated = generated.size();
  report.knn_k = k;
  return report;
}

std::string format_metric_csv(const MetricReport& report) {
  std::string out = "metric,value\n";
  const auto row = [&out](const char* name, double value) {
    out += name;
    out += ',';
    out += format_double(value);
    out += '\n';
  };
  row("mmd", report.mmd);
  row("mmd_x100", report.mmd * 100.0);
  row("cov", report.cov);
  row("one_nna", report.one_nna);
  row("rs", report.rs);
  row("gt_smoothness", report.gt_smoothness);
  row("model_smoothness", report.model_smoothness);
  return out;
}

}  // namespace smoothpc
