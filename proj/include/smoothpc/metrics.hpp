#pragma once

#include <functional>
#include <vector>

#include "smoothpc/geometry.hpp"

namespace smoothpc {

/// Set-to-set distance between two clouds.
using CloudDistance = std::function<double(const PointCloud&, const PointCloud&)>;

/// Squared-distance Chamfer:
///   mean_p min_q |p - q|^2 + mean_q min_p |q - p|^2
double chamfer(const PointCloud& p, const PointCloud& q);

/// D(rows[i], cols[j]) for every pair.
Matrix pairwise_distances(const std::vector<PointCloud>& rows, const std::vector<PointCloud>& cols,
                          const CloudDistance& distance = chamfer);

/// Minimum matching distance: mean over references of the closest generated cloud.
double mmd(const std::vector<PointCloud>& reference, const std::vector<PointCloud>& generated,
           const CloudDistance& distance = chamfer);
double mmd_from_matrix(const Matrix& ref_by_gen);

/// Coverage: fraction of references that are the nearest reference of some
/// generated cloud. Ties go to the lowest reference index.
double cov(const std::vector<PointCloud>& reference, const std::vector<PointCloud>& generated,
           const CloudDistance& distance = chamfer);
double cov_from_matrix(const Matrix& ref_by_gen);

/// Leave-one-out 1-NN two-sample accuracy over the pooled sets. Ties go to
/// the lower pooled index (references first).
double one_nna(const std::vector<PointCloud>& reference, const std::vector<PointCloud>& generated,
               const CloudDistance& distance = chamfer);
/// `pooled` is the (R+G) x (R+G) distance matrix, references first.
double one_nna_from_matrix(const Matrix& pooled, Eigen::Index n_reference);

/// Mean self-smoothness of a set (each cloud under its own k-NN Laplacian).
double mean_smoothness(const std::vector<PointCloud>& clouds, int k);

/// Relative smoothness |mean S(model) - mean S(data)|. Throws InvalidInput
/// if any cloud has N <= k.
double rs(const std::vector<PointCloud>& model_set, const std::vector<PointCloud>& data_set, int k);

struct MetricReport {
  double mmd = 0.0;
  double cov = 0.0;
  double one_nna = 0.0;
  double rs = 0.0;
  double gt_smoothness = 0.0;
  double model_smoothness = 0.0;
  std::size_t n_reference = 0;
  std::size_t n_generated = 0;
  int knn_k = 0;
};

/// All metrics from a single pooled distance matrix.
MetricReport evaluate_metrics(const std::vector<PointCloud>& reference,
                              const std::vector<PointCloud>& generated, int k,
                              const CloudDistance& distance = chamfer);

/// CSV with header `metric,value`; MMD also reported scaled by 100.
std::string format_metric_csv(const MetricReport& report);

}  // namespace smoothpc
