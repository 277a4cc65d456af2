#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SparseCore>

namespace smoothpc {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using SparseMatrix = Eigen::SparseMatrix<double>;

/// N x 3 matrix of finite coordinates, one point per row.
class PointCloud {
 public:
  PointCloud() = default;
  /// Throws InvalidInput unless `points` has 3 columns, at least one row and
  /// only finite entries.
  explicit PointCloud(Matrix points);

  const Matrix& points() const noexcept { return points_; }
  Eigen::Index size() const noexcept { return points_.rows(); }
  Eigen::RowVector3d point(Eigen::Index i) const { return points_.row(i); }

  friend bool operator==(const PointCloud&, const PointCloud&) = default;

 private:
  Matrix points_{0, 3};
};

/// Directed k-nearest-neighbour lists plus their symmetric (union) closure.
struct KnnGraph {
  int k = 0;
  Eigen::Index n_nodes = 0;
  /// neighbors[i] holds the k nearest other points of i, closest first.
  std::vector<std::vector<Eigen::Index>> neighbors;
  /// Undirected edges (i, j) with i < j, sorted lexicographically.
  std::vector<std::pair<Eigen::Index, Eigen::Index>> edges;
};

/// Combinatorial graph Laplacian L = D - W over binary weights.
class Laplacian {
 public:
  Laplacian() = default;
  explicit Laplacian(SparseMatrix matrix) : matrix_(std::move(matrix)) {}

  const SparseMatrix& matrix() const noexcept { return matrix_; }
  Eigen::Index dimension() const noexcept { return matrix_.rows(); }
  Matrix dense() const { return Matrix(matrix_); }

 private:
  SparseMatrix matrix_;
};

/// Neighbour lists ordered by (distance, index). Requires 1 <= k <= N-1.
KnnGraph build_knn_graph(const Matrix& points, int k);
inline KnnGraph build_knn_graph(const PointCloud& cloud, int k) {
  return build_knn_graph(cloud.points(), k);
}

Laplacian build_laplacian(const KnnGraph& graph);

/// Convenience: Laplacian of the k-NN graph of `points`.
Laplacian knn_laplacian(const Matrix& points, int k);

/// trace(X^T L X), i.e. the sum of squared edge lengths over undirected edges.
double smoothness(const Matrix& points, const Laplacian& laplacian);
inline double smoothness(const PointCloud& cloud, const Laplacian& laplacian) {
  return smoothness(cloud.points(), laplacian);
}

/// Gradient of smoothness with the graph held fixed: 2 L X.
Matrix smoothness_gradient(const Matrix& points, const Laplacian& laplacian);
inline Matrix smoothness_gradient(const PointCloud& cloud, const Laplacian& laplacian) {
  return smoothness_gradient(cloud.points(), laplacian);
}

/// Smoothness of a cloud under its own k-NN Laplacian.
double self_smoothness(const Matrix& points, int k);

enum class ShapeKind { sphere, torus, plane_grid, helix };

ShapeKind parse_shape_kind(std::string_view name);
std::string_view to_string(ShapeKind kind);

struct ShapeSpec {
  ShapeKind kind = ShapeKind::sphere;
  /// sphere and helix radius.
  double radius = 1.0;
  /// torus centre-line radius and tube radius.
  double major_radius = 1.0;
  double minor_radius = 0.3;
  /// plane_grid side length, helix height.
  double extent = 2.0;
  /// helix turns.
  double turns = 3.0;
  int n_points = 256;
  double noise_std = 0.0;
  std::uint64_t seed = 0;
  /// Rescale so the bounding-box diagonal is at most 2 (after centering).
  bool normalize = false;
};

/// Seeded samples on the ideal surface plus Gaussian jitter. Identical specs
/// give bit-identical clouds.
PointCloud generate_shape(const ShapeSpec& spec);

}  // namespace smoothpc
