#include "smoothpc/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "smoothpc/error.hpp"

namespace smoothpc {

PointCloud::PointCloud(Matrix points) : points_(std::move(points)) {
  if (points_.cols() != 3) {
    throw InvalidInput("point cloud must have 3 columns, got " + std::to_string(points_.cols()));
  }
  if (points_.rows() < 1) throw InvalidInput("point cloud is empty");
  if (!points_.allFinite()) throw InvalidInput("point cloud has non-finite coordinates");
}

KnnGraph build_knn_graph(const Matrix& points, int k) {
  const Eigen::Index n = points.rows();
  if (!points.allFinite()) throw InvalidInput("knn graph: non-finite coordinates");
  if (k < 1 || n < 2 || k > n - 1) {
    throw InvalidParameter("knn graph: k=" + std::to_string(k) + " outside [1, " +
                           std::to_string(n - 1) + "]");
  }

  KnnGraph graph;
  graph.k = k;
  graph.n_nodes = n;
  graph.neighbors.resize(static_cast<std::size_t>(n));

  std::vector<std::pair<double, Eigen::Index>> candidates;
  candidates.reserve(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    candidates.clear();
    for (Eigen::Index j = 0; j < n; ++j) {
      if (j == i) continue;
      candidates.emplace_back((points.row(i) - points.row(j)).squaredNorm(), j);
    }
    // pair ordering gives (distance, index) tie-breaking
    std::partial_sort(candidates.begin(), candidates.begin() + k, candidates.end());
    auto& row = graph.neighbors[static_cast<std::size_t>(i)];
    row.reserve(static_cast<std::size_t>(k));
    for (int r = 0; r < k; ++r) row.push_back(candidates[static_cast<std::size_t>(r)].second);
  }

  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j : graph.neighbors[static_cast<std::size_t>(i)]) {
      graph.edges.emplace_back(std::min(i, j), std::max(i, j));
    }
  }
  std::sort(graph.edges.begin(), graph.edges.end());
  graph.edges.erase(std::unique(graph.edges.begin(), graph.edges.end()), graph.edges.end());
  return graph;
}

Laplacian build_laplacian(const KnnGraph& graph) {
  const Eigen::Index n = graph.n_nodes;
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(graph.edges.size() * 4);
  Vector degree = Vector::Zero(n);
  for (const auto& [i, j] : graph.edges) {
    triplets.emplace_back(i, j, -1.0);
    triplets.emplace_back(j, i, -1.0);
    degree(i) += 1.0;
    degree(j) += 1.0;
  }
  for (Eigen::Index i = 0; i < n; ++i) triplets.emplace_back(i, i, degree(i));
  SparseMatrix matrix(n, n);
  matrix.setFromTriplets(triplets.begin(), triplets.end());
  matrix.makeCompressed();
  return Laplacian(std::move(matrix));
}

Laplacian knn_laplacian(const Matrix& points, int k) {
  return build_laplacian(build_knn_graph(points, k));
}

namespace {

void check_dimension(const Matrix& points, const Laplacian& laplacian) {
  if (points.rows() != laplacian.dimension()) {
    throw InvalidInput("laplacian dimension " + std::to_string(laplacian.dimension()) +
                       " does not match " + std::to_string(points.rows()) + " points");
  }
}

}  // namespace

double smoothness(const Matrix& points, const Laplacian& laplacian) {
  check_dimension(points, laplacian);
  const Matrix lx = laplacian.matrix() * points;
  return points.cwiseProduct(lx).sum();
}

Matrix smoothness_gradient(const Matrix& points, const Laplacian& laplacian) {
  check_dimension(points, laplacian);
  return 2.0 * (laplacian.matrix() * points);
}

double self_smoothness(const Matrix& points, int k) {
  return smoothness(points, knn_laplacian(points, k));
}

ShapeKind parse_shape_kind(std::string_view name) {
  if (name == "sphere") return ShapeKind::sphere;
  if (name == "torus") return ShapeKind::torus;
  if (name == "plane_grid") return ShapeKind::plane_grid;
  if (name == "helix") return ShapeKind::helix;
  throw InvalidParameter("unknown shape kind '" + std::string(name) + "'");
}

std::string_view to_string(ShapeKind kind) {
  switch (kind) {
    case ShapeKind::sphere: return "sphere";
    case ShapeKind::torus: return "torus";
    case ShapeKind::plane_grid: return "plane_grid";
    case ShapeKind::helix: return "helix";
  }
  return "unknown";
}

PointCloud generate_shape(const ShapeSpec& spec) {
  if (spec.n_points < 1) throw InvalidParameter("shape: n_points must be positive");
  if (!(spec.noise_std >= 0.0)) throw InvalidParameter("shape: noise_std must be >= 0");

  constexpr double two_pi = 2.0 * std::numbers::pi;
  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);

  const Eigen::Index n = spec.n_points;
  Matrix points(n, 3);
  switch (spec.kind) {
    case ShapeKind::sphere:
      for (Eigen::Index i = 0; i < n; ++i) {
        Eigen::RowVector3d v;
        do {
          v = {normal(rng), normal(rng), normal(rng)};
        } while (v.norm() < 1e-12);
        points.row(i) = spec.radius * v / v.norm();
      }
      break;
    case ShapeKind::torus: {
      const double big = spec.major_radius;
      const double small = spec.minor_radius;
      if (!(big > small && small > 0.0)) {
        throw InvalidParameter("torus: need major_radius > minor_radius > 0");
      }
      for (Eigen::Index i = 0; i < n; ++i) {
        // rejection on the tube angle gives area-uniform samples
        double u = 0.0;
        double v = 0.0;
        do {
          u = two_pi * uniform(rng);
          v = two_pi * uniform(rng);
        } while (uniform(rng) * (big + small) > big + small * std::cos(v));
        const double ring = big + small * std::cos(v);
        points.row(i) << ring * std::cos(u), ring * std::sin(u), small * std::sin(v);
      }
      break;
    }
    case ShapeKind::plane_grid: {
      const auto side = static_cast<Eigen::Index>(std::ceil(std::sqrt(static_cast<double>(n))));
      const double step = side > 1 ? spec.extent / static_cast<double>(side - 1) : 0.0;
      const double origin = side > 1 ? -0.5 * spec.extent : 0.0;
      for (Eigen::Index i = 0; i < n; ++i) {
        points.row(i) << origin + step * static_cast<double>(i % side),
            origin + step * static_cast<double>(i / side), 0.0;
      }
      break;
    }
    case ShapeKind::helix:
      for (Eigen::Index i = 0; i < n; ++i) {
        const double s = uniform(rng);
        const double angle = two_pi * spec.turns * s;
        points.row(i) << spec.radius * std::cos(angle), spec.radius * std::sin(angle),
            spec.extent * (s - 0.5);
      }
      break;
  }

  if (spec.noise_std > 0.0) {
    for (Eigen::Index i = 0; i < n; ++i) {
      for (int c = 0; c < 3; ++c) points(i, c) += spec.noise_std * normal(rng);
    }
  }

  if (spec.normalize) {
    const Eigen::RowVector3d centroid = points.colwise().mean();
    points.rowwise() -= centroid;
    const double diagonal =
        (points.colwise().maxCoeff() - points.colwise().minCoeff()).norm();
    if (diagonal > 2.0) points *= 2.0 / diagonal;
  }
  return PointCloud(std::move(points));
}

}  // namespace smoothpc
