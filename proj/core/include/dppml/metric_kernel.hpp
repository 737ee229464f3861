#pragma once

#include "dppml/point_set.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <vector>

namespace dppml {

enum class DistanceMode { Euclidean, Geodesic };

// Gaussian kernel K_ij = exp(-dist_ij^2 / (2 sigma^2)) over Euclidean or graph-geodesic
// distances. An infinite (disconnected) distance maps to a kernel value of 0.
struct KernelSpec {
  double sigma = 1.0;
  DistanceMode mode = DistanceMode::Euclidean;
  Index geo_knn = 10;  // neighbors for the geodesic graph; Geodesic mode only

  void validate() const;
};

inline double gaussian(double distance, double sigma) {
  return std::exp(-(distance * distance) / (2.0 * sigma * sigma));
}

// Symmetric n x n matrix with zero diagonal.
Eigen::MatrixXd euclidean_distances(const PointSet& points);

// Sparse symmetric kNN graph: an edge (i, j) exists when j is among the geo_knn nearest
// neighbors of i or vice versa, weighted by Euclidean length. Ties go to the lower index.
struct KnnGraph {
  // adjacency[i] lists (neighbor, length) pairs, neighbors ascending.
  std::vector<std::vector<std::pair<Index, double>>> adjacency;
};
KnnGraph build_knn_graph(const PointSet& points, Index knn);

// Dijkstra distances from one source; unreachable nodes are +inf.
Eigen::VectorXd shortest_paths_from(const KnnGraph& graph, Index source);

// All-pairs graph shortest paths over the symmetric kNN graph; +inf when disconnected.
Eigen::MatrixXd geodesic_distances(const PointSet& points, Index geo_knn);

// Full n x n kernel matrix.
Eigen::MatrixXd kernel_matrix(const PointSet& points, const KernelSpec& spec);

// Rows `rows`, columns `cols` of the kernel matrix without forming the full matrix. In geodesic
// mode only |rows| single-source searches are run. rows and cols must be disjoint.
Eigen::MatrixXd kernel_cross(const PointSet& points, const std::vector<Index>& rows,
                             const std::vector<Index>& cols, const KernelSpec& spec);

// Euclidean Gaussian kernel between the columns of `a` and the columns of `b` (|a| x |b|).
Eigen::MatrixXd gaussian_cross(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, double sigma);

// Square block K_{J x J} (J may be any valid distinct index list).
Eigen::MatrixXd kernel_block(const PointSet& points, const std::vector<Index>& indices,
                             const KernelSpec& spec);

// Complement of `indices` in [0, n), ascending.
std::vector<Index> complement(const std::vector<Index>& indices, Index n);

}  // namespace dppml
