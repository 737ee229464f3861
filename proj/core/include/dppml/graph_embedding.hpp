#pragma once

#include "dppml/metric_kernel.hpp"
#include "dppml/point_set.hpp"
#include "dppml/sampling.hpp"

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <filesystem>
#include <optional>
#include <variant>
#include <vector>

namespace dppml {

// Bhattacharyya distance between Gaussians N(x_i, C_i) and N(x_j, C_j):
//   1/8 (x_i - x_j)^T C^{-1} (x_i - x_j) + 1/2 ln(|C| / sqrt(|C_i||C_j|)),  C = (C_i + C_j)/2.
// Log-determinants come from Cholesky factors; throws NotPositiveDefinite otherwise.
double bhattacharyya_distance(const Eigen::VectorXd& x_i, const Eigen::MatrixXd& c_i,
                              const Eigen::VectorXd& x_j, const Eigen::MatrixXd& c_j);

// Diagonal covariances given as variance vectors.
double bhattacharyya_distance_diagonal(const Eigen::VectorXd& x_i, const Eigen::VectorXd& var_i,
                                       const Eigen::VectorXd& x_j, const Eigen::VectorXd& var_j);

enum class GraphMetric { Euclidean, Bhattacharyya };

struct KnnRule {
  Index neighbors = 10;
};
struct EpsBallRule {
  double radius = 1.0;
};
using NeighborRule = std::variant<KnnRule, EpsBallRule>;

// Sparse symmetric weight matrix over landmarks. Neighbor sets come from the chosen metric;
// edge weights are always the Gaussian kernel of the Euclidean distance.
struct NeighborhoodGraph {
  Eigen::SparseMatrix<double> weights;
  Eigen::VectorXd degrees;
  Index components = 0;

  Index size() const { return weights.rows(); }
};

// Pairwise neighbor-selection distances between landmarks (Euclidean or Bhattacharyya).
Eigen::MatrixXd landmark_distances(const PointSet& points, const LandmarkSelection& landmarks,
                                   GraphMetric metric);

NeighborhoodGraph build_graph(const PointSet& points, const LandmarkSelection& landmarks,
                              GraphMetric metric, const NeighborRule& rule, double sigma);

// Same, from a precomputed landmark_distances() matrix (lets sweeps over the rule reuse it).
NeighborhoodGraph build_graph_from_distances(const PointSet& points,
                                             const LandmarkSelection& landmarks,
                                             const Eigen::MatrixXd& selection_distances,
                                             const NeighborRule& rule, double sigma);

// Number of connected components of a symmetric sparse graph (positive weights only).
Index count_components(const Eigen::SparseMatrix<double>& weights);

// Edge list (i < j) as CSV with header `i,j,weight`.
void write_edge_list(const NeighborhoodGraph& graph, const std::filesystem::path& path);

struct SpectralEmbedding {
  Eigen::MatrixXd coords;       // n_J x l, rows are landmark embeddings, D-orthonormal columns
  Eigen::VectorXd eigenvalues;  // l smallest non-zero generalized eigenvalues, ascending
};

inline constexpr Index kDenseEigenLimit = 500;

// Laplacian eigenmaps: (D - W) phi = lambda D phi, skipping the constant zero mode. The
// largest-magnitude entry of each eigenvector is made positive. Graphs with fewer than
// kDenseEigenLimit nodes use a dense solver, larger ones shift-invert Lanczos.
SpectralEmbedding laplacian_eigenmaps(const NeighborhoodGraph& graph, Index dims);

// Columns of `embedding` in the normalized-kernel basis used by the out-of-sample
// extension: rows scaled by sqrt(degree), eigenvalues mapped to 1 - lambda.
struct NormalizedEmbedding {
  Eigen::MatrixXd coords;
  Eigen::VectorXd eigenvalues;
};
NormalizedEmbedding normalized_embedding(const NeighborhoodGraph& graph,
                                         const SpectralEmbedding& embedding);

struct PipelineOptions {
  // The Bhattacharyya metric needs sampler.covariances != None.
  EfficientDppOptions sampler;
  GraphMetric metric = GraphMetric::Bhattacharyya;
  NeighborRule rule = KnnRule{10};
  double sigma = 1.0;
  Index dims = 2;
  bool extend = true;                // out-of-sample extension of all points
  bool reconstruction_error = false; // Nystrom error of the landmark set
  Index tile_columns = 4096;
};

struct PipelineResult {
  LandmarkSelection landmarks;
  SpectralEmbedding landmark_embedding;
  // n x l coordinates of every point in the normalized basis: landmarks keep their own rows,
  // the rest come from the out-of-sample extension. Empty unless options.extend.
  Eigen::MatrixXd embedding;
  Index components = 0;
  std::optional<double> reconstruction_error;
};

// Sample landmarks, build the landmark graph, embed it, extend to all points. Errors carry
// the stage name: "sample", "graph", "embed", "extend", or "reconstruct".
PipelineResult run_pipeline(const PointSet& points, const PipelineOptions& options,
                            std::uint64_t seed);

// Extends a landmark embedding to the listed points with the Gaussian kernel of width sigma.
Eigen::MatrixXd extend_embedding(const PointSet& points, const LandmarkSelection& landmarks,
                                 const NeighborhoodGraph& graph,
                                 const SpectralEmbedding& embedding,
                                 const std::vector<Index>& targets, double sigma,
                                 Index tile_columns = 4096);

// Same, for points outside the landmark set's PointSet (e.g. a held-out test split).
Eigen::MatrixXd extend_embedding(const PointSet& landmark_points,
                                 const LandmarkSelection& landmarks,
                                 const NeighborhoodGraph& graph,
                                 const SpectralEmbedding& embedding, const PointSet& targets,
                                 double sigma, Index tile_columns = 4096);

}  // namespace dppml
