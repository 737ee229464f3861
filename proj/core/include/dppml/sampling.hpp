#pragma once

#include "dppml/point_set.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <variant>
#include <vector>

namespace dppml {

enum class CovarianceKind { None, Full, Diagonal };

// Ordered landmark indices with optional per-landmark local covariances.
// Full covariances are d x d; diagonal ones are stored as d x 1 columns.
struct LandmarkSelection {
  std::vector<Index> indices;
  CovarianceKind covariance_kind = CovarianceKind::None;
  std::vector<Eigen::MatrixXd> covariances;

  Index size() const { return static_cast<Index>(indices.size()); }
  bool has_covariances() const { return covariance_kind != CovarianceKind::None; }
};

// ---------------------------------------------------------------------------
// Exact L-ensemble sampling

struct ExactDppInfo {
  Index clamped_eigenvalues = 0;  // slightly negative eigenvalues set to zero
  Index selected_eigenvectors = 0;
};

// Two-phase spectral sampler: eigenvectors enter with probability lambda/(lambda+1), then
// points are drawn proportional to the squared row norms of the selected eigenvector
// matrix, projecting all rows away from each chosen row. The resulting subset follows
// P(J) = det(K_J) / det(K + I). Cardinality is random.
//
// Eigenvalues in [-1e-8 * max(1, lambda_max), 0) are clamped to zero; anything more negative
// is rejected as an indefinite kernel.
LandmarkSelection exact_dpp_sample(const Eigen::MatrixXd& kernel, std::uint64_t seed,
                                   ExactDppInfo* info = nullptr);

// b_j minus its component along b_i. Throws on a zero b_i.
Eigen::VectorXd projection_update(const Eigen::VectorXd& b_i, const Eigen::VectorXd& b_j);

// ---------------------------------------------------------------------------
// Annealed volume sampling, by enumeration

inline constexpr Index kMaxEnumerationSize = 20;

struct SubsetDistribution {
  std::vector<std::vector<Index>> subsets;  // lexicographic order
  std::vector<double> probabilities;
};

// Exact distribution p(J) proportional to det(K_J)^s over all k-subsets (n <= 20).
SubsetDistribution volume_sampling_distribution(const Eigen::MatrixXd& kernel, Index k,
                                                double s);

// One draw from volume_sampling_distribution.
LandmarkSelection volume_sampling_enumerate(const Eigen::MatrixXd& kernel, Index k, double s,
                                            std::uint64_t seed);

// ---------------------------------------------------------------------------
// Efficient approximate sampling

struct SineSquared {
  std::optional<double> tau;  // nullopt: tau = 2 * (largest neighborhood distance) / pi
};
struct Welsch {
  double sigma = 1.0;
};
using UpdateFunction = std::variant<SineSquared, Welsch>;

// f(delta) for a neighborhood whose largest distance is `max_distance` (used by auto tau).
double evaluate_update(const UpdateFunction& f, double delta, double max_distance);

// Regularized sample covariance of the given points (columns). Adds
// max(1e-6 * trace(C) / d, 1e-12) to the diagonal so the result is SPD even for fewer
// points than dimensions.
Eigen::MatrixXd local_covariance(const PointSet& points, const std::vector<Index>& neighborhood);
Eigen::VectorXd local_covariance_diagonal(const PointSet& points,
                                          const std::vector<Index>& neighborhood);

// Indices of the m points nearest to `center` given distances; `center` itself always comes
// first, remaining ties broken toward the lower index.
std::vector<Index> nearest_neighborhood(const Eigen::VectorXd& distances, Index center, Index m);

struct EfficientDppOptions {
  Index k = 1;
  Index m = 1;
  UpdateFunction update = Welsch{1.0};
  CovarianceKind covariances = CovarianceKind::None;
};

// Linear-time approximation: D starts at all ones; each of k rounds draws i proportional to
// D, then multiplies D_j by f(||x_i - x_j||) over the m nearest neighbors of x_i (x_i
// included, so its own weight drops to zero). O(n d k).
LandmarkSelection efficient_dpp_sample(const PointSet& points, const EfficientDppOptions& options,
                                       std::uint64_t seed);

// ---------------------------------------------------------------------------
// Baselines

LandmarkSelection uniform_sample(Index n, Index k, std::uint64_t seed);

// k-means++ D^2 seeding. If every remaining squared distance is zero, the next seed is drawn
// uniformly among the points not yet chosen.
LandmarkSelection kmeanspp_seed(const PointSet& points, Index k, std::uint64_t seed);

enum class KMeansInit { Uniform, PlusPlus };

struct KMeansResult {
  LandmarkSelection landmarks;
  Eigen::MatrixXd centroids;
  Index iterations = 0;
  double distortion = 0.0;  // sum of squared distances to the assigned centroid
};

// Lloyd iterations until assignments stop changing or max_iter is reached. An empty cluster
// is re-seeded at the point farthest from its current centroid. Each final centroid is
// snapped to its nearest data point not already taken by an earlier centroid.
KMeansResult kmeans(const PointSet& points, Index k, KMeansInit init, std::uint64_t seed,
                    Index max_iter);

}  // namespace dppml
