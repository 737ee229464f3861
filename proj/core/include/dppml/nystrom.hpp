#pragma once

#include "dppml/metric_kernel.hpp"
#include "dppml/point_set.hpp"

#include <Eigen/Dense>

#include <vector>

namespace dppml {

// Singular values below this fraction of the largest are treated as zero by the
// Moore-Penrose inverse.
inline constexpr double kPinvRelativeTolerance = 1e-10;

// Pseudo-inverse of a symmetric matrix via its eigendecomposition.
Eigen::MatrixXd symmetric_pinv(const Eigen::MatrixXd& a,
                               double relative_tolerance = kPinvRelativeTolerance);

struct NystromReconstruction {
  std::vector<Index> landmarks;
  Eigen::MatrixXd landmark_block_pinv;  // K_{JxJ}^+
  double error = 0.0;                   // trace-norm error of the completion
};

// Trace-norm error tr(K_{J'J'}) - tr(K_{JJ'}^T K_{JJ}^+ K_{JJ'}) with J' the complement of J,
// from a full kernel matrix.
NystromReconstruction reconstruction_error(const Eigen::MatrixXd& kernel,
                                           const std::vector<Index>& landmarks);

// Same quantity from points and a kernel spec, forming only K_{JJ} and K_{JJ'} (streamed in
// column tiles). The Gaussian kernel has unit diagonal, so tr(K_{J'J'}) = |J'|.
NystromReconstruction reconstruction_error(const PointSet& points, const KernelSpec& spec,
                                           const std::vector<Index>& landmarks,
                                           Index tile_columns = 4096);

inline constexpr Index kMaxExplicitReconstruction = 2000;

// Explicit K_{JJ'}^T K_{JJ}^+ K_{JJ'} (n <= 2000; intended for inspection and tests).
Eigen::MatrixXd nystrom_reconstruct(const Eigen::MatrixXd& kernel,
                                    const std::vector<Index>& landmarks);

// Out-of-sample extension of a landmark embedding:
//   Phi_rest = Ktilde^T Phi_landmarks Lambda^{-1},
//   Ktilde_ij = K_ij / (k sqrt(mean_i'[K_i'j] * landmark_means_i)),
// with k the number of landmarks (rows of `cross`), column means taken over landmarks and
// `landmark_means` the mean kernel value of each landmark over the landmark set.
// Throws on a non-positive eigenvalue and on a column whose kernel values are all zero.
Eigen::MatrixXd oos_extend(const Eigen::MatrixXd& landmark_embedding,
                           const Eigen::VectorXd& eigenvalues, const Eigen::MatrixXd& cross,
                           const Eigen::VectorXd& landmark_means);

}  // namespace dppml
