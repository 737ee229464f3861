#include "dppml/nystrom.hpp"

#include "dppml/error.hpp"

#include <algorithm>
#include <string>

namespace dppml {

namespace {

void check_landmarks(const std::vector<Index>& landmarks, Index n) {
  if (landmarks.empty()) throw Error(ErrorCode::InvalidArgument, "landmark set is empty");
  std::vector<char> seen(static_cast<std::size_t>(n), 0);
  for (Index i : landmarks) {
    if (i < 0 || i >= n)
      throw Error(ErrorCode::IndexOutOfRange, "landmark index " + std::to_string(i) +
                                                  " outside [0, " + std::to_string(n) + ")");
    if (seen[i]) throw Error(ErrorCode::InvalidArgument, "duplicate landmark " + std::to_string(i));
    seen[i] = 1;
  }
}

// Retained eigenpairs of a symmetric block, used for both the pseudo-inverse and the
// trace of the completed block.
struct PinvFactors {
  Eigen::MatrixXd vectors;
  Eigen::VectorXd inv_values;
};

PinvFactors pinv_factors(const Eigen::MatrixXd& a, double relative_tolerance) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(0.5 * (a + a.transpose()));
  if (eig.info() != Eigen::Success)
    throw Error(ErrorCode::NumericalFailure, "eigendecomposition failed");
  const Eigen::VectorXd& values = eig.eigenvalues();
  const double cutoff = relative_tolerance * values.cwiseAbs().maxCoeff();
  std::vector<Index> keep;
  for (Index i = 0; i < values.size(); ++i)
    if (std::abs(values(i)) > cutoff) keep.push_back(i);
  PinvFactors f;
  f.vectors.resize(a.rows(), static_cast<Index>(keep.size()));
  f.inv_values.resize(static_cast<Index>(keep.size()));
  for (std::size_t c = 0; c < keep.size(); ++c) {
    f.vectors.col(static_cast<Index>(c)) = eig.eigenvectors().col(keep[c]);
    f.inv_values(static_cast<Index>(c)) = 1.0 / values(keep[c]);
  }
  return f;
}

// tr(C^T A^+ C) accumulated over column tiles of C.
double completed_trace(const PinvFactors& f, const Eigen::MatrixXd& cross) {
  const Eigen::MatrixXd projected = f.vectors.transpose() * cross;
  return (projected.rowwise().squaredNorm().array() * f.inv_values.array()).sum();
}

double finish_error(double residual_trace, double completed, double scale) {
  const double error = residual_trace - completed;
  if (error >= 0.0) return error;
  if (error >= -1e-8 * std::max(1.0, scale)) return 0.0;
  throw Error(ErrorCode::IndefiniteKernel,
              "negative reconstruction error " + std::to_string(error) +
                  "; kernel is not positive semidefinite");
}

}  // namespace

Eigen::MatrixXd symmetric_pinv(const Eigen::MatrixXd& a, double relative_tolerance) {
  if (a.size() == 0) return a;
  const PinvFactors f = pinv_factors(a, relative_tolerance);
  return f.vectors * f.inv_values.asDiagonal() * f.vectors.transpose();
}

NystromReconstruction reconstruction_error(const Eigen::MatrixXd& kernel,
                                           const std::vector<Index>& landmarks) {
  if (kernel.rows() != kernel.cols())
    throw Error(ErrorCode::InvalidArgument, "kernel matrix is not square");
  const Index n = kernel.rows();
  check_landmarks(landmarks, n);
  const std::vector<Index> rest = complement(landmarks, n);
  const Index k = static_cast<Index>(landmarks.size());
  const Index r = static_cast<Index>(rest.size());

  Eigen::MatrixXd block(k, k), cross(k, r);
  for (Index a = 0; a < k; ++a) {
    for (Index b = 0; b < k; ++b) block(a, b) = kernel(landmarks[a], landmarks[b]);
    for (Index b = 0; b < r; ++b) cross(a, b) = kernel(landmarks[a], rest[b]);
  }
  double residual_trace = 0.0;
  for (Index j : rest) residual_trace += kernel(j, j);

  const PinvFactors f = pinv_factors(block, kPinvRelativeTolerance);
  NystromReconstruction out;
  out.landmarks = landmarks;
  out.landmark_block_pinv = f.vectors * f.inv_values.asDiagonal() * f.vectors.transpose();
  out.error = finish_error(residual_trace, completed_trace(f, cross), residual_trace);
  return out;
}

NystromReconstruction reconstruction_error(const PointSet& points, const KernelSpec& spec,
                                           const std::vector<Index>& landmarks,
                                           Index tile_columns) {
  spec.validate();
  const Index n = points.size();
  check_landmarks(landmarks, n);
  const std::vector<Index> rest = complement(landmarks, n);
  const Eigen::MatrixXd block = kernel_block(points, landmarks, spec);
  const PinvFactors f = pinv_factors(block, kPinvRelativeTolerance);

  // Geodesic columns share one graph search per landmark, so they are not tiled.
  const std::size_t tile = spec.mode == DistanceMode::Geodesic
                               ? std::max<std::size_t>(rest.size(), 1)
                               : static_cast<std::size_t>(std::max<Index>(tile_columns, 1));
  double completed = 0.0;
  std::vector<Index> cols;
  for (std::size_t start = 0; start < rest.size(); start += tile) {
    const std::size_t stop = std::min(rest.size(), start + tile);
    cols.assign(rest.begin() + static_cast<std::ptrdiff_t>(start),
                rest.begin() + static_cast<std::ptrdiff_t>(stop));
    completed += completed_trace(f, kernel_cross(points, landmarks, cols, spec));
  }

  // Unit diagonal of the Gaussian kernel.
  const double residual_trace = static_cast<double>(rest.size());
  NystromReconstruction out;
  out.landmarks = landmarks;
  out.landmark_block_pinv = f.vectors * f.inv_values.asDiagonal() * f.vectors.transpose();
  out.error = finish_error(residual_trace, completed, residual_trace);
  return out;
}

Eigen::MatrixXd nystrom_reconstruct(const Eigen::MatrixXd& kernel,
                                    const std::vector<Index>& landmarks) {
  if (kernel.rows() != kernel.cols())
    throw Error(ErrorCode::InvalidArgument, "kernel matrix is not square");
  const Index n = kernel.rows();
  if (n > kMaxExplicitReconstruction)
    throw Error(ErrorCode::TooLarge, "explicit reconstruction limited to n <= " +
                                         std::to_string(kMaxExplicitReconstruction));
  check_landmarks(landmarks, n);
  const std::vector<Index> rest = complement(landmarks, n);
  const Index k = static_cast<Index>(landmarks.size());
  const Index r = static_cast<Index>(rest.size());
  Eigen::MatrixXd block(k, k), cross(k, r);
  for (Index a = 0; a < k; ++a) {
    for (Index b = 0; b < k; ++b) block(a, b) = kernel(landmarks[a], landmarks[b]);
    for (Index b = 0; b < r; ++b) cross(a, b) = kernel(landmarks[a], rest[b]);
  }
  return cross.transpose() * symmetric_pinv(block) * cross;
}

Eigen::MatrixXd oos_extend(const Eigen::MatrixXd& landmark_embedding,
                           const Eigen::VectorXd& eigenvalues, const Eigen::MatrixXd& cross,
                           const Eigen::VectorXd& landmark_means) {
  const Index k = cross.rows();
  if (landmark_embedding.rows() != k || landmark_means.size() != k)
    throw Error(ErrorCode::InvalidArgument, "landmark count differs between inputs");
  if (landmark_embedding.cols() != eigenvalues.size())
    throw Error(ErrorCode::InvalidArgument, "eigenvalue count differs from embedding dimension");
  if (k == 0) throw Error(ErrorCode::InvalidArgument, "no landmarks");
  for (Index c = 0; c < eigenvalues.size(); ++c)
    if (!(eigenvalues(c) > 0.0))
      throw Error(ErrorCode::NonPositiveEigenvalue,
                  "eigenvalue " + std::to_string(c) + " is " + std::to_string(eigenvalues(c)));
  for (Index i = 0; i < k; ++i)
    if (!(landmark_means(i) > 0.0))
      throw Error(ErrorCode::IsolatedPoint, "landmark " + std::to_string(i) +
                                                " has zero mean kernel value");

  const Eigen::RowVectorXd column_means = cross.colwise().mean();
  for (Index j = 0; j < cross.cols(); ++j)
    if (!(column_means(j) > 0.0))
      throw Error(ErrorCode::IsolatedPoint,
                  "point " + std::to_string(j) + " has zero kernel weight to every landmark");

  const Eigen::VectorXd row_scale = landmark_means.cwiseSqrt().cwiseInverse();
  const Eigen::RowVectorXd col_scale =
      (column_means.cwiseSqrt() * static_cast<double>(k)).cwiseInverse();
  const Eigen::MatrixXd normalized =
      row_scale.asDiagonal() * cross * col_scale.asDiagonal();
  return normalized.transpose() * landmark_embedding * eigenvalues.cwiseInverse().asDiagonal();
}

}  // namespace dppml
