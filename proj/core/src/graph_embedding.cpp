#include "dppml/graph_embedding.hpp"

#include "dppml/error.hpp"
#include "dppml/nystrom.hpp"
#include "dppml/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <string>

namespace dppml {

namespace {

double log_det_spd(const Eigen::MatrixXd& c) {
  Eigen::LLT<Eigen::MatrixXd> llt(c);
  if (llt.info() != Eigen::Success)
    throw Error(ErrorCode::NotPositiveDefinite, "covariance is not positive definite");
  return 2.0 * llt.matrixLLT().diagonal().array().log().sum();
}

}  // namespace

double bhattacharyya_distance(const Eigen::VectorXd& x_i, const Eigen::MatrixXd& c_i,
                              const Eigen::VectorXd& x_j, const Eigen::MatrixXd& c_j) {
  const Eigen::MatrixXd c = 0.5 * (c_i + c_j);
  Eigen::LLT<Eigen::MatrixXd> llt(c);
  if (llt.info() != Eigen::Success)
    throw Error(ErrorCode::NotPositiveDefinite, "averaged covariance is not positive definite");
  const Eigen::VectorXd diff = x_i - x_j;
  const double mahalanobis = diff.dot(llt.solve(diff));
  const double log_det_c = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
  const double log_term = log_det_c - 0.5 * (log_det_spd(c_i) + log_det_spd(c_j));
  return std::max(0.0, 0.125 * mahalanobis + 0.5 * log_term);
}

double bhattacharyya_distance_diagonal(const Eigen::VectorXd& x_i, const Eigen::VectorXd& var_i,
                                       const Eigen::VectorXd& x_j, const Eigen::VectorXd& var_j) {
  if ((var_i.array() <= 0.0).any() || (var_j.array() <= 0.0).any())
    throw Error(ErrorCode::NotPositiveDefinite, "diagonal covariance has a non-positive entry");
  double mahalanobis = 0.0;
  double log_term = 0.0;
  for (Index t = 0; t < x_i.size(); ++t) {
    const double avg = 0.5 * (var_i(t) + var_j(t));
    const double diff = x_i(t) - x_j(t);
    mahalanobis += diff * diff / avg;
    log_term += std::log(avg) - 0.5 * (std::log(var_i(t)) + std::log(var_j(t)));
  }
  return std::max(0.0, 0.125 * mahalanobis + 0.5 * log_term);
}

Eigen::MatrixXd landmark_distances(const PointSet& points, const LandmarkSelection& landmarks,
                                   GraphMetric metric) {
  const Index k = landmarks.size();
  for (Index i : landmarks.indices)
    if (i < 0 || i >= points.size())
      throw Error(ErrorCode::IndexOutOfRange, "landmark index out of range");
  Eigen::MatrixXd x(points.dim(), k);
  for (Index a = 0; a < k; ++a) x.col(a) = points.coords.col(landmarks.indices[a]);

  Eigen::MatrixXd dist = Eigen::MatrixXd::Zero(k, k);
  if (metric == GraphMetric::Euclidean) {
    for (Index b = 0; b < k; ++b)
      for (Index a = b + 1; a < k; ++a) {
        const double v = (x.col(a) - x.col(b)).norm();
        dist(a, b) = v;
        dist(b, a) = v;
      }
    return dist;
  }

  if (!landmarks.has_covariances() || static_cast<Index>(landmarks.covariances.size()) != k)
    throw Error(ErrorCode::MissingCovariances,
                "Bhattacharyya neighborhoods need one local covariance per landmark");

  if (landmarks.covariance_kind == CovarianceKind::Diagonal) {
    const Index d = points.dim();
    Eigen::MatrixXd var(d, k), log_var(d, k);
    for (Index a = 0; a < k; ++a) {
      if (landmarks.covariances[a].size() != d)
        throw Error(ErrorCode::InvalidArgument, "diagonal covariance has the wrong length");
      var.col(a) = landmarks.covariances[a].reshaped();
      if ((var.col(a).array() <= 0.0).any())
        throw Error(ErrorCode::NotPositiveDefinite, "diagonal covariance has a non-positive entry");
      log_var.col(a) = var.col(a).array().log().matrix();
    }
    for (Index b = 0; b < k; ++b)
      for (Index a = b + 1; a < k; ++a) {
        double mahalanobis = 0.0, log_term = 0.0;
        for (Index t = 0; t < d; ++t) {
          const double avg = 0.5 * (var(t, a) + var(t, b));
          const double diff = x(t, a) - x(t, b);
          mahalanobis += diff * diff / avg;
          log_term += std::log(avg) - 0.5 * (log_var(t, a) + log_var(t, b));
        }
        const double v = std::max(0.0, 0.125 * mahalanobis + 0.5 * log_term);
        dist(a, b) = v;
        dist(b, a) = v;
      }
    return dist;
  }

  std::vector<double> log_dets(static_cast<std::size_t>(k));
  for (Index a = 0; a < k; ++a) log_dets[a] = log_det_spd(landmarks.covariances[a]);
  for (Index b = 0; b < k; ++b)
    for (Index a = b + 1; a < k; ++a) {
      const Eigen::MatrixXd c = 0.5 * (landmarks.covariances[a] + landmarks.covariances[b]);
      Eigen::LLT<Eigen::MatrixXd> llt(c);
      if (llt.info() != Eigen::Success)
        throw Error(ErrorCode::NotPositiveDefinite, "averaged covariance is not positive definite");
      const Eigen::VectorXd diff = x.col(a) - x.col(b);
      const double mahalanobis = diff.dot(llt.solve(diff));
      const double log_det_c = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
      const double v = std::max(
          0.0, 0.125 * mahalanobis + 0.5 * (log_det_c - 0.5 * (log_dets[a] + log_dets[b])));
      dist(a, b) = v;
      dist(b, a) = v;
    }
  return dist;
}

Index count_components(const Eigen::SparseMatrix<double>& weights) {
  const Index n = weights.rows();
  std::vector<Index> label(static_cast<std::size_t>(n), -1);
  std::vector<Index> stack;
  Index components = 0;
  for (Index s = 0; s < n; ++s) {
    if (label[s] >= 0) continue;
    label[s] = components;
    stack.push_back(s);
    while (!stack.empty()) {
      const Index u = stack.back();
      stack.pop_back();
      for (Eigen::SparseMatrix<double>::InnerIterator it(weights, u); it; ++it)
        if (it.value() > 0.0 && label[it.index()] < 0) {
          label[it.index()] = components;
          stack.push_back(it.index());
        }
    }
    ++components;
  }
  return components;
}

NeighborhoodGraph build_graph_from_distances(const PointSet& points,
                                             const LandmarkSelection& landmarks,
                                             const Eigen::MatrixXd& selection_distances,
                                             const NeighborRule& rule, double sigma) {
  const Index k = landmarks.size();
  if (selection_distances.rows() != k || selection_distances.cols() != k)
    throw Error(ErrorCode::InvalidArgument, "distance matrix does not match landmark count");
  if (!(sigma > 0.0)) throw Error(ErrorCode::InvalidArgument, "graph sigma must be positive");

  std::vector<std::pair<Index, Index>> edges;
  if (const auto* knn = std::get_if<KnnRule>(&rule)) {
    if (knn->neighbors < 1 || knn->neighbors >= k)
      throw Error(ErrorCode::InvalidArgument, "graph kNN must satisfy 1 <= m_g < " +
                                                  std::to_string(k) + ", got " +
                                                  std::to_string(knn->neighbors));
    std::vector<std::pair<double, Index>> row;
    for (Index i = 0; i < k; ++i) {
      row.clear();
      for (Index j = 0; j < k; ++j)
        if (j != i) row.emplace_back(selection_distances(i, j), j);
      std::nth_element(row.begin(), row.begin() + (knn->neighbors - 1), row.end());
      for (Index t = 0; t < knn->neighbors; ++t)
        edges.emplace_back(std::min(i, row[t].second), std::max(i, row[t].second));
    }
  } else {
    const double radius = std::get<EpsBallRule>(rule).radius;
    if (!(radius > 0.0)) throw Error(ErrorCode::InvalidArgument, "epsilon must be positive");
    for (Index j = 0; j < k; ++j)
      for (Index i = j + 1; i < k; ++i)
        if (selection_distances(i, j) <= radius) edges.emplace_back(j, i);
  }
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());

  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(2 * edges.size());
  for (const auto& [a, b] : edges) {
    const double euclid =
        (points.coords.col(landmarks.indices[a]) - points.coords.col(landmarks.indices[b])).norm();
    const double w = gaussian(euclid, sigma);
    if (w <= 0.0) continue;
    triplets.emplace_back(a, b, w);
    triplets.emplace_back(b, a, w);
  }
  NeighborhoodGraph graph;
  graph.weights.resize(k, k);
  graph.weights.setFromTriplets(triplets.begin(), triplets.end());
  graph.weights.makeCompressed();
  graph.degrees = graph.weights * Eigen::VectorXd::Ones(k);
  graph.components = count_components(graph.weights);
  return graph;
}

NeighborhoodGraph build_graph(const PointSet& points, const LandmarkSelection& landmarks,
                              GraphMetric metric, const NeighborRule& rule, double sigma) {
  return build_graph_from_distances(points, landmarks,
                                    landmark_distances(points, landmarks, metric), rule, sigma);
}

void write_edge_list(const NeighborhoodGraph& graph, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::IoFailure, "cannot write " + path.string());
  out.precision(17);
  out << "i,j,weight\n";
  for (Index col = 0; col < graph.weights.outerSize(); ++col)
    for (Eigen::SparseMatrix<double>::InnerIterator it(graph.weights, col); it; ++it)
      if (it.row() < it.col()) out << it.row() << ',' << it.col() << ',' << it.value() << '\n';
}

SpectralEmbedding laplacian_eigenmaps(const NeighborhoodGraph& graph, Index dims) {
  const Index n = graph.size();
  if (dims < 1 || dims >= n)
    throw Error(ErrorCode::InvalidArgument, "embedding dimension must satisfy 1 <= l < " +
                                                std::to_string(n));
  if (graph.components != 1)
    throw Error(ErrorCode::DisconnectedGraph,
                "graph has " + std::to_string(graph.components) + " connected components");

  // Symmetric form I - D^{-1/2} W D^{-1/2}; its eigenvectors psi give phi = D^{-1/2} psi.
  const Eigen::VectorXd inv_sqrt = graph.degrees.cwiseSqrt().cwiseInverse();
  Eigen::SparseMatrix<double> normalized = inv_sqrt.asDiagonal() * graph.weights * inv_sqrt.asDiagonal();
  Eigen::SparseMatrix<double> identity(n, n);
  identity.setIdentity();
  const Eigen::SparseMatrix<double> laplacian = identity - normalized;

  Eigen::MatrixXd psi;
  Eigen::VectorXd values;
  if (n < kDenseEigenLimit) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig{Eigen::MatrixXd(laplacian)};
    if (eig.info() != Eigen::Success)
      throw Error(ErrorCode::NumericalFailure, "dense eigensolver failed");
    // Index 0 is the constant mode of a connected graph.
    values = eig.eigenvalues().segment(1, dims);
    psi = eig.eigenvectors().middleCols(1, dims);
  } else {
    const Eigen::VectorXd zero_mode = graph.degrees.cwiseSqrt().normalized();
    const SymmetricEigenpairs pairs = smallest_eigenpairs(laplacian, dims, zero_mode);
    values = pairs.values;
    psi = pairs.vectors;
  }

  SpectralEmbedding out;
  out.eigenvalues = values;
  out.coords = inv_sqrt.asDiagonal() * psi;
  for (Index c = 0; c < dims; ++c) {
    Index arg = 0;
    out.coords.col(c).cwiseAbs().maxCoeff(&arg);
    if (out.coords(arg, c) < 0.0) out.coords.col(c) *= -1.0;
  }
  return out;
}

NormalizedEmbedding normalized_embedding(const NeighborhoodGraph& graph,
                                         const SpectralEmbedding& embedding) {
  NormalizedEmbedding out;
  out.coords = graph.degrees.cwiseSqrt().asDiagonal() * embedding.coords;
  out.eigenvalues = (1.0 - embedding.eigenvalues.array()).matrix();
  return out;
}

namespace {

Eigen::MatrixXd extend_from_cross(const NeighborhoodGraph& graph,
                                  const SpectralEmbedding& embedding,
                                  const Eigen::MatrixXd& cross) {
  const NormalizedEmbedding basis = normalized_embedding(graph, embedding);
  const Eigen::VectorXd landmark_means = graph.degrees / static_cast<double>(graph.size());
  return oos_extend(basis.coords, basis.eigenvalues, cross, landmark_means);
}

}  // namespace

Eigen::MatrixXd extend_embedding(const PointSet& points, const LandmarkSelection& landmarks,
                                 const NeighborhoodGraph& graph,
                                 const SpectralEmbedding& embedding,
                                 const std::vector<Index>& targets, double sigma,
                                 Index tile_columns) {
  const KernelSpec spec{sigma, DistanceMode::Euclidean, 1};
  Eigen::MatrixXd out(static_cast<Index>(targets.size()), embedding.coords.cols());
  const std::size_t tile = static_cast<std::size_t>(std::max<Index>(tile_columns, 1));
  std::vector<Index> cols;
  for (std::size_t start = 0; start < targets.size(); start += tile) {
    const std::size_t stop = std::min(targets.size(), start + tile);
    cols.assign(targets.begin() + static_cast<std::ptrdiff_t>(start),
                targets.begin() + static_cast<std::ptrdiff_t>(stop));
    const Eigen::MatrixXd cross = kernel_cross(points, landmarks.indices, cols, spec);
    try {
      out.middleRows(static_cast<Index>(start), static_cast<Index>(cols.size())) =
          extend_from_cross(graph, embedding, cross);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::IsolatedPoint) throw;
      throw Error(e.code(), e.detail() + " (tile starting at target " + std::to_string(start) + ")");
    }
  }
  return out;
}

Eigen::MatrixXd extend_embedding(const PointSet& landmark_points,
                                 const LandmarkSelection& landmarks,
                                 const NeighborhoodGraph& graph,
                                 const SpectralEmbedding& embedding, const PointSet& targets,
                                 double sigma, Index tile_columns) {
  Eigen::MatrixXd anchors(landmark_points.dim(), landmarks.size());
  for (Index a = 0; a < landmarks.size(); ++a)
    anchors.col(a) = landmark_points.coords.col(landmarks.indices[a]);
  Eigen::MatrixXd out(targets.size(), embedding.coords.cols());
  const Index tile = std::max<Index>(tile_columns, 1);
  for (Index start = 0; start < targets.size(); start += tile) {
    const Index len = std::min(tile, targets.size() - start);
    const Eigen::MatrixXd cross =
        gaussian_cross(anchors, targets.coords.middleCols(start, len), sigma);
    out.middleRows(start, len) = extend_from_cross(graph, embedding, cross);
  }
  return out;
}

PipelineResult run_pipeline(const PointSet& points, const PipelineOptions& options,
                            std::uint64_t seed) {
  PipelineResult result;
  auto staged = [](const char* stage, auto&& fn) {
    try {
      return fn();
    } catch (const Error& e) {
      throw e.with_stage(stage);
    }
  };

  result.landmarks =
      staged("sample", [&] { return efficient_dpp_sample(points, options.sampler, seed); });
  const NeighborhoodGraph graph = staged("graph", [&] {
    return build_graph(points, result.landmarks, options.metric, options.rule, options.sigma);
  });
  result.components = graph.components;
  result.landmark_embedding =
      staged("embed", [&] { return laplacian_eigenmaps(graph, options.dims); });

  if (options.extend) {
    result.embedding = staged("extend", [&] {
      Eigen::MatrixXd all(points.size(), options.dims);
      const NormalizedEmbedding basis = normalized_embedding(graph, result.landmark_embedding);
      for (Index a = 0; a < result.landmarks.size(); ++a)
        all.row(result.landmarks.indices[a]) = basis.coords.row(a);
      const std::vector<Index> rest = complement(result.landmarks.indices, points.size());
      const Eigen::MatrixXd extended =
          extend_embedding(points, result.landmarks, graph, result.landmark_embedding, rest,
                           options.sigma, options.tile_columns);
      for (std::size_t r = 0; r < rest.size(); ++r)
        all.row(rest[r]) = extended.row(static_cast<Index>(r));
      return all;
    });
  }
  if (options.reconstruction_error) {
    result.reconstruction_error = staged("reconstruct", [&] {
      const KernelSpec spec{options.sigma, DistanceMode::Euclidean, 1};
      return reconstruction_error(points, spec, result.landmarks.indices, options.tile_columns)
          .error;
    });
  }
  return result;
}

}  // namespace dppml
