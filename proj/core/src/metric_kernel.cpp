#include "dppml/metric_kernel.hpp"

#include "dppml/error.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <queue>

namespace dppml {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Beyond this dimension squared distances go through a matrix product instead of explicit
// differences.
constexpr Index kDirectDistanceMaxDim = 16;

void check_indices(const std::vector<Index>& indices, Index n, const char* what) {
  for (Index i : indices)
    if (i < 0 || i >= n)
      throw Error(ErrorCode::IndexOutOfRange,
                  std::string(what) + " index " + std::to_string(i) + " outside [0, " +
                      std::to_string(n) + ")");
}

// Squared Euclidean distances between columns a(:, rows) and a(:, cols).
Eigen::MatrixXd squared_distances(const Eigen::MatrixXd& a, const std::vector<Index>& rows,
                                  const std::vector<Index>& cols) {
  const Index r = static_cast<Index>(rows.size());
  const Index c = static_cast<Index>(cols.size());
  Eigen::MatrixXd out(r, c);
  if (r == 0 || c == 0) return out;
  if (a.rows() <= kDirectDistanceMaxDim) {
    for (Index j = 0; j < c; ++j)
      for (Index i = 0; i < r; ++i)
        out(i, j) = (a.col(rows[i]) - a.col(cols[j])).squaredNorm();
    return out;
  }
  Eigen::MatrixXd left(a.rows(), r), right(a.rows(), c);
  for (Index i = 0; i < r; ++i) left.col(i) = a.col(rows[i]);
  for (Index j = 0; j < c; ++j) right.col(j) = a.col(cols[j]);
  const Eigen::VectorXd left_sq = left.colwise().squaredNorm().transpose();
  const Eigen::RowVectorXd right_sq = right.colwise().squaredNorm();
  out.noalias() = -2.0 * left.transpose() * right;
  out.colwise() += left_sq;
  out.rowwise() += right_sq;
  out = out.cwiseMax(0.0);
  for (Index i = 0; i < r; ++i)
    for (Index j = 0; j < c; ++j)
      if (rows[i] == cols[j]) out(i, j) = 0.0;
  return out;
}

std::vector<Index> iota_indices(Index n) {
  std::vector<Index> idx(static_cast<std::size_t>(n));
  std::iota(idx.begin(), idx.end(), Index{0});
  return idx;
}

}  // namespace

void KernelSpec::validate() const {
  if (!(sigma > 0.0) || !std::isfinite(sigma))
    throw Error(ErrorCode::InvalidArgument, "kernel sigma must be positive");
  if (mode == DistanceMode::Geodesic && geo_knn < 1)
    throw Error(ErrorCode::InvalidArgument, "geodesic kernel needs geo_knn >= 1");
}

Eigen::MatrixXd euclidean_distances(const PointSet& points) {
  const Index n = points.size();
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(n, n);
  for (Index j = 0; j < n; ++j)
    for (Index i = j + 1; i < n; ++i) {
      const double v = (points.coords.col(i) - points.coords.col(j)).norm();
      d(i, j) = v;
      d(j, i) = v;
    }
  return d;
}

KnnGraph build_knn_graph(const PointSet& points, Index knn) {
  if (knn < 1) throw Error(ErrorCode::InvalidArgument, "knn must be >= 1");
  const Index n = points.size();
  const Index take = std::min(knn, n - 1);
  std::vector<std::vector<std::pair<Index, double>>> directed(static_cast<std::size_t>(n));
  std::vector<std::pair<double, Index>> row(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) {
    row.clear();
    for (Index j = 0; j < n; ++j)
      if (j != i) row.emplace_back((points.coords.col(i) - points.coords.col(j)).norm(), j);
    std::partial_sort(row.begin(), row.begin() + take, row.end());
    for (Index t = 0; t < take; ++t) directed[i].emplace_back(row[t].second, row[t].first);
  }

  KnnGraph graph;
  graph.adjacency.resize(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i)
    for (const auto& [j, w] : directed[i]) {
      graph.adjacency[i].emplace_back(j, w);
      graph.adjacency[j].emplace_back(i, w);
    }
  for (auto& adj : graph.adjacency) {
    std::sort(adj.begin(), adj.end());
    adj.erase(std::unique(adj.begin(), adj.end(),
                          [](const auto& a, const auto& b) { return a.first == b.first; }),
              adj.end());
  }
  return graph;
}

Eigen::VectorXd shortest_paths_from(const KnnGraph& graph, Index source) {
  const Index n = static_cast<Index>(graph.adjacency.size());
  if (source < 0 || source >= n) throw Error(ErrorCode::IndexOutOfRange, "source out of range");
  Eigen::VectorXd dist = Eigen::VectorXd::Constant(n, kInf);
  using Item = std::pair<double, Index>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
  dist(source) = 0.0;
  heap.emplace(0.0, source);
  while (!heap.empty()) {
    const auto [d, u] = heap.top();
    heap.pop();
    if (d > dist(u)) continue;
    for (const auto& [v, w] : graph.adjacency[u]) {
      const double nd = d + w;
      if (nd < dist(v)) {
        dist(v) = nd;
        heap.emplace(nd, v);
      }
    }
  }
  return dist;
}

Eigen::MatrixXd geodesic_distances(const PointSet& points, Index geo_knn) {
  const KnnGraph graph = build_knn_graph(points, geo_knn);
  const Index n = points.size();
  Eigen::MatrixXd d(n, n);
  for (Index i = 0; i < n; ++i) d.col(i) = shortest_paths_from(graph, i);
  // Dijkstra is exact on an undirected graph up to summation order; pin exact symmetry.
  for (Index j = 0; j < n; ++j)
    for (Index i = j + 1; i < n; ++i) d(j, i) = d(i, j);
  return d;
}

Eigen::MatrixXd kernel_matrix(const PointSet& points, const KernelSpec& spec) {
  spec.validate();
  const Index n = points.size();
  if (spec.mode == DistanceMode::Geodesic) {
    const Eigen::MatrixXd d = geodesic_distances(points, spec.geo_knn);
    return d.unaryExpr([&](double v) { return std::isinf(v) ? 0.0 : gaussian(v, spec.sigma); });
  }
  const auto all = iota_indices(n);
  Eigen::MatrixXd k = squared_distances(points.coords, all, all);
  const double scale = -1.0 / (2.0 * spec.sigma * spec.sigma);
  k = (k * scale).array().exp().matrix();
  for (Index j = 0; j < n; ++j)
    for (Index i = j + 1; i < n; ++i) k(j, i) = k(i, j);
  return k;
}

Eigen::MatrixXd kernel_block(const PointSet& points, const std::vector<Index>& indices,
                             const KernelSpec& spec) {
  spec.validate();
  check_indices(indices, points.size(), "kernel block");
  const Index k = static_cast<Index>(indices.size());
  Eigen::MatrixXd out(k, k);
  if (spec.mode == DistanceMode::Geodesic) {
    const KnnGraph graph = build_knn_graph(points, spec.geo_knn);
    for (Index a = 0; a < k; ++a) {
      const Eigen::VectorXd d = shortest_paths_from(graph, indices[a]);
      for (Index b = 0; b < k; ++b) {
        const double v = d(indices[b]);
        out(a, b) = std::isinf(v) ? 0.0 : gaussian(v, spec.sigma);
      }
    }
  } else {
    out = squared_distances(points.coords, indices, indices);
    out = (out * (-1.0 / (2.0 * spec.sigma * spec.sigma))).array().exp().matrix();
  }
  for (Index b = 0; b < k; ++b)
    for (Index a = b + 1; a < k; ++a) out(b, a) = out(a, b);
  return out;
}

Eigen::MatrixXd kernel_cross(const PointSet& points, const std::vector<Index>& rows,
                             const std::vector<Index>& cols, const KernelSpec& spec) {
  spec.validate();
  const Index n = points.size();
  check_indices(rows, n, "row");
  check_indices(cols, n, "column");
  std::vector<char> in_rows(static_cast<std::size_t>(n), 0);
  for (Index i : rows) in_rows[i] = 1;
  for (Index j : cols)
    if (in_rows[j])
      throw Error(ErrorCode::InvalidArgument,
                  "row and column index sets overlap at " + std::to_string(j));

  const Index r = static_cast<Index>(rows.size());
  const Index c = static_cast<Index>(cols.size());
  if (spec.mode == DistanceMode::Geodesic) {
    Eigen::MatrixXd out(r, c);
    if (r == 0 || c == 0) return out;
    const KnnGraph graph = build_knn_graph(points, spec.geo_knn);
    for (Index a = 0; a < r; ++a) {
      const Eigen::VectorXd d = shortest_paths_from(graph, rows[a]);
      for (Index b = 0; b < c; ++b) {
        const double v = d(cols[b]);
        out(a, b) = std::isinf(v) ? 0.0 : gaussian(v, spec.sigma);
      }
    }
    return out;
  }
  Eigen::MatrixXd out = squared_distances(points.coords, rows, cols);
  return (out * (-1.0 / (2.0 * spec.sigma * spec.sigma))).array().exp().matrix();
}

Eigen::MatrixXd gaussian_cross(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, double sigma) {
  if (!(sigma > 0.0)) throw Error(ErrorCode::InvalidArgument, "kernel sigma must be positive");
  if (a.rows() != b.rows()) throw Error(ErrorCode::InvalidArgument, "dimension mismatch");
  Eigen::MatrixXd out(a.cols(), b.cols());
  if (a.rows() <= kDirectDistanceMaxDim) {
    for (Index j = 0; j < b.cols(); ++j)
      for (Index i = 0; i < a.cols(); ++i) out(i, j) = (a.col(i) - b.col(j)).squaredNorm();
  } else {
    out.noalias() = -2.0 * a.transpose() * b;
    out.colwise() += a.colwise().squaredNorm().transpose();
    out.rowwise() += b.colwise().squaredNorm();
    out = out.cwiseMax(0.0);
  }
  return (out * (-1.0 / (2.0 * sigma * sigma))).array().exp().matrix();
}

std::vector<Index> complement(const std::vector<Index>& indices, Index n) {
  std::vector<char> used(static_cast<std::size_t>(n), 0);
  for (Index i : indices) {
    if (i < 0 || i >= n) throw Error(ErrorCode::IndexOutOfRange, "index out of range");
    used[i] = 1;
  }
  std::vector<Index> out;
  out.reserve(static_cast<std::size_t>(n) - indices.size());
  for (Index i = 0; i < n; ++i)
    if (!used[i]) out.push_back(i);
  return out;
}

}  // namespace dppml
