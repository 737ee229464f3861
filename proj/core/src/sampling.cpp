#include "dppml/sampling.hpp"

#include "dppml/error.hpp"
#include "dppml/random.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <string>

namespace dppml {

namespace {

void require_symmetric(const Eigen::MatrixXd& k) {
  if (k.rows() != k.cols()) throw Error(ErrorCode::NotSymmetric, "kernel is not square");
  const double scale = std::max(1.0, k.cwiseAbs().maxCoeff());
  const double asym = (k - k.transpose()).cwiseAbs().maxCoeff();
  if (asym > 1e-12 * scale)
    throw Error(ErrorCode::NotSymmetric,
                "kernel asymmetry " + std::to_string(asym) + " exceeds tolerance");
}

}  // namespace

LandmarkSelection exact_dpp_sample(const Eigen::MatrixXd& kernel, std::uint64_t seed,
                                   ExactDppInfo* info) {
  require_symmetric(kernel);
  const Index n = kernel.rows();
  LandmarkSelection out;
  if (n == 0) return out;

  const Eigen::MatrixXd sym = 0.5 * (kernel + kernel.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sym);
  if (eig.info() != Eigen::Success)
    throw Error(ErrorCode::NumericalFailure, "eigendecomposition failed");
  Eigen::VectorXd lambda = eig.eigenvalues();
  const double floor = -1e-8 * std::max(1.0, lambda.maxCoeff());
  Index clamped = 0;
  for (Index i = 0; i < n; ++i) {
    if (lambda(i) < floor)
      throw Error(ErrorCode::IndefiniteKernel,
                  "eigenvalue " + std::to_string(lambda(i)) + " below clamping floor");
    if (lambda(i) < 0.0) {
      lambda(i) = 0.0;
      ++clamped;
    }
  }

  Rng rng = make_rng(seed);
  std::vector<Index> chosen;
  for (Index i = 0; i < n; ++i)
    if (uniform01(rng) < lambda(i) / (lambda(i) + 1.0)) chosen.push_back(i);
  if (info) {
    info->clamped_eigenvalues = clamped;
    info->selected_eigenvectors = static_cast<Index>(chosen.size());
  }

  const Index m = static_cast<Index>(chosen.size());
  // Rows of `basis` are the vectors B_i.
  Eigen::MatrixXd basis(n, m);
  for (Index c = 0; c < m; ++c) basis.col(c) = eig.eigenvectors().col(chosen[c]);

  std::vector<double> weights(static_cast<std::size_t>(n));
  for (Index step = 0; step < m; ++step) {
    for (Index j = 0; j < n; ++j) weights[j] = basis.row(j).squaredNorm();
    const std::size_t pick = draw_weighted(weights, rng);
    if (pick == weights.size()) break;
    const Index i = static_cast<Index>(pick);
    out.indices.push_back(i);

    const Eigen::RowVectorXd b_i = basis.row(i);
    const double norm2 = b_i.squaredNorm();
    const Eigen::VectorXd coeff = basis * b_i.transpose() / norm2;
    basis.noalias() -= coeff * b_i;
    basis.row(i).setZero();
  }
  return out;
}

Eigen::VectorXd projection_update(const Eigen::VectorXd& b_i, const Eigen::VectorXd& b_j) {
  if (b_i.size() != b_j.size())
    throw Error(ErrorCode::InvalidArgument, "projection vectors differ in length");
  const double norm2 = b_i.squaredNorm();
  if (norm2 == 0.0) throw Error(ErrorCode::ZeroVector, "cannot project away from a zero vector");
  return b_j - (b_j.dot(b_i) / norm2) * b_i;
}

SubsetDistribution volume_sampling_distribution(const Eigen::MatrixXd& kernel, Index k,
                                                double s) {
  require_symmetric(kernel);
  const Index n = kernel.rows();
  if (n > kMaxEnumerationSize)
    throw Error(ErrorCode::TooLarge, "enumeration limited to n <= " +
                                         std::to_string(kMaxEnumerationSize) + ", got " +
                                         std::to_string(n));
  if (k < 0 || k > n) throw Error(ErrorCode::InvalidArgument, "subset size outside [0, n]");
  if (!(s >= 0.0)) throw Error(ErrorCode::InvalidArgument, "annealing exponent must be >= 0");

  SubsetDistribution dist;
  std::vector<Index> subset(static_cast<std::size_t>(k));
  std::iota(subset.begin(), subset.end(), Index{0});
  double total = 0.0;
  Eigen::MatrixXd block(k, k);
  while (true) {
    for (Index a = 0; a < k; ++a)
      for (Index b = 0; b < k; ++b) block(a, b) = kernel(subset[a], subset[b]);
    const double det = k == 0 ? 1.0 : std::max(0.0, block.determinant());
    const double w = std::pow(det, s);
    dist.subsets.push_back(subset);
    dist.probabilities.push_back(w);
    total += w;

    // Next combination in lexicographic order.
    Index pos = k - 1;
    while (pos >= 0 && subset[pos] == n - k + pos) --pos;
    if (pos < 0) break;
    ++subset[pos];
    for (Index q = pos + 1; q < k; ++q) subset[q] = subset[q - 1] + 1;
  }
  if (!(total > 0.0))
    throw Error(ErrorCode::DegenerateDistribution, "every k-subset has zero determinant");
  for (double& p : dist.probabilities) p /= total;
  return dist;
}

LandmarkSelection volume_sampling_enumerate(const Eigen::MatrixXd& kernel, Index k, double s,
                                            std::uint64_t seed) {
  const SubsetDistribution dist = volume_sampling_distribution(kernel, k, s);
  Rng rng = make_rng(seed);
  const std::size_t pick = draw_weighted(dist.probabilities, rng);
  LandmarkSelection out;
  out.indices = dist.subsets[pick];
  return out;
}

double evaluate_update(const UpdateFunction& f, double delta, double max_distance) {
  if (const auto* w = std::get_if<Welsch>(&f))
    return 1.0 - std::exp(-(delta * delta) / (2.0 * w->sigma * w->sigma));
  const auto& sine = std::get<SineSquared>(f);
  const double tau = sine.tau ? *sine.tau : 2.0 * max_distance / std::numbers::pi;
  if (!(tau > 0.0)) return delta > 0.0 ? 1.0 : 0.0;
  const double s = std::sin(delta / tau);
  return s * s;
}

Eigen::MatrixXd local_covariance(const PointSet& points, const std::vector<Index>& neighborhood) {
  const Index d = points.dim();
  const double count = static_cast<double>(neighborhood.size());
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(d);
  for (Index j : neighborhood) mean += points.coords.col(j);
  mean /= count;
  Eigen::MatrixXd c = Eigen::MatrixXd::Zero(d, d);
  for (Index j : neighborhood) {
    const Eigen::VectorXd diff = points.coords.col(j) - mean;
    c.selfadjointView<Eigen::Lower>().rankUpdate(diff);
  }
  c = c.selfadjointView<Eigen::Lower>();
  c /= count;
  const double ridge = std::max(1e-6 * c.trace() / static_cast<double>(d), 1e-12);
  c.diagonal().array() += ridge;
  return c;
}

Eigen::VectorXd local_covariance_diagonal(const PointSet& points,
                                          const std::vector<Index>& neighborhood) {
  const Index d = points.dim();
  const double count = static_cast<double>(neighborhood.size());
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(d);
  for (Index j : neighborhood) mean += points.coords.col(j);
  mean /= count;
  Eigen::VectorXd var = Eigen::VectorXd::Zero(d);
  for (Index j : neighborhood) var += (points.coords.col(j) - mean).array().square().matrix();
  var /= count;
  const double ridge = std::max(1e-6 * var.sum() / static_cast<double>(d), 1e-12);
  var.array() += ridge;
  return var;
}

std::vector<Index> nearest_neighborhood(const Eigen::VectorXd& distances, Index center, Index m) {
  const Index n = distances.size();
  m = std::clamp<Index>(m, 1, n);
  std::vector<std::pair<double, Index>> others;
  others.reserve(static_cast<std::size_t>(n - 1));
  for (Index j = 0; j < n; ++j)
    if (j != center) others.emplace_back(distances(j), j);
  const Index take = m - 1;
  if (take > 0 && take < static_cast<Index>(others.size()))
    std::nth_element(others.begin(), others.begin() + take, others.end());
  std::sort(others.begin(), others.begin() + take);
  std::vector<Index> out;
  out.reserve(static_cast<std::size_t>(m));
  out.push_back(center);
  for (Index t = 0; t < take; ++t) out.push_back(others[t].second);
  return out;
}

LandmarkSelection efficient_dpp_sample(const PointSet& points, const EfficientDppOptions& options,
                                       std::uint64_t seed) {
  const Index n = points.size();
  const Index k = options.k;
  const Index m = options.m;
  if (k < 1 || k > n) throw Error(ErrorCode::InvalidArgument, "need 1 <= k <= n");
  if (m < 1 || m > n) throw Error(ErrorCode::InvalidArgument, "need 1 <= m <= n");
  if (const auto* w = std::get_if<Welsch>(&options.update); w && !(w->sigma > 0.0))
    throw Error(ErrorCode::InvalidArgument, "Welsch sigma must be positive");
  if (const auto* s = std::get_if<SineSquared>(&options.update); s && s->tau && !(*s->tau > 0.0))
    throw Error(ErrorCode::InvalidArgument, "sine-squared tau must be positive");

  Rng rng = make_rng(seed);
  std::vector<double> weight(static_cast<std::size_t>(n), 1.0);
  Eigen::VectorXd delta(n);

  LandmarkSelection out;
  out.covariance_kind = options.covariances;
  out.indices.reserve(static_cast<std::size_t>(k));
  for (Index iter = 0; iter < k; ++iter) {
    const std::size_t pick = draw_weighted(weight, rng);
    if (pick == weight.size())
      throw Error(ErrorCode::ExhaustedMass,
                  "all selection weights are zero before draw " + std::to_string(iter + 1) +
                      " of " + std::to_string(k));
    const Index i = static_cast<Index>(pick);
    out.indices.push_back(i);

    const auto xi = points.coords.col(i);
    for (Index j = 0; j < n; ++j) delta(j) = (points.coords.col(j) - xi).norm();
    const std::vector<Index> hood = nearest_neighborhood(delta, i, m);
    double max_distance = 0.0;
    for (Index j : hood) max_distance = std::max(max_distance, delta(j));
    for (Index j : hood) weight[j] *= evaluate_update(options.update, delta(j), max_distance);
    weight[i] = 0.0;

    if (options.covariances == CovarianceKind::Full)
      out.covariances.push_back(local_covariance(points, hood));
    else if (options.covariances == CovarianceKind::Diagonal)
      out.covariances.push_back(local_covariance_diagonal(points, hood));
  }
  return out;
}

LandmarkSelection uniform_sample(Index n, Index k, std::uint64_t seed) {
  if (k < 0 || k > n) throw Error(ErrorCode::InvalidArgument, "need 0 <= k <= n");
  Rng rng = make_rng(seed);
  std::vector<Index> pool(static_cast<std::size_t>(n));
  std::iota(pool.begin(), pool.end(), Index{0});
  for (Index i = 0; i < k; ++i) {
    const Index j = i + static_cast<Index>(uniform_index(rng, static_cast<std::uint64_t>(n - i)));
    std::swap(pool[i], pool[j]);
  }
  LandmarkSelection out;
  out.indices.assign(pool.begin(), pool.begin() + k);
  return out;
}

LandmarkSelection kmeanspp_seed(const PointSet& points, Index k, std::uint64_t seed) {
  const Index n = points.size();
  if (k < 0 || k > n) throw Error(ErrorCode::InvalidArgument, "need 0 <= k <= n");
  LandmarkSelection out;
  if (k == 0) return out;
  Rng rng = make_rng(seed);
  std::vector<double> d2(static_cast<std::size_t>(n), std::numeric_limits<double>::infinity());
  std::vector<char> taken(static_cast<std::size_t>(n), 0);

  Index next = static_cast<Index>(uniform_index(rng, static_cast<std::uint64_t>(n)));
  for (Index round = 0; round < k; ++round) {
    out.indices.push_back(next);
    taken[next] = 1;
    if (round + 1 == k) break;
    const auto c = points.coords.col(next);
    for (Index j = 0; j < n; ++j)
      d2[j] = std::min(d2[j], (points.coords.col(j) - c).squaredNorm());
    for (Index j = 0; j < n; ++j)
      if (taken[j]) d2[j] = 0.0;
    const std::size_t pick = draw_weighted(d2, rng);
    if (pick != d2.size()) {
      next = static_cast<Index>(pick);
      continue;
    }
    // All remaining mass is zero (duplicates only): uniform over the untaken points.
    std::vector<Index> free;
    for (Index j = 0; j < n; ++j)
      if (!taken[j]) free.push_back(j);
    next = free[uniform_index(rng, free.size())];
  }
  return out;
}

namespace {

// Index of the nearest centroid for every point (ties to the lower centroid index) and the
// squared distance to it.
void assign_points(const Eigen::MatrixXd& x, const Eigen::MatrixXd& centroids,
                   std::vector<Index>& assignment, Eigen::VectorXd& dist2) {
  const Index n = x.cols();
  const Index k = centroids.cols();
  assignment.resize(static_cast<std::size_t>(n));
  dist2.resize(n);
  if (x.rows() > 16) {
    const Eigen::RowVectorXd c_sq = centroids.colwise().squaredNorm();
    constexpr Index tile = 2048;
    for (Index start = 0; start < n; start += tile) {
      const Index len = std::min(tile, n - start);
      const auto block = x.middleCols(start, len);
      Eigen::MatrixXd d = -2.0 * block.transpose() * centroids;
      d.rowwise() += c_sq;
      d.colwise() += block.colwise().squaredNorm().transpose();
      for (Index i = 0; i < len; ++i) {
        Index best = 0;
        for (Index c = 1; c < k; ++c)
          if (d(i, c) < d(i, best)) best = c;
        assignment[start + i] = best;
        dist2(start + i) = std::max(0.0, d(i, best));
      }
    }
    return;
  }
  for (Index i = 0; i < n; ++i) {
    Index best = 0;
    double best_d = (x.col(i) - centroids.col(0)).squaredNorm();
    for (Index c = 1; c < k; ++c) {
      const double d = (x.col(i) - centroids.col(c)).squaredNorm();
      if (d < best_d) {
        best_d = d;
        best = c;
      }
    }
    assignment[i] = best;
    dist2(i) = best_d;
  }
}

}  // namespace

KMeansResult kmeans(const PointSet& points, Index k, KMeansInit init, std::uint64_t seed,
                    Index max_iter) {
  const Index n = points.size();
  if (k < 1 || k > n) throw Error(ErrorCode::InvalidArgument, "need 1 <= k <= n");
  if (max_iter < 0) throw Error(ErrorCode::InvalidArgument, "max_iter must be >= 0");
  const Eigen::MatrixXd& x = points.coords;

  const LandmarkSelection seeds =
      init == KMeansInit::PlusPlus ? kmeanspp_seed(points, k, seed) : uniform_sample(n, k, seed);
  KMeansResult result;
  result.centroids.resize(points.dim(), k);
  for (Index c = 0; c < k; ++c) result.centroids.col(c) = x.col(seeds.indices[c]);

  std::vector<Index> assignment;
  Eigen::VectorXd dist2;
  assign_points(x, result.centroids, assignment, dist2);

  if (max_iter == 0) {
    // Centroids are still the seeds themselves.
    result.landmarks = seeds;
    result.distortion = dist2.sum();
    return result;
  }

  std::vector<Index> previous;
  Eigen::VectorXd counts(k);
  for (Index iter = 0; iter < max_iter; ++iter) {
    result.iterations = iter + 1;
    result.centroids.setZero();
    counts.setZero();
    for (Index i = 0; i < n; ++i) {
      result.centroids.col(assignment[i]) += x.col(i);
      counts(assignment[i]) += 1.0;
    }
    std::vector<char> reseeded(static_cast<std::size_t>(n), 0);
    for (Index c = 0; c < k; ++c) {
      if (counts(c) > 0.0) {
        result.centroids.col(c) /= counts(c);
        continue;
      }
      // Empty cluster: move it to the point farthest from its own centroid.
      Index far = -1;
      for (Index i = 0; i < n; ++i)
        if (!reseeded[i] && (far < 0 || dist2(i) > dist2(far))) far = i;
      reseeded[far] = 1;
      dist2(far) = 0.0;
      result.centroids.col(c) = x.col(far);
    }
    previous = assignment;
    assign_points(x, result.centroids, assignment, dist2);
    if (assignment == previous) break;
  }
  result.distortion = dist2.sum();

  // Snap each centroid to its nearest unused data point.
  std::vector<char> taken(static_cast<std::size_t>(n), 0);
  result.landmarks.indices.reserve(static_cast<std::size_t>(k));
  for (Index c = 0; c < k; ++c) {
    Index best = -1;
    double best_d = std::numeric_limits<double>::infinity();
    for (Index i = 0; i < n; ++i) {
      if (taken[i]) continue;
      const double d = (x.col(i) - result.centroids.col(c)).squaredNorm();
      if (d < best_d) {
        best_d = d;
        best = i;
      }
    }
    taken[best] = 1;
    result.landmarks.indices.push_back(best);
  }
  return result;
}

}  // namespace dppml
