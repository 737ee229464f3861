#include "doctest.h"
#include "oracles.hpp"

#include "dppml/error.hpp"
#include "dppml/metric_kernel.hpp"

#include <cmath>
#include <limits>

using namespace dppml;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Floyd-Warshall over the symmetric kNN graph built by brute force.
Eigen::MatrixXd floyd_geodesic(const Eigen::MatrixXd& x, Index knn) {
  const Index n = x.cols();
  const Eigen::MatrixXd e = oracle::distances(x);
  Eigen::MatrixXd g = Eigen::MatrixXd::Constant(n, n, kInf);
  for (Index i = 0; i < n; ++i) {
    g(i, i) = 0.0;
    std::vector<std::pair<double, Index>> row;
    for (Index j = 0; j < n; ++j)
      if (j != i) row.emplace_back(e(i, j), j);
    std::sort(row.begin(), row.end());
    for (Index t = 0; t < std::min(knn, n - 1); ++t) {
      const Index j = row[t].second;
      g(i, j) = g(j, i) = e(i, j);
    }
  }
  for (Index k = 0; k < n; ++k)
    for (Index i = 0; i < n; ++i)
      for (Index j = 0; j < n; ++j) g(i, j) = std::min(g(i, j), g(i, k) + g(k, j));
  return g;
}

}  // namespace

TEST_CASE("euclidean distances: closed forms and brute-force oracle") {
  const Eigen::MatrixXd one = Eigen::MatrixXd::Zero(3, 1);
  CHECK(euclidean_distances(oracle::point_set(one)) == Eigen::MatrixXd::Zero(1, 1));

  Eigen::MatrixXd two(2, 2);
  two << 0, 3, 0, 4;
  const Eigen::MatrixXd d2 = euclidean_distances(oracle::point_set(two));
  CHECK(d2(0, 1) == 5.0);
  CHECK(d2(1, 0) == 5.0);

  const Eigen::MatrixXd x = oracle::random_points(4, 10, 17);
  const Eigen::MatrixXd d = euclidean_distances(oracle::point_set(x));
  CHECK((d - oracle::distances(x)).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((d - d.transpose()).cwiseAbs().maxCoeff() == 0.0);
  CHECK(d.diagonal().cwiseAbs().maxCoeff() == 0.0);
  CHECK(d.minCoeff() >= 0.0);
}

TEST_CASE("geodesic distances: path composition and oracle") {
  Eigen::MatrixXd line(1, 3);
  line << 0, 1, 2;
  const Eigen::MatrixXd g = geodesic_distances(oracle::point_set(line), 1);
  CHECK(g(0, 2) == 2.0);
  CHECK(g(2, 0) == 2.0);
  for (Index i = 0; i < 3; ++i) CHECK(g(i, i) == 0.0);

  const Eigen::MatrixXd x = oracle::random_points(3, 25, 3);
  for (Index knn : {2, 4, 7}) {
    const Eigen::MatrixXd ours = geodesic_distances(oracle::point_set(x), knn);
    const Eigen::MatrixXd ref = floyd_geodesic(x, knn);
    for (Index i = 0; i < 25; ++i)
      for (Index j = 0; j < 25; ++j) {
        if (std::isinf(ref(i, j)))
          CHECK(std::isinf(ours(i, j)));
        else
          CHECK(std::abs(ours(i, j) - ref(i, j)) < 1e-12);
      }
  }
}

TEST_CASE("geodesic distances: separated clusters are unreachable") {
  Eigen::MatrixXd x = oracle::random_points(2, 20, 5, 0.1);
  x.rightCols(10).array() += 100.0;
  const Eigen::MatrixXd g = geodesic_distances(oracle::point_set(x), 3);
  for (Index i = 0; i < 10; ++i)
    for (Index j = 10; j < 20; ++j) CHECK(std::isinf(g(i, j)));
  for (Index i = 0; i < 10; ++i)
    for (Index j = 0; j < 10; ++j) CHECK(std::isfinite(g(i, j)));
}

TEST_CASE("geodesic distances: triangle inequality and complete-graph limit") {
  const Eigen::MatrixXd x = oracle::random_points(3, 30, 8);
  const Eigen::MatrixXd g = geodesic_distances(oracle::point_set(x), 4);
  for (Index i = 0; i < 30; ++i)
    for (Index j = 0; j < 30; ++j)
      for (Index k = 0; k < 30; ++k)
        if (std::isfinite(g(i, k)) && std::isfinite(g(k, j)))
          CHECK(g(i, j) <= g(i, k) + g(k, j) + 1e-12);

  const Eigen::MatrixXd full = geodesic_distances(oracle::point_set(x), 29);
  CHECK((full - oracle::distances(x)).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("kernel matrix: closed forms, oracle and PSD") {
  const double sigma = 0.7;
  Eigen::MatrixXd two(1, 2);
  two << 0.0, sigma * std::sqrt(2.0);
  const Eigen::MatrixXd k2 = kernel_matrix(oracle::point_set(two), {sigma});
  CHECK(k2(0, 1) == doctest::Approx(std::exp(-1.0)).epsilon(1e-14));
  CHECK(k2(0, 0) == 1.0);

  for (unsigned seed = 0; seed < 5; ++seed) {
    const Eigen::MatrixXd x = oracle::random_points(3, 30, seed);
    const Eigen::MatrixXd k = kernel_matrix(oracle::point_set(x), {1.3});
    CHECK((k - oracle::gaussian_kernel(x, 1.3)).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(k.diagonal().isOnes());
    CHECK(k.minCoeff() > 0.0);
    CHECK(k.maxCoeff() <= 1.0);
    CHECK(k == k.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(k);
    CHECK(eig.eigenvalues().minCoeff() >= -1e-8 * 30);
  }
}

TEST_CASE("kernel matrix: high-dimensional path matches the oracle") {
  const Eigen::MatrixXd x = oracle::random_points(40, 20, 2, 0.2);
  const Eigen::MatrixXd k = kernel_matrix(oracle::point_set(x), {1.0});
  CHECK((k - oracle::gaussian_kernel(x, 1.0)).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(k.diagonal().isOnes());
}

TEST_CASE("kernel matrix: geodesic mode maps disconnected pairs to 0") {
  Eigen::MatrixXd x = oracle::random_points(2, 12, 6, 0.1);
  x.rightCols(6).array() += 50.0;
  const KernelSpec spec{1.0, DistanceMode::Geodesic, 2};
  const Eigen::MatrixXd k = kernel_matrix(oracle::point_set(x), spec);
  CHECK(k(0, 11) == 0.0);
  CHECK(k.diagonal().isOnes());
  const Eigen::MatrixXd g = floyd_geodesic(x, 2);
  for (Index i = 0; i < 6; ++i)
    for (Index j = 0; j < 6; ++j)
      CHECK(std::abs(k(i, j) - std::exp(-g(i, j) * g(i, j) / 2.0)) < 1e-12);
}

TEST_CASE("kernel spec validation") {
  CHECK_THROWS_AS(KernelSpec{0.0}.validate(), Error);
  CHECK_THROWS_AS(KernelSpec{-1.0}.validate(), Error);
  CHECK_THROWS_AS((KernelSpec{1.0, DistanceMode::Geodesic, 0}.validate()), Error);
  CHECK_NOTHROW((KernelSpec{1.0, DistanceMode::Euclidean, 0}.validate()));
}

TEST_CASE("kernel cross matches slices of the full kernel") {
  const Eigen::MatrixXd x = oracle::random_points(3, 50, 12);
  const PointSet p = oracle::point_set(x);
  for (const auto& spec : {KernelSpec{1.0}, KernelSpec{2.0, DistanceMode::Geodesic, 5}}) {
    const Eigen::MatrixXd full = kernel_matrix(p, spec);
    std::vector<Index> rows, cols;
    for (Index i = 0; i < 50; ++i) (i % 3 == 0 ? rows : cols).push_back(i);
    const Eigen::MatrixXd cross = kernel_cross(p, rows, cols, spec);
    CHECK((cross - oracle::submatrix(full, rows, cols)).cwiseAbs().maxCoeff() < 1e-14);
    const Eigen::MatrixXd block = kernel_block(p, rows, spec);
    CHECK((block - oracle::submatrix(full, rows, rows)).cwiseAbs().maxCoeff() < 1e-14);
  }

  const std::vector<Index> one{7};
  const Eigen::MatrixXd row = kernel_cross(p, one, complement(one, 50), KernelSpec{1.0});
  CHECK(row.rows() == 1);
  CHECK(row.cols() == 49);
  CHECK(kernel_cross(p, one, {}, KernelSpec{1.0}).cols() == 0);
}

TEST_CASE("kernel cross errors") {
  const PointSet p = oracle::point_set(oracle::random_points(2, 5, 1));
  try {
    kernel_cross(p, {0, 9}, {1}, KernelSpec{1.0});
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::IndexOutOfRange);
  }
  CHECK_THROWS_AS(kernel_cross(p, {0, 1}, {1, 2}, KernelSpec{1.0}), Error);
}

TEST_CASE("gaussian cross of raw coordinates matches the oracle") {
  const Eigen::MatrixXd a = oracle::random_points(3, 6, 1), b = oracle::random_points(3, 4, 2);
  Eigen::MatrixXd both(3, 10);
  both << a, b;
  const Eigen::MatrixXd ref = oracle::gaussian_kernel(both, 0.9).topRightCorner(6, 4);
  CHECK((gaussian_cross(a, b, 0.9) - ref).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("complement") {
  CHECK(complement({1, 3}, 5) == std::vector<Index>{0, 2, 4});
  CHECK(complement({}, 2) == std::vector<Index>{0, 1});
  CHECK_THROWS_AS(complement({5}, 5), Error);
}
