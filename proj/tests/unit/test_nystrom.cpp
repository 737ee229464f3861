#include "doctest.h"
#include "oracles.hpp"

#include "dppml/datasets.hpp"
#include "dppml/error.hpp"
#include "dppml/graph_embedding.hpp"
#include "dppml/nystrom.hpp"
#include "dppml/random.hpp"
#include "dppml/sampling.hpp"
#include "dppml/stats.hpp"

#include <algorithm>
#include <numeric>

using namespace dppml;

namespace {

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected dppml::Error");
  return ErrorCode::InvalidArgument;
}

}  // namespace

TEST_CASE("nystrom: full landmark set has zero error") {
  const Eigen::MatrixXd k = oracle::gaussian_kernel(oracle::random_points(2, 12, 1), 1.0);
  std::vector<Index> all(12);
  std::iota(all.begin(), all.end(), 0);
  CHECK(reconstruction_error(k, all).error == doctest::Approx(0.0));
}

TEST_CASE("nystrom: two-point closed form") {
  Eigen::MatrixXd k(2, 2);
  k << 1.0, 0.5, 0.5, 1.0;
  CHECK(reconstruction_error(k, {0}).error == doctest::Approx(0.75).epsilon(1e-15));
  CHECK(reconstruction_error(k, {1}).error == doctest::Approx(0.75).epsilon(1e-15));
  CHECK(nystrom_reconstruct(k, {0})(0, 0) == doctest::Approx(0.25));
}

TEST_CASE("nystrom: dense oracle and the lazy kernel form") {
  const Eigen::MatrixXd x = oracle::random_points(3, 30, 4);
  const PointSet p = oracle::point_set(x);
  const KernelSpec spec{1.2};
  const Eigen::MatrixXd k = kernel_matrix(p, spec);
  for (std::uint64_t s = 0; s < 10; ++s) {
    const std::vector<Index> j = uniform_sample(30, 3 + static_cast<Index>(s), s).indices;
    const double ref = oracle::nystrom_error(k, j);
    const double dense = reconstruction_error(k, j).error;
    CHECK(std::abs(dense - ref) <= 1e-10 * std::max(1.0, ref));
    CHECK(std::abs(reconstruction_error(p, spec, j, 7).error - dense) < 1e-10);
    CHECK(dense >= 0.0);

    const std::vector<Index> rest = complement(j, 30);
    const Eigen::MatrixXd approx = nystrom_reconstruct(k, j);
    CHECK(std::abs((oracle::submatrix(k, rest, rest) - approx).trace() - dense) < 1e-10);
  }
}

TEST_CASE("nystrom: geodesic kernel through the lazy form") {
  const PointSet p = generate_swiss_roll(120, 0.0, 3);
  const KernelSpec spec{4.0, DistanceMode::Geodesic, 8};
  const std::vector<Index> j = uniform_sample(120, 15, 1).indices;
  const Eigen::MatrixXd k = kernel_matrix(p, spec);
  CHECK(std::abs(reconstruction_error(p, spec, j).error - reconstruction_error(k, j).error) < 1e-9);
}

TEST_CASE("nystrom: permutation invariance and monotone in the landmark set") {
  const Eigen::MatrixXd k = oracle::gaussian_kernel(oracle::random_points(2, 40, 8), 0.8);
  std::vector<Index> j{3, 17, 25, 8, 39, 11};
  const double base = reconstruction_error(k, j).error;
  std::vector<Index> shuffled = j;
  std::reverse(shuffled.begin(), shuffled.end());
  CHECK(std::abs(reconstruction_error(k, shuffled).error - base) < 1e-12);
  std::rotate(shuffled.begin(), shuffled.begin() + 2, shuffled.end());
  CHECK(std::abs(reconstruction_error(k, shuffled).error - base) < 1e-12);

  double last = base;
  for (Index extra : {0, 1, 2, 30, 31}) {
    j.push_back(extra);
    const double e = reconstruction_error(k, j).error;
    CHECK(e <= last + 1e-10);
    last = e;
  }
}

TEST_CASE("nystrom: rank-one kernel is recovered by any single landmark") {
  Eigen::VectorXd v(6);
  v << 1.0, 0.5, -2.0, 0.3, 1.1, -0.7;
  const Eigen::MatrixXd k = v * v.transpose();
  for (Index i = 0; i < 6; ++i) CHECK(reconstruction_error(k, {i}).error == doctest::Approx(0.0));
}

TEST_CASE("nystrom: errors") {
  const Eigen::MatrixXd k = Eigen::MatrixXd::Identity(4, 4);
  CHECK(code_of([&] { reconstruction_error(k, {}); }) == ErrorCode::InvalidArgument);
  CHECK(code_of([&] { reconstruction_error(k, {4}); }) == ErrorCode::IndexOutOfRange);
  CHECK(code_of([&] { reconstruction_error(k, {1, 1}); }) == ErrorCode::InvalidArgument);
  CHECK(code_of([&] { reconstruction_error(Eigen::MatrixXd::Ones(2, 3), {0}); }) ==
        ErrorCode::InvalidArgument);
  CHECK(code_of([] { nystrom_reconstruct(Eigen::MatrixXd::Identity(2001, 2001), {0}); }) ==
        ErrorCode::TooLarge);
  Eigen::MatrixXd indefinite(2, 2);
  indefinite << 1.0, 2.0, 2.0, 1.0;
  CHECK(code_of([&] { reconstruction_error(indefinite, {0}); }) == ErrorCode::IndefiniteKernel);
}

TEST_CASE("symmetric pseudo-inverse") {
  const Eigen::MatrixXd a = oracle::random_psd(6, 3, 3);
  const Eigen::MatrixXd p = symmetric_pinv(a);
  CHECK((a * p * a - a).cwiseAbs().maxCoeff() < 1e-10);
  CHECK((p * a * p - p).cwiseAbs().maxCoeff() < 1e-10);
  const Eigen::MatrixXd full = oracle::random_psd(4, 9) + Eigen::MatrixXd::Identity(4, 4);
  CHECK((symmetric_pinv(full) - full.inverse()).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("out-of-sample extension: hand evaluation") {
  Eigen::MatrixXd phi(3, 2);
  phi << 0.2, -0.5, 0.4, 0.1, -0.6, 0.3;
  Eigen::VectorXd lambda(2);
  lambda << 0.9, 0.5;
  Eigen::MatrixXd cross(3, 2);
  cross << 0.8, 0.1, 0.3, 0.6, 0.5, 0.2;
  Eigen::VectorXd means(3);
  means << 0.7, 0.4, 0.55;

  const Eigen::MatrixXd out = oos_extend(phi, lambda, cross, means);
  REQUIRE(out.rows() == 2);
  REQUIRE(out.cols() == 2);
  for (Index j = 0; j < 2; ++j) {
    const double col_mean = cross.col(j).mean();
    for (Index c = 0; c < 2; ++c) {
      double sum = 0.0;
      for (Index i = 0; i < 3; ++i)
        sum += cross(i, j) / (3.0 * std::sqrt(col_mean * means(i))) * phi(i, c);
      CHECK(out(j, c) == doctest::Approx(sum / lambda(c)).epsilon(1e-14));
    }
  }
}

TEST_CASE("out-of-sample extension: one-hot kernel column") {
  Eigen::MatrixXd phi(3, 1);
  phi << 0.2, 0.4, -0.6;
  Eigen::VectorXd lambda = Eigen::VectorXd::Constant(1, 0.5);
  Eigen::VectorXd means = Eigen::VectorXd::Constant(3, 0.25);
  Eigen::MatrixXd cross = Eigen::MatrixXd::Zero(3, 1);
  cross(1, 0) = 0.6;
  // Ktilde = 0.6 / (3 sqrt(0.2 * 0.25)), so the new point lands at Ktilde * phi_1 / lambda.
  const double weight = 0.6 / (3.0 * std::sqrt(0.2 * 0.25));
  CHECK(oos_extend(phi, lambda, cross, means)(0, 0) == doctest::Approx(weight * 0.4 / 0.5));
}

TEST_CASE("out-of-sample extension: errors") {
  const Eigen::MatrixXd phi = Eigen::MatrixXd::Ones(2, 1);
  const Eigen::VectorXd means = Eigen::VectorXd::Ones(2);
  const Eigen::MatrixXd cross = Eigen::MatrixXd::Ones(2, 3);
  CHECK(code_of([&] { oos_extend(phi, Eigen::VectorXd::Zero(1), cross, means); }) ==
        ErrorCode::NonPositiveEigenvalue);
  CHECK(code_of([&] { oos_extend(phi, Eigen::VectorXd::Ones(1), Eigen::MatrixXd::Zero(2, 3), means); }) ==
        ErrorCode::IsolatedPoint);
  CHECK(code_of([&] { oos_extend(phi, Eigen::VectorXd::Ones(1), cross, Eigen::VectorXd::Zero(2)); }) ==
        ErrorCode::IsolatedPoint);
  CHECK(code_of([&] { oos_extend(phi, Eigen::VectorXd::Ones(2), cross, means); }) ==
        ErrorCode::InvalidArgument);
  CHECK(code_of([&] { oos_extend(phi, Eigen::VectorXd::Ones(1), Eigen::MatrixXd::Ones(3, 3), means); }) ==
        ErrorCode::InvalidArgument);
}

TEST_CASE("out-of-sample extension follows the Swiss roll parameter") {
  const PointSet roll = generate_swiss_roll(2000, 0.0, 11);
  PipelineOptions opt;
  opt.sampler = {400, 20, Welsch{1.0}, CovarianceKind::None};
  opt.metric = GraphMetric::Euclidean;
  opt.rule = KnnRule{8};
  opt.sigma = 2.0;
  const PipelineResult r = run_pipeline(roll, opt, 5);
  REQUIRE(r.components == 1);
  const std::vector<Index> rest = complement(r.landmarks.indices, roll.size());
  Eigen::MatrixXd emb(static_cast<Index>(rest.size()), 2), truth(2, static_cast<Index>(rest.size()));
  for (std::size_t i = 0; i < rest.size(); ++i) {
    emb.row(static_cast<Index>(i)) = r.embedding.row(rest[i]);
    truth.col(static_cast<Index>(i)) = roll.truth->col(rest[i]);
  }
  CHECK(dominant_spearman(emb, truth) >= 0.9);
}
