#pragma once

#include <Eigen/Dense>

#include <optional>
#include <vector>

namespace dppml {

using Index = Eigen::Index;

// d x n collection of points, one point per column.
struct PointSet {
  Eigen::MatrixXd coords;
  std::optional<std::vector<int>> labels;
  // Intrinsic generating parameters, one column per point (e.g. (t, h) for the Swiss roll).
  std::optional<Eigen::MatrixXd> truth;

  Index dim() const { return coords.rows(); }
  Index size() const { return coords.cols(); }
  auto point(Index i) const { return coords.col(i); }

  // Throws dppml::Error if any invariant is broken (non-finite coordinates,
  // label or truth length mismatch, empty set).
  void validate() const;

  // Columns `indices` of this set (labels and truth carried along).
  PointSet subset(const std::vector<Index>& indices) const;
};

}  // namespace dppml
