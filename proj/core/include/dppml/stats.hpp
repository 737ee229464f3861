#pragma once

#include <Eigen/Dense>

#include <span>
#include <vector>

namespace dppml {

// Ranks starting at 1; tied values share their average rank.
std::vector<double> average_ranks(std::span<const double> values);

double pearson(std::span<const double> a, std::span<const double> b);
double spearman(std::span<const double> a, std::span<const double> b);

// max over embedding columns c and truth rows r of |spearman(embedding.col(c), truth.row(r))|.
double dominant_spearman(const Eigen::MatrixXd& embedding, const Eigen::MatrixXd& truth);

struct MeanStd {
  double mean = 0.0;
  double stddev = 0.0;  // sample standard deviation (n - 1); 0 for a single value
};
MeanStd mean_std(std::span<const double> values);

// Mann-Whitney U test, normal approximation with tie correction. One-sided p-value for
// the alternative "a tends to be larger than b".
double mann_whitney_greater(std::span<const double> a, std::span<const double> b);

}  // namespace dppml
