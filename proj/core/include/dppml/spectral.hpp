#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

namespace dppml {

struct SymmetricEigenpairs {
  Eigen::VectorXd values;   // ascending
  Eigen::MatrixXd vectors;  // orthonormal columns
};

// Smallest `count` eigenpairs of a sparse symmetric positive semidefinite matrix restricted
// to the orthogonal complement of `deflate` (a unit vector, may be empty). Shift-invert
// Lanczos with full reorthogonalization; the Krylov space grows until every wanted Ritz
// pair has relative residual below `tolerance`.
SymmetricEigenpairs smallest_eigenpairs(const Eigen::SparseMatrix<double>& matrix, Eigen::Index count,
                                        const Eigen::VectorXd& deflate, double tolerance = 1e-10);

}  // namespace dppml
