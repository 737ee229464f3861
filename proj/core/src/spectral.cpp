#include "dppml/spectral.hpp"

#include "dppml/error.hpp"
#include "dppml/random.hpp"

#include <Eigen/SparseCholesky>

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace dppml {

namespace {

// Graphs denser than this fraction of n^2 are factored as dense matrices.
constexpr double kDenseFactorFill = 0.05;

using Solve = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

Solve shifted_inverse(const Eigen::SparseMatrix<double>& matrix, double shift) {
  const Eigen::Index n = matrix.rows();
  Eigen::SparseMatrix<double> shifted = matrix;
  for (Eigen::Index i = 0; i < n; ++i) shifted.coeffRef(i, i) += shift;
  shifted.makeCompressed();

  const double fill = static_cast<double>(shifted.nonZeros()) / (static_cast<double>(n) * n);
  if (fill > kDenseFactorFill) {
    auto llt = std::make_shared<Eigen::LLT<Eigen::MatrixXd>>(Eigen::MatrixXd(shifted));
    if (llt->info() != Eigen::Success)
      throw Error(ErrorCode::NotPositiveDefinite, "shifted matrix is not positive definite");
    return [llt](const Eigen::VectorXd& b) -> Eigen::VectorXd { return llt->solve(b); };
  }
  auto ldlt = std::make_shared<Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>>>(shifted);
  if (ldlt->info() != Eigen::Success)
    throw Error(ErrorCode::NotPositiveDefinite, "sparse factorization failed");
  return [ldlt](const Eigen::VectorXd& b) -> Eigen::VectorXd { return ldlt->solve(b); };
}

void deflate_against(Eigen::VectorXd& v, const Eigen::VectorXd& u) {
  if (u.size() != 0) v -= u.dot(v) * u;
}

}  // namespace

SymmetricEigenpairs smallest_eigenpairs(const Eigen::SparseMatrix<double>& matrix,
                                        Eigen::Index count, const Eigen::VectorXd& deflate,
                                        double tolerance) {
  using Eigen::Index;
  const Index n = matrix.rows();
  const Index available = n - (deflate.size() != 0 ? 1 : 0);
  if (count < 1 || count > available)
    throw Error(ErrorCode::InvalidArgument, "requested " + std::to_string(count) +
                                                " eigenpairs from a space of dimension " +
                                                std::to_string(available));

  const double mean_diag = std::max(matrix.diagonal().mean(), 1e-300);
  const double shift = 1e-3 * mean_diag;
  const Solve solve = shifted_inverse(matrix, shift);

  Rng rng = make_rng(0x5eed);
  std::normal_distribution<double> gauss;
  auto fresh_vector = [&](const Eigen::MatrixXd& basis, Index used) {
    for (int attempt = 0; attempt < 8; ++attempt) {
      Eigen::VectorXd v(n);
      for (Index i = 0; i < n; ++i) v(i) = gauss(rng);
      for (int pass = 0; pass < 2; ++pass) {
        deflate_against(v, deflate);
        if (used > 0) v -= basis.leftCols(used) * (basis.leftCols(used).transpose() * v);
      }
      const double norm = v.norm();
      if (norm > 1e-8) return Eigen::VectorXd(v / norm);
    }
    throw Error(ErrorCode::NumericalFailure, "could not extend the Krylov basis");
  };

  const Index max_dim = available;
  Index capacity = std::min(max_dim, std::max<Index>(2 * count + 20, 40));
  Eigen::MatrixXd basis(n, capacity);
  std::vector<double> alpha, beta;
  basis.col(0) = fresh_vector(basis, 0);

  Eigen::VectorXd ritz_values;
  Eigen::MatrixXd ritz_vectors;
  Index size = 0;
  for (Index j = 0; j < max_dim; ++j) {
    if (j + 1 > capacity) {
      capacity = std::min(max_dim, 2 * capacity);
      basis.conservativeResize(Eigen::NoChange, capacity);
    }
    Eigen::VectorXd w = solve(basis.col(j));
    deflate_against(w, deflate);
    const double a = basis.col(j).dot(w);
    alpha.push_back(a);
    // Full reorthogonalization (twice is enough).
    for (int pass = 0; pass < 2; ++pass) {
      w -= basis.leftCols(j + 1) * (basis.leftCols(j + 1).transpose() * w);
      deflate_against(w, deflate);
    }
    const double b = w.norm();
    size = j + 1;

    const bool exhausted = size == max_dim;
    const bool check = size >= count && (size % 5 == 0 || exhausted || b < 1e-12);
    if (check) {
      Eigen::VectorXd diag = Eigen::Map<const Eigen::VectorXd>(alpha.data(), size);
      Eigen::VectorXd sub = Eigen::VectorXd::Zero(std::max<Index>(size - 1, 0));
      for (Index t = 0; t + 1 < size; ++t) sub(t) = beta[t];
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> tri;
      tri.computeFromTridiagonal(diag, sub, Eigen::ComputeEigenvectors);
      // Largest theta of the inverse operator are the smallest eigenvalues of the matrix.
      bool converged = true;
      for (Index c = 0; c < count; ++c) {
        const Index col = size - 1 - c;
        const double theta = tri.eigenvalues()(col);
        const double residual = b * std::abs(tri.eigenvectors()(size - 1, col));
        if (!(theta > 0.0) || residual > tolerance * theta) converged = false;
      }
      if (converged || exhausted) {
        ritz_values.resize(count);
        ritz_vectors.resize(n, count);
        for (Index c = 0; c < count; ++c) {
          const Index col = size - 1 - c;
          Eigen::VectorXd y = basis.leftCols(size) * tri.eigenvectors().col(col);
          y.normalize();
          ritz_vectors.col(c) = y;
          ritz_values(c) = y.dot(matrix * y);
        }
        break;
      }
    }
    if (exhausted) break;
    if (b < 1e-12) {
      // Invariant subspace found; continue from a fresh orthogonal direction.
      beta.push_back(0.0);
      if (j + 2 > capacity) {
        capacity = std::min(max_dim, 2 * capacity);
        basis.conservativeResize(Eigen::NoChange, capacity);
      }
      basis.col(j + 1) = fresh_vector(basis, j + 1);
      continue;
    }
    beta.push_back(b);
    if (j + 2 > capacity) {
      capacity = std::min(max_dim, 2 * capacity);
      basis.conservativeResize(Eigen::NoChange, capacity);
    }
    basis.col(j + 1) = w / b;
  }
  if (ritz_values.size() != count)
    throw Error(ErrorCode::NumericalFailure, "Lanczos iteration did not converge");

  // Ascending order.
  std::vector<Index> order(static_cast<std::size_t>(count));
  for (Index c = 0; c < count; ++c) order[c] = c;
  std::sort(order.begin(), order.end(),
            [&](Index a, Index b) { return ritz_values(a) < ritz_values(b); });
  SymmetricEigenpairs out;
  out.values.resize(count);
  out.vectors.resize(n, count);
  for (Index c = 0; c < count; ++c) {
    out.values(c) = ritz_values(order[c]);
    out.vectors.col(c) = ritz_vectors.col(order[c]);
  }
  return out;
}

}  // namespace dppml
