#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <random>

#include "entrywise/types.hpp"

namespace entrywise::testing {

inline Matrix gaussian(Index rows, Index cols, std::mt19937_64& gen) {
  std::normal_distribution<double> z;
  Matrix m(rows, cols);
  for (Index j = 0; j < cols; ++j) {
    for (Index i = 0; i < rows; ++i) m(i, j) = z(gen);
  }
  return m;
}

// Haar-ish orthogonal matrix from the QR of a Gaussian matrix.
inline Matrix random_orthogonal(Index d, std::mt19937_64& gen) {
  const Matrix g = gaussian(d, d, gen);
  Eigen::HouseholderQR<Matrix> qr(g);
  Matrix q = qr.householderQ() * Matrix::Identity(d, d);
  const Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (Index k = 0; k < d; ++k) {
    if (r(k, k) < 0.0) q.col(k) = -q.col(k);
  }
  return q;
}

inline Matrix orthonormal_columns(Index n, Index d, std::mt19937_64& gen) {
  Eigen::HouseholderQR<Matrix> qr(gaussian(n, d, gen));
  return qr.householderQ() * Matrix::Identity(n, d);
}

inline Matrix random_spd(Index d, std::mt19937_64& gen) {
  const Matrix g = gaussian(d, d, gen);
  return g * g.transpose() + 0.5 * Matrix::Identity(d, d);
}

// Symmetric square root inverse through an eigendecomposition.
inline Matrix inv_sqrt_spd(const Matrix& s) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(s);
  return es.eigenvectors() * es.eigenvalues().cwiseSqrt().cwiseInverse().asDiagonal() *
         es.eigenvectors().transpose();
}

inline double min_eigenvalue(const Matrix& s) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (s + s.transpose()), Eigen::EigenvaluesOnly);
  return es.eigenvalues()(0);
}

}  // namespace entrywise::testing
