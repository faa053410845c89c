#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <string>

#include "entrywise/errors.hpp"

namespace entrywise {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

/// Dense real symmetric n x n matrix.
///
/// Construction symmetrizes the input as (M + M^T) / 2, so entries(i, j) and
/// entries(j, i) are bitwise identical afterwards. Inputs that are already
/// symmetric pass through unchanged.
class DenseSymMatrix {
 public:
  DenseSymMatrix() = default;

  explicit DenseSymMatrix(Matrix m) : m_(std::move(m)) {
    if (m_.rows() != m_.cols()) {
      throw DimensionError("DenseSymMatrix: matrix is " + std::to_string(m_.rows()) + "x" +
                           std::to_string(m_.cols()) + ", expected square");
    }
    if (m_.rows() < 1) throw DimensionError("DenseSymMatrix: dimension must be at least 1");
    const Index n = m_.rows();
    for (Index j = 0; j < n; ++j) {
      for (Index i = j + 1; i < n; ++i) {
        if (m_(i, j) != m_(j, i)) {
          const double avg = 0.5 * (m_(i, j) + m_(j, i));
          m_(i, j) = avg;
          m_(j, i) = avg;
        }
      }
    }
  }

  /// Wraps a matrix the caller guarantees to be exactly symmetric (checked).
  static DenseSymMatrix from_symmetric(Matrix m) {
    if (m.rows() != m.cols() || m.rows() < 1) {
      throw DimensionError("DenseSymMatrix: expected a non-empty square matrix");
    }
    if (!(m.array() == m.transpose().array()).all()) {
      throw DimensionError("DenseSymMatrix: input is not exactly symmetric");
    }
    DenseSymMatrix out;
    out.m_ = std::move(m);
    return out;
  }

  Index n() const noexcept { return m_.rows(); }
  const Matrix& matrix() const noexcept { return m_; }
  double operator()(Index i, Index j) const { return m_(i, j); }

 private:
  Matrix m_;
};

}  // namespace entrywise
