#pragma once

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <utility>

#include "entrywise/detail/lapack.hpp"
#include "entrywise/errors.hpp"
#include "entrywise/types.hpp"

namespace entrywise {

/// Retained positive and negative eigenpairs of a symmetric matrix.
///
/// sPlus is descending (largest first). sMinus is descending as well, so the
/// most negative eigenvalue sits last. Columns are unit eigenvectors whose
/// largest-magnitude coordinate is positive (ties resolved by lowest index).
struct SignedEigenPair {
  Index nPos = 0;
  Index nNeg = 0;
  Matrix uPlus;
  Matrix uMinus;
  Vector sPlus;
  Vector sMinus;

  Index dim() const noexcept { return nPos + nNeg; }
  Index n() const noexcept { return nPos > 0 ? uPlus.rows() : uMinus.rows(); }

  /// [uPlus, uMinus]
  Matrix vectors() const {
    Matrix u(n(), dim());
    if (nPos > 0) u.leftCols(nPos) = uPlus;
    if (nNeg > 0) u.rightCols(nNeg) = uMinus;
    return u;
  }

  /// [sPlus; sMinus]
  Vector values() const {
    Vector s(dim());
    if (nPos > 0) s.head(nPos) = sPlus;
    if (nNeg > 0) s.tail(nNeg) = sMinus;
    return s;
  }
};

/// Orthogonal d x d alignment with the Frobenius misfit it leaves.
struct OrthogonalAligner {
  Matrix w;
  double residual = 0.0;
};

struct RankSplit {
  Index nPos = 0;
  Index nNeg = 0;
};

// Relative threshold below which a singular value counts as zero in matrix_sign.
inline constexpr double kDefaultSignRankTolerance = 1e-12;

namespace detail {

// Flips each column so its largest-|.| entry is positive; first index wins ties.
inline void fix_column_signs(Matrix& u) {
  for (Index c = 0; c < u.cols(); ++c) {
    Index best = 0;
    double bestAbs = -1.0;
    for (Index r = 0; r < u.rows(); ++r) {
      const double a = std::abs(u(r, c));
      if (a > bestAbs) {
        bestAbs = a;
        best = r;
      }
    }
    if (u(best, c) < 0.0) u.col(c) = -u.col(c);
  }
}

// Magnitude under which a computed eigenvalue is treated as zero.
inline double zero_eigenvalue_threshold(const Vector& ascendingValues, Index n) {
  const double radius =
      std::max(std::abs(ascendingValues(0)), std::abs(ascendingValues(ascendingValues.size() - 1)));
  return 64.0 * static_cast<double>(n) * std::numeric_limits<double>::epsilon() * radius;
}

}  // namespace detail

/// Computes the nPos algebraically largest and nNeg algebraically smallest
/// eigenpairs of m.
///
/// The matrix is reduced to tridiagonal form once; the full spectrum is then
/// computed from the tridiagonal and eigenvectors are formed only for the
/// selected pairs.
///
/// Throws DimensionError when nPos + nNeg exceeds n (or is zero), and
/// SpectrumError when a retained "positive" eigenvalue is not positive or a
/// retained "negative" one is not negative. Eigenvalues within a few ulps of
/// the spectral radius of zero count as zero.
inline SignedEigenPair signed_truncated_eig(const DenseSymMatrix& m, Index nPos, Index nNeg) {
  const Index n = m.n();
  if (nPos < 0 || nNeg < 0 || nPos + nNeg == 0 || nPos + nNeg > n) {
    throw DimensionError("signed_truncated_eig: requested (nPos=" + std::to_string(nPos) +
                         ", nNeg=" + std::to_string(nNeg) + ") for n=" + std::to_string(n));
  }
  const detail::Tridiagonal tri = detail::tridiagonalize(m.matrix());
  const Vector all = detail::tridiagonal_eigenvalues(tri);
  const double zeroTol = detail::zero_eigenvalue_threshold(all, n);

  SignedEigenPair out;
  out.nPos = nPos;
  out.nNeg = nNeg;
  if (nPos > 0) {
    if (!(all(n - nPos) > zeroTol)) {
      throw SpectrumError("signed_truncated_eig: eigenvalue #" + std::to_string(nPos) +
                          " from the top is " + std::to_string(all(n - nPos)) +
                          ", not positive; rank split is misspecified");
    }
    Vector vals;
    Matrix vecs;
    detail::eigenpairs_in_range(tri, n - nPos, n - 1, vals, vecs);
    out.sPlus = vals.reverse();
    out.uPlus = vecs.rowwise().reverse();
    detail::fix_column_signs(out.uPlus);
  } else {
    out.sPlus.resize(0);
    out.uPlus.resize(n, 0);
  }
  if (nNeg > 0) {
    if (!(all(nNeg - 1) < -zeroTol)) {
      throw SpectrumError("signed_truncated_eig: eigenvalue #" + std::to_string(nNeg) +
                          " from the bottom is " + std::to_string(all(nNeg - 1)) +
                          ", not negative; rank split is misspecified");
    }
    Vector vals;
    Matrix vecs;
    detail::eigenpairs_in_range(tri, 0, nNeg - 1, vals, vecs);
    out.sMinus = vals.reverse();
    out.uMinus = vecs.rowwise().reverse();
    detail::fix_column_signs(out.uMinus);
  } else {
    out.sMinus.resize(0);
    out.uMinus.resize(n, 0);
  }
  return out;
}

/// Rank split from the signs of the d largest-magnitude eigenvalues.
inline RankSplit infer_rank_split(const DenseSymMatrix& m, Index d) {
  const Index n = m.n();
  if (d < 1 || d > n) {
    throw DimensionError("infer_rank_split: d=" + std::to_string(d) + " for n=" + std::to_string(n));
  }
  const Vector all = detail::tridiagonal_eigenvalues(detail::tridiagonalize(m.matrix()));
  // Walk inward from both ends of the ascending spectrum.
  Index lo = 0;
  Index hi = n - 1;
  RankSplit split;
  for (Index k = 0; k < d; ++k) {
    if (std::abs(all(hi)) >= std::abs(all(lo))) {
      if (all(hi) > 0.0) ++split.nPos; else ++split.nNeg;
      --hi;
    } else {
      if (all(lo) < 0.0) ++split.nNeg; else ++split.nPos;
      ++lo;
    }
  }
  return split;
}

inline SignedEigenPair signed_truncated_eig(const DenseSymMatrix& m, Index d) {
  const RankSplit split = infer_rank_split(m, d);
  return signed_truncated_eig(m, split.nPos, split.nNeg);
}

/// Orthogonal polar factor W1 W2^T of c = W1 diag(sigma) W2^T, the maximizer of
/// trace(W^T c) over orthogonal W. residual is ||c - W||_F.
inline OrthogonalAligner matrix_sign(const Matrix& c, double relTol = kDefaultSignRankTolerance) {
  if (c.rows() != c.cols() || c.rows() == 0) {
    throw DimensionError("matrix_sign: expected a non-empty square matrix");
  }
  Eigen::JacobiSVD<Matrix> svd(c, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Vector& sv = svd.singularValues();
  const double largest = sv(0);
  const double smallest = sv(sv.size() - 1);
  if (!(largest > 0.0) || smallest <= relTol * largest) {
    throw RankError("matrix_sign: argument is numerically singular (sigma_min=" +
                    std::to_string(smallest) + ", sigma_max=" + std::to_string(largest) + ")");
  }
  OrthogonalAligner out;
  out.w = svd.matrixU() * svd.matrixV().transpose();
  out.residual = (c - out.w).norm();
  return out;
}

/// Orthogonal W minimizing ||source W - target||_F.
inline OrthogonalAligner procrustes_align(const Matrix& source, const Matrix& target,
                                          double relTol = kDefaultSignRankTolerance) {
  if (source.rows() != target.rows() || source.cols() != target.cols()) {
    throw DimensionError("procrustes_align: source and target shapes differ");
  }
  OrthogonalAligner out = matrix_sign(source.transpose() * target, relTol);
  out.residual = (source * out.w - target).norm();
  return out;
}

/// Maximum Euclidean row norm.
inline double two_to_infinity_norm(const Matrix& m) {
  if (m.rows() == 0 || m.cols() == 0) return 0.0;
  return m.rowwise().norm().maxCoeff();
}

/// (1/n) X^T X
inline Matrix delta_matrix(const Matrix& x) {
  if (x.rows() == 0) throw DimensionError("delta_matrix: empty matrix");
  Matrix d = (x.transpose() * x) / static_cast<double>(x.rows());
  return 0.5 * (d + d.transpose());
}

}  // namespace entrywise
