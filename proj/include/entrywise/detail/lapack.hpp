#pragma once

// Thin wrappers over the LAPACK routines used for the symmetric eigenproblem:
// Householder tridiagonalization (dsytrd), MRRR on the tridiagonal (dstemr),
// eigenvalues only (dsterf), and the back-transformation (dormtr).

#include <lapacke.h>

#include <string>
#include <vector>

#include "entrywise/errors.hpp"
#include "entrywise/types.hpp"

namespace entrywise::detail {

struct Tridiagonal {
  Matrix reflectors;         // dsytrd output (lower storage), consumed by dormtr
  std::vector<double> diag;  // n
  std::vector<double> off;   // n - 1
  std::vector<double> tau;   // n - 1
};

inline void check_info(lapack_int info, const char* routine) {
  if (info != 0) {
    throw SpectrumError(std::string(routine) + " failed with info=" + std::to_string(info));
  }
}

inline Tridiagonal tridiagonalize(const Matrix& sym) {
  const auto n = static_cast<lapack_int>(sym.rows());
  Tridiagonal t;
  t.reflectors = sym;
  t.diag.resize(n);
  t.off.resize(n > 1 ? n - 1 : 1);
  t.tau.resize(n > 1 ? n - 1 : 1);
  check_info(LAPACKE_dsytrd(LAPACK_COL_MAJOR, 'L', n, t.reflectors.data(), n, t.diag.data(),
                            t.off.data(), t.tau.data()),
             "dsytrd");
  return t;
}

/// All eigenvalues of the tridiagonal, ascending.
inline Vector tridiagonal_eigenvalues(const Tridiagonal& t) {
  const auto n = static_cast<lapack_int>(t.diag.size());
  std::vector<double> d = t.diag;
  std::vector<double> e = t.off;
  check_info(LAPACKE_dsterf(n, d.data(), e.data()), "dsterf");
  return Eigen::Map<Vector>(d.data(), n);
}

/// Eigenpairs with ascending index range [lo, hi] (0-based, inclusive) of the
/// original matrix. Eigenvalues come back ascending.
inline void eigenpairs_in_range(const Tridiagonal& t, Index lo, Index hi, Vector& values,
                                Matrix& vectors) {
  const auto n = static_cast<lapack_int>(t.diag.size());
  const auto count = static_cast<lapack_int>(hi - lo + 1);
  std::vector<double> d = t.diag;
  std::vector<double> e(n, 0.0);
  std::copy(t.off.begin(), t.off.begin() + (n - 1), e.begin());
  std::vector<double> w(n);
  Matrix z(n, count);
  if (n <= 2) {
    // dstemr's 2x2 shortcut ignores the requested index order in some LAPACK releases.
    Matrix tri = Matrix::Zero(n, n);
    for (lapack_int k = 0; k < n; ++k) tri(k, k) = d[k];
    if (n == 2) tri(0, 1) = tri(1, 0) = e[0];
    const Eigen::SelfAdjointEigenSolver<Matrix> es(tri);
    for (lapack_int k = 0; k < count; ++k) w[k] = es.eigenvalues()(lo + k);
    z = es.eigenvectors().middleCols(lo, count);
  } else {
    std::vector<lapack_int> support(2 * static_cast<std::size_t>(count));
    lapack_int found = 0;
    lapack_logical tryrac = 1;
    check_info(LAPACKE_dstemr(LAPACK_COL_MAJOR, 'V', 'I', n, d.data(), e.data(), 0.0, 0.0,
                              static_cast<lapack_int>(lo + 1), static_cast<lapack_int>(hi + 1),
                              &found, w.data(), z.data(), n, count, support.data(), &tryrac),
               "dstemr");
    if (found != count) {
      throw SpectrumError("dstemr returned " + std::to_string(found) + " of " +
                          std::to_string(count) + " requested eigenpairs");
    }
  }
  if (n > 1) {
    check_info(LAPACKE_dormtr(LAPACK_COL_MAJOR, 'L', 'L', 'N', n, count, t.reflectors.data(), n,
                              t.tau.data(), z.data(), n),
               "dormtr");
  }
  values = Eigen::Map<Vector>(w.data(), count);
  vectors = std::move(z);
}

}  // namespace entrywise::detail
