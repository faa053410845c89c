#pragma once

#include <Eigen/LU>
#include <Eigen/SVD>

#include <algorithm>
#include <limits>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "entrywise/csv.hpp"
#include "entrywise/embedding.hpp"
#include "entrywise/errors.hpp"
#include "entrywise/types.hpp"

namespace entrywise {

inline constexpr double kDefaultEta = 0.1;

struct SpaResult {
  std::vector<Index> indices;  // in selection order
  std::vector<double> scores;  // deflated squared norm of each selected column
};

struct MembershipEstimate {
  Matrix thetaHat;
  std::vector<Index> spaIndices;
  std::vector<std::optional<Index>> iota;
  double eta = kDefaultEta;
  std::optional<std::vector<Index>> permutation;
};

/// Successive projection on R = U U^T: pick the column of largest squared norm,
/// project it out, repeat. R is carried implicitly as Z U^T with Z n x d, so
/// ||R e_j||^2 = u_j^T (Z^T Z) u_j.
inline SpaResult spa_select(const Matrix& uA, Index d) {
  const Index n = uA.rows();
  if (d < 1 || d > uA.cols() || d > n) {
    throw DimensionError("spa_select: d=" + std::to_string(d) + " with U of size " +
                         std::to_string(n) + "x" + std::to_string(uA.cols()));
  }
  constexpr double kTieTol = 1e-12;
  constexpr double kZeroTol = 1e-12;
  Matrix z = uA;
  SpaResult out;
  for (Index step = 0; step < d; ++step) {
    const Matrix ztz = z.transpose() * z;
    if (std::sqrt(std::max(ztz.trace(), 0.0)) <= kZeroTol) break;
    const Vector scores = ((uA * ztz).array() * uA.array()).rowwise().sum();
    const double best = scores.maxCoeff();
    Index pick = 0;
    while (scores(pick) < best - kTieTol * std::abs(best)) ++pick;
    out.indices.push_back(pick);
    out.scores.push_back(scores(pick));
    const Vector r = z * uA.row(pick).transpose();
    const double rr = r.squaredNorm();
    if (rr <= 0.0) break;
    z -= r * (r.transpose() * z) / rr;
  }
  if (static_cast<Index>(out.indices.size()) < d) {
    throw DegenerateError("spa_select: projector vanished after " +
                          std::to_string(out.indices.size()) + " of " + std::to_string(d) +
                          " selections");
  }
  return out;
}

/// Theta^ = U V^{-1} with V the rows of U indexed by J.
inline MembershipEstimate estimate_membership(const Matrix& uA, const std::vector<Index>& j) {
  const Index d = uA.cols();
  if (static_cast<Index>(j.size()) != d) {
    throw DimensionError("estimate_membership: need " + std::to_string(d) + " indices, got " +
                         std::to_string(j.size()));
  }
  Matrix v(d, d);
  for (Index k = 0; k < d; ++k) {
    detail::require_vertex(j[static_cast<std::size_t>(k)], uA.rows(), "estimate_membership");
    v.row(k) = uA.row(j[static_cast<std::size_t>(k)]);
  }
  Eigen::JacobiSVD<Matrix> svd(v);
  const Vector& sv = svd.singularValues();
  if (!(sv(d - 1) > 1e-12 * sv(0))) {
    throw SingularError("estimate_membership: V_A is singular (smallest singular value " +
                        std::to_string(sv(d - 1)) + ")");
  }
  MembershipEstimate est;
  est.thetaHat = uA * v.partialPivLu().inverse();
  est.spaIndices = j;
  return est;
}

/// iota_k = min{i : ||Theta^_i - e_k|| <= eta}, empty when no row qualifies.
inline std::vector<std::optional<Index>> pure_node_indices(const Matrix& thetaHat, double eta) {
  if (!(eta > 0.0)) throw ConfigError("pure_node_indices: eta must be positive");
  const Index d = thetaHat.cols();
  std::vector<std::optional<Index>> iota(static_cast<std::size_t>(d));
  for (Index k = 0; k < d; ++k) {
    for (Index i = 0; i < thetaHat.rows(); ++i) {
      Vector diff = thetaHat.row(i).transpose();
      diff(k) -= 1.0;
      if (diff.norm() <= eta) {
        iota[static_cast<std::size_t>(k)] = i;
        break;
      }
    }
  }
  return iota;
}

inline void pure_node_indices(MembershipEstimate& est, double eta) {
  est.eta = eta;
  est.iota = pure_node_indices(est.thetaHat, eta);
}

/// Column order perm minimizing ||Theta^ - Theta[:, perm]||_F, so that column k
/// of the estimate tracks true community perm[k].
inline std::vector<Index> align_permutation(const Matrix& thetaHat, const Matrix& thetaTrue) {
  const Index d = thetaHat.cols();
  if (thetaTrue.rows() != thetaHat.rows() || thetaTrue.cols() != d) {
    throw DimensionError("align_permutation: shapes differ");
  }
  if (d > 8) throw SizeError("align_permutation: d=" + std::to_string(d) + " exceeds 8");
  std::vector<Index> perm(static_cast<std::size_t>(d));
  std::iota(perm.begin(), perm.end(), Index{0});
  std::vector<Index> best = perm;
  double bestCost = std::numeric_limits<double>::infinity();
  do {
    double cost = 0.0;
    for (Index k = 0; k < d; ++k) {
      cost += (thetaHat.col(k) - thetaTrue.col(perm[static_cast<std::size_t>(k)])).squaredNorm();
    }
    if (cost < bestCost) {
      bestCost = cost;
      best = perm;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

struct PureNodeEstimates {
  Matrix scaled;   // row k: x~ at iota_k
  Matrix refined;  // row k: x^ at iota_k
};

inline PureNodeEstimates pure_node_estimates(const Embedding& scaled, const Embedding& refined,
                                             const std::vector<std::optional<Index>>& iota) {
  const auto d = static_cast<Index>(iota.size());
  PureNodeEstimates out{Matrix(d, scaled.d()), Matrix(d, refined.d())};
  for (Index k = 0; k < d; ++k) {
    const auto& idx = iota[static_cast<std::size_t>(k)];
    if (!idx) throw NotFoundError("pure_node_estimates: no pure node found for community " + std::to_string(k + 1));
    out.scaled.row(k) = scaled.coords.row(*idx);
    out.refined.row(k) = refined.coords.row(*idx);
  }
  return out;
}

/// Columns: vertex, community, weight (1-based).
inline std::string membership_csv(const Matrix& thetaHat) {
  CsvWriter w("vertex,community,weight");
  for (Index i = 0; i < thetaHat.rows(); ++i) {
    for (Index k = 0; k < thetaHat.cols(); ++k) w.row(i + 1, k + 1, thetaHat(i, k));
  }
  return w.str();
}

}  // namespace entrywise
