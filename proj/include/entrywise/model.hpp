#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "entrywise/errors.hpp"
#include "entrywise/rng.hpp"
#include "entrywise/types.hpp"

namespace entrywise {

namespace detail {
inline constexpr double kProbabilitySlack = 1e-12;
}

/// Latent position matrix X (rows x_i), sparsity factor rho and an optional
/// separation bound delta. Every pairwise inner product must lie in [0, 1],
/// and in [delta, 1 - delta] when delta is given.
class LatentPositions {
 public:
  LatentPositions() = default;

  LatentPositions(Matrix x, double rho, std::optional<double> delta = std::nullopt)
      : x_(std::move(x)), rho_(rho), delta_(delta) {
    if (x_.rows() < 1 || x_.cols() < 1) throw DimensionError("LatentPositions: empty X");
    if (!(rho_ > 0.0 && rho_ <= 1.0)) {
      throw ProbabilityError("LatentPositions: rho=" + std::to_string(rho_) + " not in (0, 1]");
    }
    const Matrix gram = x_ * x_.transpose();
    const double lo = delta_ ? *delta_ : 0.0;
    const double hi = delta_ ? 1.0 - *delta_ : 1.0;
    const double minIp = gram.minCoeff();
    const double maxIp = gram.maxCoeff();
    if (minIp < lo - detail::kProbabilitySlack || maxIp > hi + detail::kProbabilitySlack) {
      throw ProbabilityError("LatentPositions: inner products span [" + std::to_string(minIp) +
                             ", " + std::to_string(maxIp) + "], outside [" + std::to_string(lo) +
                             ", " + std::to_string(hi) + "]");
    }
  }

  const Matrix& x() const noexcept { return x_; }
  double rho() const noexcept { return rho_; }
  const std::optional<double>& delta() const noexcept { return delta_; }
  Index n() const noexcept { return x_.rows(); }
  Index d() const noexcept { return x_.cols(); }

  /// rho^{1/2} X, the target of the scaled spectral embedding.
  Matrix scaled() const { return std::sqrt(rho_) * x_; }
  /// rho X X^T
  DenseSymMatrix probabilities() const { return DenseSymMatrix(rho_ * (x_ * x_.transpose())); }

 private:
  Matrix x_;
  double rho_ = 1.0;
  std::optional<double> delta_;
};

struct GroundTruth {
  DenseSymMatrix p;  // mean of the observed matrix
  LatentPositions latent;
};

/// Observed symmetric matrix with optional generating truth.
struct SymObservation {
  DenseSymMatrix a;
  std::optional<GroundTruth> truth;
  std::uint64_t seed = 0;

  Index n() const noexcept { return a.n(); }
};

struct SamplerOptions {
  bool hollow = false;  // zero the diagonal (loop-free graphs)
};

/// Two equal blocks, within-block probability rho*a, between-block rho*b.
struct TwoBlockSbmSpec {
  Index n = 0;
  double a = 0.9;
  double b = 0.05;
  double rho = 1.0;
};

/// Rank-one two-block model with block matrix rho [p^2 pq; pq q^2].
struct Rank1SbmSpec {
  Index n = 0;
  double p = 0.95;
  double q = 0.3;
  double rho = 1.0;
};

struct MmsbmSpec {
  Matrix theta;  // n x d, rows on the probability simplex
  Matrix xStar;  // d x d, B = xStar xStar^T
  double rho = 1.0;

  Matrix block_matrix() const { return xStar * xStar.transpose(); }
  Matrix latent() const { return theta * xStar; }

  void validate() const {
    if (theta.cols() != xStar.rows() || xStar.rows() != xStar.cols() || theta.rows() < 1) {
      throw DimensionError("MmsbmSpec: theta is " + std::to_string(theta.rows()) + "x" +
                           std::to_string(theta.cols()) + ", xStar is " +
                           std::to_string(xStar.rows()) + "x" + std::to_string(xStar.cols()));
    }
    if ((theta.array() < 0.0).any()) throw ConfigError("MmsbmSpec: negative membership weight");
    const Vector sums = theta.rowwise().sum();
    if (((sums.array() - 1.0).abs() > 1e-12).any()) {
      throw ConfigError("MmsbmSpec: membership rows must sum to 1");
    }
    const Matrix b = block_matrix();
    if ((b.array() <= 0.0).any() || (b.array() >= 1.0).any()) {
      throw ProbabilityError("MmsbmSpec: block probabilities must lie in (0, 1)");
    }
    if (!(rho > 0.0 && rho <= 1.0)) throw ProbabilityError("MmsbmSpec: rho not in (0, 1]");
  }
};

/// Noisy masked low-rank model: A_ij = (rho x_i^T x_j + eps_ij) I_ij / rho with
/// I_ij ~ Bernoulli(rho), eps_ij ~ N(0, sigma^2), sigma = tau rho^2.
struct SnmcSpec {
  LatentPositions latent;
  double rho = 1.0;
  double sigma = 0.0;
  double tau = 0.0;

  static SnmcSpec make(LatentPositions lat, double tau) {
    SnmcSpec s;
    s.rho = lat.rho();
    s.tau = tau;
    s.sigma = tau * s.rho * s.rho;
    s.latent = std::move(lat);
    s.validate();
    return s;
  }

  void validate() const {
    if (!(rho > 0.0 && rho <= 1.0)) throw ProbabilityError("SnmcSpec: rho not in (0, 1]");
    if (tau < 0.0) throw ConfigError("SnmcSpec: tau must be non-negative");
    if (std::abs(sigma - tau * rho * rho) > 1e-12) {
      throw ConfigError("SnmcSpec: sigma must equal tau * rho^2");
    }
    if (std::abs(latent.rho() - rho) > 0.0) {
      throw ConfigError("SnmcSpec: latent positions carry a different rho");
    }
  }
};

/// rho = c (log n)^k / n
inline double sparsity_from_rule(Index n, double c, double k) {
  if (n < 2) throw ConfigError("sparsity_from_rule: n must be at least 2");
  const double rho = c * std::pow(std::log(static_cast<double>(n)), k) / static_cast<double>(n);
  if (!(rho > 0.0 && rho <= 1.0)) {
    throw ConfigError("sparsity_from_rule: rule gives rho=" + std::to_string(rho) +
                      ", outside (0, 1]");
  }
  return rho;
}

/// Bernoulli graph with edge probabilities rho x_i^T x_j, diagonal included.
/// Draws run over the upper triangle in column-major order (i <= j).
inline SymObservation sample_rdpg(const LatentPositions& lat, std::uint64_t seed,
                                  const SamplerOptions& options = {}) {
  const Index n = lat.n();
  DenseSymMatrix p = lat.probabilities();
  const Matrix& pm = p.matrix();
  Matrix a(n, n);
  Rng rng(seed);
  for (Index j = 0; j < n; ++j) {
    for (Index i = 0; i <= j; ++i) {
      double prob = pm(i, j);
      if (prob < -detail::kProbabilitySlack || prob > 1.0 + detail::kProbabilitySlack) {
        throw ProbabilityError("sample_rdpg: edge probability " + std::to_string(prob) + " at (" +
                               std::to_string(i) + ", " + std::to_string(j) + ")");
      }
      const double v = rng.bernoulli(prob) ? 1.0 : 0.0;
      a(i, j) = v;
      a(j, i) = v;
    }
  }
  if (options.hollow) a.diagonal().setZero();
  SymObservation obs{DenseSymMatrix::from_symmetric(std::move(a)),
                     GroundTruth{std::move(p), lat}, seed};
  return obs;
}

/// Mixed-membership graph; identical to sample_rdpg on Theta X* with the same seed.
inline SymObservation sample_mmsbm(const MmsbmSpec& spec, std::uint64_t seed,
                                   const SamplerOptions& options = {}) {
  spec.validate();
  return sample_rdpg(LatentPositions(spec.latent(), spec.rho), seed, options);
}

/// Masked, noisy observation. E[A] = rho X X^T, stored as the truth mean.
inline SymObservation sample_snmc(const SnmcSpec& spec, std::uint64_t seed,
                                  const SamplerOptions& options = {}) {
  spec.validate();
  const LatentPositions& lat = spec.latent;
  const Index n = lat.n();
  const Matrix inner = lat.x() * lat.x().transpose();
  Matrix a(n, n);
  Rng rng(seed);
  for (Index j = 0; j < n; ++j) {
    for (Index i = 0; i <= j; ++i) {
      double v = 0.0;
      if (rng.bernoulli(spec.rho)) {
        v = inner(i, j);
        if (spec.sigma > 0.0) v += spec.sigma * rng.normal() / spec.rho;
      }
      a(i, j) = v;
      a(j, i) = v;
    }
  }
  if (options.hollow) a.diagonal().setZero();
  return SymObservation{DenseSymMatrix::from_symmetric(std::move(a)),
                        GroundTruth{lat.probabilities(), lat}, seed};
}

struct TwoBlockTruth {
  LatentPositions latent;
  DenseSymMatrix p;
  Vector eigenvalues;          // (lambda1, lambda2)
  Matrix eigenvectors;         // [u1, u2]
  Matrix scaledEigenvectors;   // [v1, v2] = [lambda1^{1/2} u1, lambda2^{1/2} u2]
  double scaledVariance = 0.0;    // (a + b) / (a - b)
  double unscaledVariance = 0.0;  // 2 (a + b) / (a - b)^2
};

/// Closed-form truth for the equal-size two-block model (first n/2 vertices in
/// block one). Latent rows are (sqrt((a+b)/2), +-sqrt((a-b)/2)).
inline TwoBlockTruth two_block_truth(const TwoBlockSbmSpec& spec) {
  if (spec.n < 2 || spec.n % 2 != 0) {
    throw ConfigError("two_block_truth: n must be even, got " + std::to_string(spec.n));
  }
  if (!(spec.a > 0.0 && spec.a < 1.0 && spec.b > 0.0 && spec.b < 1.0)) {
    throw ConfigError("two_block_truth: a and b must lie in (0, 1)");
  }
  if (spec.a < spec.b) {
    throw ConfigError("two_block_truth: requires a >= b (positive semidefinite block matrix)");
  }
  const Index n = spec.n;
  const Index half = n / 2;
  const double c1 = std::sqrt((spec.a + spec.b) / 2.0);
  const double c2 = std::sqrt((spec.a - spec.b) / 2.0);
  Matrix x(n, 2);
  for (Index i = 0; i < n; ++i) {
    x(i, 0) = c1;
    x(i, 1) = i < half ? c2 : -c2;
  }
  const double nd = static_cast<double>(n);
  TwoBlockTruth t{LatentPositions(x, spec.rho), DenseSymMatrix(Matrix::Identity(1, 1)), Vector(2),
                  Matrix(n, 2), Matrix(n, 2), 0.0, 0.0};
  t.p = t.latent.probabilities();
  t.eigenvalues << nd * spec.rho * (spec.a + spec.b) / 2.0, nd * spec.rho * (spec.a - spec.b) / 2.0;
  const double inv = 1.0 / std::sqrt(nd);
  for (Index i = 0; i < n; ++i) {
    t.eigenvectors(i, 0) = inv;
    t.eigenvectors(i, 1) = i < half ? inv : -inv;
  }
  t.scaledEigenvectors.col(0) = std::sqrt(t.eigenvalues(0)) * t.eigenvectors.col(0);
  t.scaledEigenvectors.col(1) = std::sqrt(t.eigenvalues(1)) * t.eigenvectors.col(1);
  if (spec.a > spec.b) {
    t.scaledVariance = (spec.a + spec.b) / (spec.a - spec.b);
    t.unscaledVariance = 2.0 * (spec.a + spec.b) / ((spec.a - spec.b) * (spec.a - spec.b));
  } else {
    t.scaledVariance = std::numeric_limits<double>::infinity();
    t.unscaledVariance = std::numeric_limits<double>::infinity();
  }
  return t;
}

struct Rank1Truth {
  LatentPositions latent;
  DenseSymMatrix p;
  double lambda = 0.0;
  Vector uP;  // unit eigenvector x / ||x||
};

/// x = (p, ..., p, q, ..., q); the only non-zero eigenvalue is rho ||x||^2.
inline Rank1Truth rank1_sbm_truth(const Rank1SbmSpec& spec) {
  if (spec.n < 2 || spec.n % 2 != 0) {
    throw ConfigError("rank1_sbm_truth: n must be even, got " + std::to_string(spec.n));
  }
  if (!(spec.p > 0.0 && spec.p < 1.0 && spec.q > 0.0 && spec.q < 1.0)) {
    throw ConfigError("rank1_sbm_truth: p and q must lie in (0, 1)");
  }
  const Index half = spec.n / 2;
  Matrix x(spec.n, 1);
  x.topRows(half).setConstant(spec.p);
  x.bottomRows(spec.n - half).setConstant(spec.q);
  Rank1Truth t{LatentPositions(x, spec.rho), DenseSymMatrix(Matrix::Identity(1, 1)), 0.0, Vector()};
  t.p = t.latent.probabilities();
  const double sq = x.col(0).squaredNorm();
  t.lambda = spec.rho * sq;
  t.uP = x.col(0) / std::sqrt(sq);
  return t;
}

/// Two-community mixed-membership design: n0 pure nodes per community first,
/// then n - 2 n0 vertices with profiles (t, 1 - t), t equidistant on [0.2, 0.8]
/// and running from 0.8 down to 0.2, so distance to the first pure node grows
/// with the vertex index.
/// Pure nodes x1* = (sqrt(.5), sqrt(.4)), x2* = (sqrt(.5), -sqrt(.4)), giving
/// B with diagonal 0.9 and off-diagonal 0.1.
inline MmsbmSpec mixed_membership_design(Index n, Index n0, double rho) {
  if (n0 < 1 || 2 * n0 > n) {
    throw ConfigError("mixed_membership_design: need 1 <= n0 <= n/2, got n=" + std::to_string(n) +
                      ", n0=" + std::to_string(n0));
  }
  MmsbmSpec spec;
  spec.rho = rho;
  spec.xStar.resize(2, 2);
  spec.xStar << std::sqrt(0.5), std::sqrt(0.4), std::sqrt(0.5), -std::sqrt(0.4);
  spec.theta = Matrix::Zero(n, 2);
  spec.theta.block(0, 0, n0, 1).setOnes();
  spec.theta.block(n0, 1, n0, 1).setOnes();
  const Index mixed = n - 2 * n0;
  for (Index k = 0; k < mixed; ++k) {
    const double t =
        mixed == 1 ? 0.5 : 0.8 - 0.6 * static_cast<double>(k) / static_cast<double>(mixed - 1);
    spec.theta(2 * n0 + k, 0) = t;
    spec.theta(2 * n0 + k, 1) = 1.0 - t;
  }
  spec.validate();
  return spec;
}

}  // namespace entrywise
