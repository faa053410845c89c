#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <memory>
#include <optional>
#include <string>

#include "entrywise/csv.hpp"
#include "entrywise/errors.hpp"
#include "entrywise/model.hpp"
#include "entrywise/spectral_core.hpp"
#include "entrywise/types.hpp"

namespace entrywise {

enum class EmbeddingKind { Scaled, Unscaled, Refined };

inline const char* to_string(EmbeddingKind k) {
  switch (k) {
    case EmbeddingKind::Scaled: return "scaled";
    case EmbeddingKind::Unscaled: return "unscaled";
    case EmbeddingKind::Refined: return "refined";
  }
  return "?";
}

struct Embedding {
  Matrix coords;  // n x d
  EmbeddingKind kind = EmbeddingKind::Scaled;
  Index nPos = 0;
  Index nNeg = 0;
  std::shared_ptr<const SignedEigenPair> sourceEig;

  Index n() const noexcept { return coords.rows(); }
  Index d() const noexcept { return coords.cols(); }
};

enum class CovarianceSource { Theoretical, Plugin };

struct CovarianceEstimate {
  Matrix sigma;
  std::optional<Matrix> gamma;
  std::optional<Matrix> gInfo;
  Index vertex = 0;
  CovarianceSource source = CovarianceSource::Theoretical;
  bool flagged = false;  // sigma not numerically positive definite
};

struct ClampOptions {
  double epsClip = 1e-3;
  double maxClipFraction = 0.05;
};

inline constexpr double kFisherConditionLimit = 1e12;

namespace detail {

inline double clamp_probability(double q, double eps) { return std::clamp(q, eps, 1.0 - eps); }

inline Matrix symmetrize(const Matrix& m) { return 0.5 * (m + m.transpose()); }

// Inverse of a symmetric positive definite matrix; throws SingularError otherwise.
inline Matrix spd_inverse(const Matrix& m, const char* what) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(m));
  const Vector& ev = es.eigenvalues();
  if (!(ev(0) > 1e-14 * std::max(1.0, std::abs(ev(ev.size() - 1))))) {
    throw SingularError(std::string(what) + ": matrix is not positive definite (smallest eigenvalue " +
                        std::to_string(ev(0)) + ")");
  }
  return symmetrize(es.eigenvectors() * ev.cwiseInverse().asDiagonal() *
                    es.eigenvectors().transpose());
}

inline Matrix spd_power(const Matrix& m, double power) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(m));
  const Vector ev = es.eigenvalues().array().pow(power).matrix();
  return symmetrize(es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose());
}

inline bool positive_definite(const Matrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(m), Eigen::EigenvaluesOnly);
  return es.eigenvalues()(0) > 0.0;
}

inline void require_vertex(Index i, Index n, const char* what) {
  if (i < 0 || i >= n) {
    throw DimensionError(std::string(what) + ": vertex " + std::to_string(i) + " out of range [0, " +
                         std::to_string(n) + ")");
  }
}

// Signature weights (+1 for the positive part, -1 for the negative part).
inline Vector signature(Index nPos, Index nNeg) {
  Vector s(nPos + nNeg);
  s.head(nPos).setOnes();
  s.tail(nNeg).setConstant(-1.0);
  return s;
}

}  // namespace detail

/// Embedding from an already computed eigendecomposition.
inline Embedding embed_from_eig(std::shared_ptr<const SignedEigenPair> eig, EmbeddingKind kind) {
  Embedding e;
  e.kind = kind;
  e.nPos = eig->nPos;
  e.nNeg = eig->nNeg;
  e.coords = eig->vectors();
  if (kind == EmbeddingKind::Scaled) {
    const Vector scale = eig->values().cwiseAbs().cwiseSqrt();
    e.coords = e.coords * scale.asDiagonal();
  }
  e.sourceEig = std::move(eig);
  return e;
}

/// Rows of [U_{A+} |S_{A+}|^{1/2}, U_{A-} |S_{A-}|^{1/2}].
inline Embedding ase_embed(const DenseSymMatrix& a, Index nPos, Index nNeg) {
  return embed_from_eig(std::make_shared<const SignedEigenPair>(signed_truncated_eig(a, nPos, nNeg)),
                        EmbeddingKind::Scaled);
}

inline Embedding ase_embed(const SymObservation& obs, Index nPos, Index nNeg) {
  return ase_embed(obs.a, nPos, nNeg);
}

/// Rows of [U_{A+}, U_{A-}].
inline Embedding unscaled_embed(const DenseSymMatrix& a, Index nPos, Index nNeg) {
  return embed_from_eig(std::make_shared<const SignedEigenPair>(signed_truncated_eig(a, nPos, nNeg)),
                        EmbeddingKind::Unscaled);
}

inline Embedding unscaled_embed(const SymObservation& obs, Index nPos, Index nNeg) {
  return unscaled_embed(obs.a, nPos, nNeg);
}

struct ScoreFisher {
  Vector score;
  Matrix fisher;
  Index clamped = 0;
};

/// Gradient and Fisher information of the row-i Bernoulli log-likelihood
/// sum_j A_ij log(rho x_i^T x_j) + (1 - A_ij) log(1 - rho x_i^T x_j) at the
/// latent positions.
inline ScoreFisher score_and_fisher(const LatentPositions& lat, const DenseSymMatrix& a, Index i,
                                    const ClampOptions& opt = {}) {
  const Index n = lat.n();
  if (a.n() != n) throw DimensionError("score_and_fisher: observation and latent sizes differ");
  detail::require_vertex(i, n, "score_and_fisher");
  const Matrix& x = lat.x();
  const double rho = lat.rho();
  const Vector q = x * x.row(i).transpose();
  ScoreFisher out;
  Vector w(n);
  Vector r(n);
  for (Index j = 0; j < n; ++j) {
    double qc = q(j);
    if (qc < opt.epsClip || qc > 1.0 - opt.epsClip) {
      ++out.clamped;
      qc = detail::clamp_probability(qc, opt.epsClip);
    }
    w(j) = 1.0 / (qc * (1.0 - rho * qc));
    r(j) = (a(i, j) - rho * q(j)) * w(j);
  }
  if (static_cast<double>(out.clamped) > opt.maxClipFraction * static_cast<double>(n)) {
    throw DomainError("score_and_fisher: " + std::to_string(out.clamped) + " of " +
                      std::to_string(n) + " inner products needed clamping at vertex " +
                      std::to_string(i));
  }
  out.score = x.transpose() * r;
  out.fisher = detail::symmetrize(rho * (x.transpose() * w.asDiagonal() * x));
  return out;
}

/// One Newton step per vertex on the Bernoulli likelihood, started at the
/// scaled embedding. With a negative part the inner products use the
/// indefinite signature.
inline Embedding one_step_refine(const DenseSymMatrix& a, const Embedding& emb,
                                 const ClampOptions& opt = {}) {
  if (emb.kind != EmbeddingKind::Scaled) {
    throw ConfigError("one_step_refine: expects a scaled embedding, got " +
                      std::string(to_string(emb.kind)));
  }
  const Index n = emb.n();
  const Index d = emb.d();
  if (a.n() != n) throw DimensionError("one_step_refine: observation and embedding sizes differ");
  const Matrix& xt = emb.coords;
  const Matrix xs = xt * detail::signature(emb.nPos, emb.nNeg).asDiagonal();
  const Matrix& am = a.matrix();

  Embedding out = emb;
  out.kind = EmbeddingKind::Refined;
  Vector w(n);
  Vector r(n);
  for (Index i = 0; i < n; ++i) {
    const Vector q = xs * xt.row(i).transpose();
    for (Index j = 0; j < n; ++j) {
      const double qc = detail::clamp_probability(q(j), opt.epsClip);
      w(j) = 1.0 / (qc * (1.0 - qc));
      r(j) = (am(j, i) - q(j)) * w(j);
    }
    const Matrix h = detail::symmetrize(xs.transpose() * w.asDiagonal() * xs);
    const Vector g = xs.transpose() * r;
    Eigen::SelfAdjointEigenSolver<Matrix> es(h, Eigen::EigenvaluesOnly);
    const double lo = es.eigenvalues()(0);
    const double hi = es.eigenvalues()(d - 1);
    if (!(lo > 0.0) || hi / lo > kFisherConditionLimit) {
      throw SingularFisherError("one_step_refine: Fisher matrix at vertex " + std::to_string(i) +
                                " has eigenvalues in [" + std::to_string(lo) + ", " +
                                std::to_string(hi) + "]");
    }
    out.coords.row(i) = xt.row(i) + h.llt().solve(g).transpose();
  }
  return out;
}

inline Embedding one_step_refine(const SymObservation& obs, const Embedding& emb,
                                 const ClampOptions& opt = {}) {
  return one_step_refine(obs.a, emb, opt);
}

/// Sigma_n(x_i) = D^{-1} [(1/n) sum_j q_ij (1 - rho q_ij) x_j x_j^T] D^{-1}, D = X^T X / n,
/// and Gamma_n = D^{-1/2} Sigma_n D^{-1/2}.
inline CovarianceEstimate theoretical_sigma_rdpg(const LatentPositions& lat, Index i) {
  detail::require_vertex(i, lat.n(), "theoretical_sigma_rdpg");
  const Matrix& x = lat.x();
  const double rho = lat.rho();
  const double nd = static_cast<double>(lat.n());
  const Matrix delta = delta_matrix(x);
  const Matrix deltaInv = detail::spd_inverse(delta, "theoretical_sigma_rdpg");
  const Vector q = x * x.row(i).transpose();
  const Vector w = (q.array() * (1.0 - rho * q.array())).matrix();
  const Matrix middle = (x.transpose() * w.asDiagonal() * x) / nd;
  CovarianceEstimate c;
  c.vertex = i;
  c.source = CovarianceSource::Theoretical;
  c.sigma = detail::symmetrize(deltaInv * middle * deltaInv);
  const Matrix half = detail::spd_power(delta, -0.5);
  c.gamma = detail::symmetrize(half * c.sigma * half);
  c.flagged = !detail::positive_definite(c.sigma);
  return c;
}

/// Sigma_n for the noisy masked model:
/// D^{-1} {(1/n) sum_j [(1 - rho) q_ij^2 + tau^2 rho^3] x_j x_j^T} D^{-1}.
inline CovarianceEstimate theoretical_sigma_snmc(const LatentPositions& lat, double tau, Index i) {
  detail::require_vertex(i, lat.n(), "theoretical_sigma_snmc");
  const Matrix& x = lat.x();
  const double rho = lat.rho();
  const double nd = static_cast<double>(lat.n());
  const Matrix delta = delta_matrix(x);
  const Matrix deltaInv = detail::spd_inverse(delta, "theoretical_sigma_snmc");
  const Vector q = x * x.row(i).transpose();
  const Vector w = ((1.0 - rho) * q.array().square() + tau * tau * rho * rho * rho).matrix();
  const Matrix middle = (x.transpose() * w.asDiagonal() * x) / nd;
  CovarianceEstimate c;
  c.vertex = i;
  c.sigma = detail::symmetrize(deltaInv * middle * deltaInv);
  const Matrix half = detail::spd_power(delta, -0.5);
  c.gamma = detail::symmetrize(half * c.sigma * half);
  c.flagged = !detail::positive_definite(c.sigma);
  return c;
}

/// G_n(x_i) = (1/n) sum_j x_j x_j^T / (q_ij (1 - rho q_ij)); sigma holds G_n^{-1}.
inline CovarianceEstimate theoretical_g(const LatentPositions& lat, Index i) {
  detail::require_vertex(i, lat.n(), "theoretical_g");
  const Matrix& x = lat.x();
  const double rho = lat.rho();
  const Vector q = x * x.row(i).transpose();
  const Vector w = (q.array() * (1.0 - rho * q.array())).inverse().matrix();
  if (!w.allFinite()) {
    throw SingularError("theoretical_g: zero inner product at vertex " + std::to_string(i));
  }
  CovarianceEstimate c;
  c.vertex = i;
  c.gInfo = detail::symmetrize((x.transpose() * w.asDiagonal() * x) / static_cast<double>(lat.n()));
  c.sigma = detail::spd_inverse(*c.gInfo, "theoretical_g");
  return c;
}

/// Plug-in Sigma built from the scaled embedding alone. With symmetric=false
/// the right factor is Dt instead of Dt^{-1}.
inline CovarianceEstimate plugin_sigma(const Embedding& emb, Index i, bool symmetric = true,
                                       const ClampOptions& opt = {}) {
  if (emb.kind != EmbeddingKind::Scaled) throw ConfigError("plugin_sigma: expects a scaled embedding");
  detail::require_vertex(i, emb.n(), "plugin_sigma");
  const Matrix& xt = emb.coords;
  const Matrix delta = delta_matrix(xt);
  const Matrix deltaInv = detail::spd_inverse(delta, "plugin_sigma");
  const Vector q = xt * xt.row(i).transpose();
  Vector w(q.size());
  for (Index j = 0; j < q.size(); ++j) {
    const double qc = detail::clamp_probability(q(j), opt.epsClip);
    w(j) = qc * (1.0 - qc);
  }
  const Matrix middle = (xt.transpose() * w.asDiagonal() * xt) / static_cast<double>(emb.n());
  CovarianceEstimate c;
  c.vertex = i;
  c.source = CovarianceSource::Plugin;
  c.sigma = symmetric ? detail::symmetrize(deltaInv * middle * deltaInv)
                      : Matrix(deltaInv * middle * delta);
  c.flagged = !detail::positive_definite(c.sigma);
  return c;
}

/// Plug-in G: (1/n) sum_j xt_j xt_j^T / (q_ij (1 - q_ij)) with q_ij = xt_i^T xt_j.
inline CovarianceEstimate plugin_g(const Embedding& emb, Index i, const ClampOptions& opt = {}) {
  if (emb.kind != EmbeddingKind::Scaled) throw ConfigError("plugin_g: expects a scaled embedding");
  detail::require_vertex(i, emb.n(), "plugin_g");
  const Matrix& xt = emb.coords;
  const Vector q = xt * xt.row(i).transpose();
  Vector w(q.size());
  for (Index j = 0; j < q.size(); ++j) {
    const double qc = detail::clamp_probability(q(j), opt.epsClip);
    w(j) = 1.0 / (qc * (1.0 - qc));
  }
  CovarianceEstimate c;
  c.vertex = i;
  c.source = CovarianceSource::Plugin;
  c.gInfo = detail::symmetrize((xt.transpose() * w.asDiagonal() * xt) / static_cast<double>(emb.n()));
  c.sigma = detail::spd_inverse(*c.gInfo, "plugin_g");
  return c;
}

/// Columns: vertex, coord, value, kind (vertex and coord 1-based).
inline std::string embedding_csv(const Embedding& emb) {
  CsvWriter w("vertex,coord,value,kind");
  const char* kind = to_string(emb.kind);
  for (Index i = 0; i < emb.n(); ++i) {
    for (Index k = 0; k < emb.d(); ++k) w.row(i + 1, k + 1, emb.coords(i, k), kind);
  }
  return w.str();
}

}  // namespace entrywise
