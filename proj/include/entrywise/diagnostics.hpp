#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "entrywise/csv.hpp"
#include "entrywise/embedding.hpp"
#include "entrywise/errors.hpp"
#include "entrywise/model.hpp"
#include "entrywise/spectral_core.hpp"
#include "entrywise/stats.hpp"

namespace entrywise {

struct DecompositionRecord {
  Index replicate = 0;
  Index vertex = 0;
  EmbeddingKind kind = EmbeddingKind::Scaled;
  Vector totalError;
  Vector linearTerm;
  Vector remainder;
  double remainderTwoInf = 0.0;
  Index n = 0;
};

/// Full first-order decomposition total = linear + remainder (n x d each)
/// together with per-vertex records for the requested vertices.
struct Decomposition {
  Matrix total;
  Matrix linear;
  Matrix remainder;
  Matrix w;
  double remainderTwoInf = 0.0;
  std::vector<DecompositionRecord> records;
};

namespace detail {

inline const GroundTruth& require_truth(const SymObservation& obs, const char* what) {
  if (!obs.truth) throw TruthMissingError(std::string(what) + ": observation carries no truth");
  return *obs.truth;
}

inline Matrix block_diag(const Matrix& a, const Matrix& b) {
  Matrix out = Matrix::Zero(a.rows() + b.rows(), a.cols() + b.cols());
  out.topLeftCorner(a.rows(), a.cols()) = a;
  out.bottomRightCorner(b.rows(), b.cols()) = b;
  return out;
}

inline void fill_records(Decomposition& dec, EmbeddingKind kind, const std::vector<Index>& vertices) {
  dec.remainder = dec.total - dec.linear;
  dec.remainderTwoInf = two_to_infinity_norm(dec.remainder);
  const Index n = dec.total.rows();
  std::vector<Index> which = vertices;
  if (which.empty()) {
    which.resize(static_cast<std::size_t>(n));
    for (Index i = 0; i < n; ++i) which[static_cast<std::size_t>(i)] = i;
  }
  dec.records.reserve(which.size());
  for (Index i : which) {
    require_vertex(i, n, "decompose");
    DecompositionRecord r;
    r.vertex = i;
    r.kind = kind;
    r.totalError = dec.total.row(i).transpose();
    r.linearTerm = dec.linear.row(i).transpose();
    r.remainder = dec.remainder.row(i).transpose();
    r.remainderTwoInf = dec.remainderTwoInf;
    r.n = n;
    dec.records.push_back(std::move(r));
  }
}

}  // namespace detail

/// X~ W - rho^{1/2} X = +-rho^{-1/2} E X+- (X+-^T X+-)^{-1} + remainder, with W
/// the Procrustes alignment within each sign block. Without a negative part
/// the truth's own X is the reference frame; otherwise the population
/// eigenvectors split it into X+ and X-.
inline Decomposition decompose_scaled(const SymObservation& obs, const Embedding& emb,
                                      const std::vector<Index>& vertices = {}) {
  const GroundTruth& truth = detail::require_truth(obs, "decompose_scaled");
  if (emb.kind != EmbeddingKind::Scaled) throw ConfigError("decompose_scaled: expects a scaled embedding");
  const double rho = truth.latent.rho();
  const double sr = std::sqrt(rho);
  const Matrix e = obs.a.matrix() - truth.p.matrix();

  Matrix xPos;
  Matrix xNeg;
  if (emb.nNeg == 0) {
    xPos = truth.latent.x();
    if (xPos.cols() != emb.d()) throw DimensionError("decompose_scaled: embedding and truth dimensions differ");
  } else {
    const Embedding pop = ase_embed(truth.p, emb.nPos, emb.nNeg);
    xPos = pop.coords.leftCols(emb.nPos) / sr;
    xNeg = pop.coords.rightCols(emb.nNeg) / sr;
  }

  Decomposition dec;
  const Index n = emb.n();
  dec.total.resize(n, emb.d());
  dec.linear.resize(n, emb.d());
  Matrix wPos(0, 0);
  Matrix wNeg(0, 0);
  if (emb.nPos > 0) {
    const Matrix src = emb.coords.leftCols(emb.nPos);
    wPos = procrustes_align(src, sr * xPos).w;
    dec.total.leftCols(emb.nPos) = src * wPos - sr * xPos;
    dec.linear.leftCols(emb.nPos) =
        (e * xPos) * (xPos.transpose() * xPos).inverse() / sr;
  }
  if (emb.nNeg > 0) {
    const Matrix src = emb.coords.rightCols(emb.nNeg);
    wNeg = procrustes_align(src, sr * xNeg).w;
    dec.total.rightCols(emb.nNeg) = src * wNeg - sr * xNeg;
    dec.linear.rightCols(emb.nNeg) =
        -(e * xNeg) * (xNeg.transpose() * xNeg).inverse() / sr;
  }
  dec.w = detail::block_diag(wPos, wNeg);
  detail::fill_records(dec, EmbeddingKind::Scaled, vertices);
  return dec;
}

/// U_A - U_P W* = E U_P S_P^{-1} W* + remainder, W* = sign(U_P^T U_A) per sign block.
inline Decomposition decompose_unscaled(const SymObservation& obs, const Embedding& emb,
                                        const std::vector<Index>& vertices = {}) {
  const GroundTruth& truth = detail::require_truth(obs, "decompose_unscaled");
  if (emb.kind != EmbeddingKind::Unscaled) {
    throw ConfigError("decompose_unscaled: expects an unscaled embedding");
  }
  const SignedEigenPair pop = signed_truncated_eig(truth.p, emb.nPos, emb.nNeg);
  const Matrix e = obs.a.matrix() - truth.p.matrix();
  Matrix wPos(0, 0);
  Matrix wNeg(0, 0);
  if (emb.nPos > 0) wPos = matrix_sign(pop.uPlus.transpose() * emb.coords.leftCols(emb.nPos)).w;
  if (emb.nNeg > 0) wNeg = matrix_sign(pop.uMinus.transpose() * emb.coords.rightCols(emb.nNeg)).w;
  Decomposition dec;
  dec.w = detail::block_diag(wPos, wNeg);
  const Matrix uP = pop.vectors();
  dec.total = emb.coords - uP * dec.w;
  dec.linear = e * uP * pop.values().cwiseInverse().asDiagonal() * dec.w;
  detail::fill_records(dec, EmbeddingKind::Unscaled, vertices);
  return dec;
}

struct RemainderProfile {
  FiveNumber remainderNorm;     // Euclidean norm of each record's remainder
  FiveNumber scaledTwoInf;      // sqrt(n) * remainderTwoInf per record
  Index count = 0;
};

inline RemainderProfile remainder_profile(const std::vector<DecompositionRecord>& records) {
  RemainderProfile p;
  p.count = static_cast<Index>(records.size());
  if (records.empty()) return p;
  std::vector<double> norms;
  std::vector<double> twoInf;
  norms.reserve(records.size());
  twoInf.reserve(records.size());
  for (const auto& r : records) {
    norms.push_back(r.remainder.norm());
    twoInf.push_back(std::sqrt(static_cast<double>(r.n)) * r.remainderTwoInf);
  }
  p.remainderNorm = five_number(std::move(norms));
  p.scaledTwoInf = five_number(std::move(twoInf));
  return p;
}

/// Columns: replicate, vertex, kind, coord, total, linear, remainder,
/// remainder_two_inf (vertex and coord 1-based).
inline std::string decomposition_csv(const std::vector<DecompositionRecord>& records) {
  CsvWriter w("replicate,vertex,kind,coord,total,linear,remainder,remainder_two_inf");
  for (const auto& r : records) {
    for (Index k = 0; k < r.totalError.size(); ++k) {
      w.row(r.replicate, r.vertex + 1, to_string(r.kind), k + 1, r.totalError(k), r.linearTerm(k),
            r.remainder(k), r.remainderTwoInf);
    }
  }
  return w.str();
}

}  // namespace entrywise
