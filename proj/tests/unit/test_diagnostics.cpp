#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "entrywise/diagnostics.hpp"

using namespace entrywise;

namespace {

SymObservation noiseless(const LatentPositions& lat) {
  return SymObservation{lat.probabilities(), GroundTruth{lat.probabilities(), lat}, 0};
}

Embedding frame(const Matrix& coords, EmbeddingKind kind) {
  Embedding e;
  e.coords = coords;
  e.kind = kind;
  e.nPos = coords.cols();
  return e;
}

}  // namespace

TEST(DecomposeScaled, ZeroAtTruth) {
  const TwoBlockTruth t = two_block_truth({40, 0.9, 0.05, 0.5});
  const SymObservation obs = noiseless(t.latent);
  const Decomposition dec = decompose_scaled(obs, ase_embed(obs, 2, 0));
  EXPECT_LT(dec.total.cwiseAbs().maxCoeff(), 1e-10);
  EXPECT_EQ(dec.linear.cwiseAbs().maxCoeff(), 0.0);
  EXPECT_LT(dec.remainderTwoInf, 1e-10);
}

TEST(DecomposeScaled, BookkeepingIdentity) {
  const TwoBlockTruth t = two_block_truth({200, 0.9, 0.05, 0.3});
  const SymObservation obs = sample_rdpg(t.latent, 12);
  const Decomposition dec = decompose_scaled(obs, ase_embed(obs, 2, 0), {0, 5, 150});
  ASSERT_EQ(dec.records.size(), 3u);
  for (const auto& r : dec.records) {
    EXPECT_LE((r.totalError - r.linearTerm - r.remainder).cwiseAbs().maxCoeff(), 1e-10);
  }
  EXPECT_NEAR(dec.remainderTwoInf, dec.remainder.rowwise().norm().maxCoeff(), 1e-15);
}

TEST(DecomposeScaled, RequiresTruth) {
  const TwoBlockTruth t = two_block_truth({20, 0.9, 0.05, 0.5});
  SymObservation obs = sample_rdpg(t.latent, 1);
  const Embedding e = ase_embed(obs, 2, 0);
  obs.truth.reset();
  EXPECT_THROW(decompose_scaled(obs, e), TruthMissingError);
  EXPECT_THROW(decompose_unscaled(obs, unscaled_embed(obs, 2, 0)), TruthMissingError);
}

TEST(DecomposeScaled, LinearTermIsRowLocal) {
  const TwoBlockTruth t = two_block_truth({120, 0.9, 0.05, 0.4});
  const SymObservation obs = sample_rdpg(t.latent, 21);
  const Index i = 3;
  const Decomposition base = decompose_scaled(obs, ase_embed(obs, 2, 0), {i});
  Matrix a = obs.a.matrix();
  for (Index j = 10; j < 60; ++j) {
    a(j, j + 1) = 1.0 - a(j, j + 1);
    a(j + 1, j) = a(j, j + 1);
  }
  const SymObservation other{DenseSymMatrix::from_symmetric(a), obs.truth, obs.seed};
  const Decomposition moved = decompose_scaled(other, ase_embed(other, 2, 0), {i});
  EXPECT_EQ(moved.records[0].linearTerm, base.records[0].linearTerm);
}

TEST(DecomposeScaled, LinearTermNormalAtDeskScale) {
  const Index n = 1000;
  const double a = 0.9;
  const double b = 0.05;
  const TwoBlockTruth t = two_block_truth({n, a, b, sparsity_from_rule(n, 5.0, 1.0)});
  const Embedding truthFrame = frame(t.latent.scaled(), EmbeddingKind::Scaled);
  const Index reps = 200;
  std::vector<double> z;
  for (Index r = 0; r < reps; ++r) {
    const Decomposition dec = decompose_scaled(sample_rdpg(t.latent, 20240501 + r), truthFrame, {0});
    z.push_back(std::sqrt(static_cast<double>(n)) * dec.records[0].linearTerm(1));
  }
  // Exact law: sqrt(n) sum_j (A_0j - P_0j) v_j2 / lambda_2, a lattice with
  // spacing sqrt(n) |v_j2| / lambda_2.
  const Matrix& p = t.p.matrix();
  const Vector v = t.scaledEigenvectors.col(1);
  const double lambda = t.eigenvalues(1);
  double var = 0.0;
  for (Index j = 0; j < n; ++j) var += p(0, j) * (1.0 - p(0, j)) * v(j) * v(j);
  const double sd = std::sqrt(static_cast<double>(n) * var) / lambda;
  EXPECT_NEAR(sd, std::sqrt((a + b) / (a - b)), 0.05);
  EXPECT_NEAR(sample_sd(z) / sd, 1.0, 3.0 / std::sqrt(2.0 * static_cast<double>(reps)));
  const double spacing = std::sqrt(static_cast<double>(n)) * std::abs(v(0)) / lambda;
  const double atom = spacing / (sd * std::sqrt(2.0 * std::numbers::pi));
  EXPECT_LT(ks_against_normal(z, 0.0, sd), 1.36 / std::sqrt(static_cast<double>(reps)) + 0.5 * atom);
}

TEST(DecomposeUnscaled, ZeroAtTruthAndIdentity) {
  const TwoBlockTruth t = two_block_truth({40, 0.9, 0.05, 0.5});
  const SymObservation exact = noiseless(t.latent);
  const Decomposition zero = decompose_unscaled(exact, unscaled_embed(exact, 2, 0));
  EXPECT_LT(zero.total.cwiseAbs().maxCoeff(), 1e-10);
  EXPECT_EQ(zero.linear.cwiseAbs().maxCoeff(), 0.0);

  const SymObservation obs = sample_rdpg(t.latent, 9);
  const Decomposition dec = decompose_unscaled(obs, unscaled_embed(obs, 2, 0));
  for (const auto& r : dec.records) {
    EXPECT_LE((r.totalError - r.linearTerm - r.remainder).cwiseAbs().maxCoeff(), 1e-10);
  }
}

TEST(DecomposeUnscaled, LinearTermVariance) {
  const Index n = 600;
  const double a = 0.9;
  const double b = 0.05;
  const double rho = sparsity_from_rule(n, 5.0, 1.0);
  const TwoBlockTruth t = two_block_truth({n, a, b, rho});
  const Embedding truthFrame = frame(t.eigenvectors, EmbeddingKind::Unscaled);
  std::vector<double> z;
  for (Index r = 0; r < 200; ++r) {
    const Decomposition dec = decompose_unscaled(sample_rdpg(t.latent, 777 + r), truthFrame, {0});
    z.push_back(static_cast<double>(n) * std::sqrt(rho) * dec.records[0].linearTerm(1));
  }
  const double target = std::sqrt(2.0 * (a + b) / ((a - b) * (a - b)));
  EXPECT_NEAR(sample_sd(z) / target, 1.0, 0.15);
}

TEST(RemainderProfile, Degenerate) {
  DecompositionRecord r;
  r.n = 4;
  r.remainder = Vector::Zero(2);
  const RemainderProfile zero = remainder_profile({r, r, r});
  EXPECT_EQ(zero.remainderNorm.max, 0.0);
  EXPECT_EQ(zero.scaledTwoInf.max, 0.0);
  r.remainder = Vector{{3.0, 4.0}};
  r.remainderTwoInf = 0.5;
  const RemainderProfile one = remainder_profile({r});
  EXPECT_EQ(one.remainderNorm.min, 5.0);
  EXPECT_EQ(one.remainderNorm.q1, 5.0);
  EXPECT_EQ(one.remainderNorm.max, 5.0);
  EXPECT_EQ(one.scaledTwoInf.median, 1.0);
}

TEST(RemainderProfile, MatchesSortOracle) {
  std::mt19937_64 gen(5);
  std::exponential_distribution<double> ex(2.0);
  std::vector<DecompositionRecord> recs;
  std::vector<double> norms;
  for (int k = 0; k < 1000; ++k) {
    DecompositionRecord r;
    r.n = 9;
    r.remainder = Vector{{ex(gen), 0.0}};
    r.remainderTwoInf = 1.0;
    norms.push_back(r.remainder(0));
    recs.push_back(r);
  }
  std::sort(norms.begin(), norms.end());
  const RemainderProfile p = remainder_profile(recs);
  const auto at = [&](double prob) {
    const double h = prob * 999.0;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min<std::size_t>(lo + 1, 999);
    return norms[lo] + (h - static_cast<double>(lo)) * (norms[hi] - norms[lo]);
  };
  EXPECT_DOUBLE_EQ(p.remainderNorm.min, norms.front());
  EXPECT_NEAR(p.remainderNorm.q1, at(0.25), 1e-14);
  EXPECT_NEAR(p.remainderNorm.median, at(0.5), 1e-14);
  EXPECT_NEAR(p.remainderNorm.q3, at(0.75), 1e-14);
  EXPECT_DOUBLE_EQ(p.remainderNorm.max, norms.back());
  EXPECT_EQ(p.scaledTwoInf.median, 3.0);
}

TEST(DecompositionCsv, Header) {
  DecompositionRecord r;
  r.n = 1;
  r.totalError = Vector{{1.0}};
  r.linearTerm = Vector{{0.75}};
  r.remainder = Vector{{0.25}};
  EXPECT_EQ(decomposition_csv({r}),
            "replicate,vertex,kind,coord,total,linear,remainder,remainder_two_inf\n0,1,scaled,1,1,0.75,0.25,0\n");
}
