#include <gtest/gtest.h>

#include <cmath>

#include "entrywise/model.hpp"
#include "entrywise/spectral_core.hpp"

using namespace entrywise;

namespace {

double upper_mean(const Matrix& m) {
  double s = 0.0;
  Index count = 0;
  for (Index j = 0; j < m.cols(); ++j) {
    for (Index i = 0; i <= j; ++i) {
      s += m(i, j);
      ++count;
    }
  }
  return s / static_cast<double>(count);
}

bool exactly_symmetric(const Matrix& m) { return (m.array() == m.transpose().array()).all(); }

}  // namespace

TEST(LatentPositions, ValidatesInnerProducts) {
  EXPECT_THROW(LatentPositions(Matrix::Constant(3, 1, 1.2), 0.5), ProbabilityError);
  EXPECT_THROW(LatentPositions(Matrix::Constant(3, 1, 0.5), 1.5), ProbabilityError);
  EXPECT_THROW(LatentPositions(Matrix::Constant(3, 1, 0.1), 0.5, 0.05), ProbabilityError);
  EXPECT_NO_THROW(LatentPositions(Matrix::Constant(3, 1, 0.5), 0.5, 0.05));
}

TEST(SampleRdpg, ZeroAndOneProbabilities) {
  const SymObservation zero = sample_rdpg(LatentPositions(Matrix::Zero(6, 1), 1.0), 1);
  EXPECT_EQ(zero.a.matrix().cwiseAbs().sum(), 0.0);
  const SymObservation one = sample_rdpg(LatentPositions(Matrix::Ones(6, 1), 1.0), 1);
  EXPECT_EQ(one.a.matrix().sum(), 36.0);
}

TEST(SampleRdpg, MeanWithinThreeStandardErrors) {
  const TwoBlockTruth t = two_block_truth({500, 0.9, 0.05, 0.5});
  const SymObservation obs = sample_rdpg(t.latent, 99);
  const Matrix& p = t.p.matrix();
  double var = 0.0;
  Index count = 0;
  for (Index j = 0; j < 500; ++j) {
    for (Index i = 0; i <= j; ++i) {
      var += p(i, j) * (1.0 - p(i, j));
      ++count;
    }
  }
  const double se = std::sqrt(var) / static_cast<double>(count);
  EXPECT_LE(std::abs(upper_mean(obs.a.matrix()) - upper_mean(p)), 3.0 * se);
}

TEST(SampleRdpg, SymmetricBinaryAndReproducible) {
  const TwoBlockTruth t = two_block_truth({60, 0.9, 0.05, 0.4});
  const SymObservation a = sample_rdpg(t.latent, 5);
  const SymObservation b = sample_rdpg(t.latent, 5);
  const SymObservation c = sample_rdpg(t.latent, 6);
  EXPECT_TRUE(exactly_symmetric(a.a.matrix()));
  EXPECT_TRUE(((a.a.matrix().array() == 0.0) || (a.a.matrix().array() == 1.0)).all());
  EXPECT_TRUE((a.a.matrix().array() == b.a.matrix().array()).all());
  EXPECT_FALSE((a.a.matrix().array() == c.a.matrix().array()).all());
  ASSERT_TRUE(a.truth.has_value());
  EXPECT_LT((a.truth->p.matrix() - 0.4 * t.latent.x() * t.latent.x().transpose()).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(SampleRdpg, HollowOption) {
  const SymObservation obs = sample_rdpg(LatentPositions(Matrix::Ones(5, 1), 1.0), 3, {true});
  EXPECT_EQ(obs.a.matrix().diagonal().sum(), 0.0);
  EXPECT_EQ(obs.a.matrix().sum(), 20.0);
}

TEST(SampleRdpg, StandardizedResidualMean) {
  const TwoBlockTruth t = two_block_truth({460, 0.6, 0.2, 0.7});
  const SymObservation obs = sample_rdpg(t.latent, 2024);
  const Matrix& p = t.p.matrix();
  double num = 0.0;
  double var = 0.0;
  for (Index j = 0; j < 460; ++j) {
    for (Index i = 0; i <= j; ++i) {
      num += obs.a(i, j) - p(i, j);
      var += p(i, j) * (1.0 - p(i, j));
    }
  }
  const double z = num / std::sqrt(var);
  EXPECT_GE(z, -4.0);
  EXPECT_LE(z, 4.0);
}

TEST(SampleSnmc, NoMaskNoNoise) {
  const TwoBlockTruth t = two_block_truth({10, 0.9, 0.05, 1.0});
  const SymObservation obs = sample_snmc(SnmcSpec::make(t.latent, 0.0), 4);
  const Matrix xxt = t.latent.x() * t.latent.x().transpose();
  EXPECT_LT((obs.a.matrix() - xxt).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(SampleSnmc, NoiselessEntriesAreInnerProducts) {
  const TwoBlockTruth t = two_block_truth({40, 0.9, 0.05, 0.3});
  const SymObservation obs = sample_snmc(SnmcSpec::make(t.latent, 0.0), 4);
  const Matrix xxt = t.latent.x() * t.latent.x().transpose();
  Index nonzero = 0;
  for (Index i = 0; i < 40; ++i) {
    for (Index j = 0; j < 40; ++j) {
      if (obs.a(i, j) != 0.0) {
        EXPECT_EQ(obs.a(i, j), xxt(i, j));
        ++nonzero;
      }
    }
  }
  EXPECT_GT(nonzero, 0);
}

TEST(SampleSnmc, ZeroFractionMatchesMask) {
  const Index n = 400;
  const double rho = sparsity_from_rule(n, 5.0, 1.0);
  const TwoBlockTruth t = two_block_truth({n, 0.9, 0.05, rho});
  const SymObservation obs = sample_snmc(SnmcSpec::make(t.latent, 1.0), 77);
  Index zeros = 0;
  Index count = 0;
  for (Index j = 0; j < n; ++j) {
    for (Index i = 0; i <= j; ++i) {
      zeros += obs.a(i, j) == 0.0 ? 1 : 0;
      ++count;
    }
  }
  const double frac = static_cast<double>(zeros) / static_cast<double>(count);
  const double se = std::sqrt(rho * (1.0 - rho) / static_cast<double>(count));
  EXPECT_LE(std::abs(frac - (1.0 - rho)), 3.0 * se);
  EXPECT_TRUE(exactly_symmetric(obs.a.matrix()));
}

TEST(SampleSnmc, SpecInvariant) {
  const TwoBlockTruth t = two_block_truth({10, 0.9, 0.05, 0.2});
  const SnmcSpec s = SnmcSpec::make(t.latent, 2.0);
  EXPECT_NEAR(s.sigma, 2.0 * 0.04, 1e-15);
  SnmcSpec bad = s;
  bad.sigma = 0.5;
  EXPECT_THROW(bad.validate(), ConfigError);
}

TEST(SampleMmsbm, PureNodesReduceToSbm) {
  MmsbmSpec spec;
  spec.rho = 1.0;
  spec.theta = Matrix::Zero(4, 2);
  spec.theta(0, 0) = spec.theta(1, 0) = 1.0;
  spec.theta(2, 1) = spec.theta(3, 1) = 1.0;
  spec.xStar = Matrix{{std::sqrt(0.5), std::sqrt(0.4)}, {std::sqrt(0.5), -std::sqrt(0.4)}};
  const Matrix b = spec.block_matrix();
  const Matrix p = LatentPositions(spec.latent(), 1.0).probabilities().matrix();
  EXPECT_NEAR(p(0, 1), b(0, 0), 1e-14);
  EXPECT_NEAR(p(0, 2), b(0, 1), 1e-14);
  EXPECT_NEAR(p(2, 3), b(1, 1), 1e-14);
}

TEST(SampleMmsbm, DesignProbabilitiesAndMixture) {
  const double rho = 0.3;
  const MmsbmSpec spec = mixed_membership_design(60, 15, rho);
  const Matrix b = spec.block_matrix();
  EXPECT_NEAR(b(0, 0), 0.9, 1e-14);
  EXPECT_NEAR(b(0, 1), 0.1, 1e-14);
  const Matrix p = LatentPositions(spec.latent(), rho).probabilities().matrix();
  EXPECT_GE(p.minCoeff(), rho * 0.1 - 1e-14);
  EXPECT_LE(p.maxCoeff(), rho * 0.9 + 1e-14);
  const Vector half{{0.5, 0.5}};
  EXPECT_NEAR(rho * half.dot(b * half), rho * 0.5, 1e-14);
}

TEST(SampleMmsbm, MatchesRdpgWithSameSeed) {
  const MmsbmSpec spec = mixed_membership_design(80, 20, 0.4);
  const SymObservation a = sample_mmsbm(spec, 8);
  const SymObservation b = sample_rdpg(LatentPositions(spec.theta * spec.xStar, 0.4), 8);
  EXPECT_TRUE((a.a.matrix().array() == b.a.matrix().array()).all());
}

TEST(TwoBlockTruth, ClosedForm) {
  const Index n = 5000;
  const double rho = sparsity_from_rule(n, 5.0, 1.0);
  const TwoBlockTruth t = two_block_truth({n, 0.9, 0.05, rho});
  EXPECT_NEAR(t.scaledVariance, 0.95 / 0.85, 1e-12);
  EXPECT_NEAR(t.scaledVariance, 1.1176, 1e-4);
  EXPECT_NEAR(t.unscaledVariance, 2 * 0.95 / (0.85 * 0.85), 1e-12);
  const Matrix assembled = rho * t.latent.x() * t.latent.x().transpose();
  EXPECT_LT((t.p.matrix() - assembled).cwiseAbs().maxCoeff(), 1e-15);
  const Matrix pu = t.p.matrix() * t.eigenvectors;
  EXPECT_LT((pu - t.eigenvectors * t.eigenvalues.asDiagonal()).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(TwoBlockTruth, Errors) {
  EXPECT_THROW(two_block_truth({7, 0.9, 0.05, 1.0}), ConfigError);
  const TwoBlockTruth flat = two_block_truth({8, 0.5, 0.5, 1.0});
  EXPECT_THROW(signed_truncated_eig(flat.p, 2, 0), SpectrumError);
}

TEST(Rank1Truth, ClosedForm) {
  const Rank1Truth same = rank1_sbm_truth({10, 0.4, 0.4, 0.5});
  EXPECT_NEAR(same.lambda, 10 * 0.5 * 0.16, 1e-14);
  const Index n = 5000;
  const double rho = sparsity_from_rule(n, 5.0, 1.5);
  const Rank1Truth t = rank1_sbm_truth({n, 0.95, 0.3, rho});
  EXPECT_NEAR(t.lambda, static_cast<double>(n) * rho * 0.49625, 1e-9);
  EXPECT_NEAR(t.uP.norm(), 1.0, 1e-12);
}

TEST(SparsityRule, Formula) {
  EXPECT_NEAR(sparsity_from_rule(1000, 5.0, 1.0), 5.0 * std::log(1000.0) / 1000.0, 1e-16);
  EXPECT_THROW(sparsity_from_rule(10, 50.0, 2.0), ConfigError);
}
