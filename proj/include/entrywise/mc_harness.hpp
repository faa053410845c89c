#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "entrywise/csv.hpp"
#include "entrywise/diagnostics.hpp"
#include "entrywise/embedding.hpp"
#include "entrywise/errors.hpp"
#include "entrywise/lp_test.hpp"
#include "entrywise/membership.hpp"
#include "entrywise/model.hpp"
#include "entrywise/spectral_core.hpp"
#include "entrywise/stats.hpp"

namespace entrywise {

enum class ExperimentKind { TwoBlockSbm, Rank1Sbm, Snmc, MmsbmPure, LpTestPower, LpTestSize };

inline const char* to_string(ExperimentKind k) {
  switch (k) {
    case ExperimentKind::TwoBlockSbm: return "twoBlockSbm";
    case ExperimentKind::Rank1Sbm: return "rank1Sbm";
    case ExperimentKind::Snmc: return "snmc";
    case ExperimentKind::MmsbmPure: return "mmsbmPure";
    case ExperimentKind::LpTestPower: return "lpTestPower";
    case ExperimentKind::LpTestSize: return "lpTestSize";
  }
  return "?";
}

inline ExperimentKind parse_experiment_kind(const std::string& s) {
  for (auto k : {ExperimentKind::TwoBlockSbm, ExperimentKind::Rank1Sbm, ExperimentKind::Snmc,
                 ExperimentKind::MmsbmPure, ExperimentKind::LpTestPower, ExperimentKind::LpTestSize}) {
    if (s == to_string(k)) return k;
  }
  throw ConfigError("unknown experiment kind '" + s + "'");
}

struct VertexPair {
  Index i = 0;
  Index j = 0;
  bool operator==(const VertexPair&) const = default;
};

struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::TwoBlockSbm;
  Index n = 1000;
  Index replicates = 300;
  std::uint64_t baseSeed = 20240501;

  // Block model parameters (two-block SBM and the masked noisy model).
  double a = 0.9;
  double b = 0.05;
  // Rank-one model parameters.
  double p = 0.95;
  double q = 0.3;
  // Noise level of the masked model, sigma = tau rho^2.
  double tau = 1.0;
  // Pure nodes per community in the mixed-membership design.
  Index n0 = 300;

  // rho = sparsityC (log n)^sparsityK / n
  double sparsityC = 5.0;
  double sparsityK = 1.0;

  Index nPos = 2;
  Index nNeg = 0;
  Index vertex = 0;
  std::vector<VertexPair> pairs;  // empty: design default

  double alpha = 0.05;
  double eta = kDefaultEta;
  double epsClip = 1e-3;
  bool hollow = false;
  bool symmetricPlugin = true;

  Index workers = 0;  // 0: ENTRYWISE_WORKERS or hardware concurrency
  bool reverseOrder = false;
  Index histogramBins = 30;

  bool operator==(const ExperimentConfig&) const = default;

  double rho() const { return sparsity_from_rule(n, sparsityC, sparsityK); }

  void validate() const {
    if (replicates < 1) throw ConfigError("experiment: replicates must be at least 1");
    if (n < 4) throw ConfigError("experiment: n must be at least 4");
    if (nPos < 0 || nNeg < 0 || nPos + nNeg < 1) throw ConfigError("experiment: invalid rank split");
    if (vertex < 0 || vertex >= n) throw ConfigError("experiment: vertex out of range");
    if (!(alpha > 0.0 && alpha <= 1.0)) throw ConfigError("experiment: alpha must lie in (0, 1]");
    if (!(eta > 0.0)) throw ConfigError("experiment: eta must be positive");
    if (!(epsClip > 0.0 && epsClip < 0.5)) throw ConfigError("experiment: epsClip must lie in (0, 0.5)");
    if (histogramBins < 1) throw ConfigError("experiment: histogramBins must be positive");
    for (const auto& pr : pairs) {
      if (pr.i < 0 || pr.j < 0 || pr.i >= n || pr.j >= n || pr.i == pr.j) {
        throw ConfigError("experiment: invalid vertex pair");
      }
    }
    switch (kind) {
      case ExperimentKind::TwoBlockSbm:
      case ExperimentKind::Snmc:
        if (n % 2 != 0) throw ConfigError("experiment: the two-block design needs even n");
        if (nPos + nNeg != 2) throw ConfigError("experiment: the two-block design has rank 2");
        break;
      case ExperimentKind::Rank1Sbm:
        if (n % 2 != 0) throw ConfigError("experiment: the rank-one design needs even n");
        if (nPos != 1 || nNeg != 0) throw ConfigError("experiment: the rank-one design needs nPos=1, nNeg=0");
        break;
      case ExperimentKind::MmsbmPure:
      case ExperimentKind::LpTestPower:
      case ExperimentKind::LpTestSize:
        if (n0 < 1 || 2 * n0 > n) throw ConfigError("experiment: need 1 <= n0 <= n/2");
        if (nPos != 2 || nNeg != 0) throw ConfigError("experiment: the mixed-membership design needs nPos=2, nNeg=0");
        break;
    }
    (void)rho();
  }
};

/// Desk-scale presets.
inline ExperimentConfig default_config(ExperimentKind kind) {
  ExperimentConfig c;
  c.kind = kind;
  switch (kind) {
    case ExperimentKind::TwoBlockSbm:
    case ExperimentKind::Snmc:
      c.n = 1000;
      c.replicates = 300;
      c.sparsityK = 1.0;
      break;
    case ExperimentKind::Rank1Sbm:
      c.n = 1000;
      c.replicates = 200;
      c.sparsityK = 1.5;
      c.nPos = 1;
      break;
    case ExperimentKind::MmsbmPure:
      c.n = 1500;
      c.n0 = 300;
      c.replicates = 300;
      c.sparsityK = 1.5;
      break;
    case ExperimentKind::LpTestPower:
    case ExperimentKind::LpTestSize:
      c.n = 1500;
      c.n0 = 300;
      c.replicates = 1000;
      c.sparsityK = 1.5;
      break;
  }
  return c;
}

/// Pairs tested when the config lists none. Size: two same-community pure
/// pairs. Power: vertex 0 against ten mixed vertices spread like the
/// reference grid 1901, 2101, ..., 3701 of a 4500-vertex graph with 2700 mixed
/// vertices.
inline std::vector<VertexPair> default_pairs(const ExperimentConfig& cfg) {
  if (!cfg.pairs.empty()) return cfg.pairs;
  if (cfg.kind == ExperimentKind::LpTestSize) return {{0, 1}, {cfg.n0, cfg.n0 + 1}};
  const Index mixed = cfg.n - 2 * cfg.n0;
  std::vector<VertexPair> out;
  for (int k = 0; k < 10; ++k) {
    const double offset = (100.0 + 200.0 * k) * static_cast<double>(mixed) / 2700.0;
    const Index j = 2 * cfg.n0 + std::min<Index>(mixed - 1, static_cast<Index>(std::lround(offset)));
    if (out.empty() || out.back().j != j) out.push_back({0, j});
  }
  return out;
}

struct McRecord {
  Index replicate = 0;
  std::string quantity;
  double value = 0.0;
};

struct QuantitySummary {
  std::string quantity;
  Index count = 0;
  double mean = 0.0;
  double sd = 0.0;
  FiveNumber five;
};

struct KsRow {
  std::string quantity;
  double targetMean = 0.0;
  double targetSd = 1.0;
  double sampleSd = 0.0;
  double ks = 0.0;
  Index count = 0;
};

struct PowerRow {
  VertexPair pair;
  double distance = 0.0;
  double powerAse = 0.0;
  double powerOse = 0.0;
  double theoryAse = 0.0;
  double theoryOse = 0.0;
};

struct MseRow {
  Index community = 0;  // 1-based true community
  double mseAse = 0.0;
  double mseOse = 0.0;
  Matrix covAse;
  Matrix covOse;
  double matchRate = 0.0;  // fraction of replicates where iota hit the community's first pure node
};

struct HistogramBin {
  std::string quantity;
  double lo = 0.0;
  double hi = 0.0;
  Index count = 0;
};

struct McReport {
  ExperimentConfig config;
  std::vector<McRecord> records;
  std::vector<QuantitySummary> summaries;
  std::vector<KsRow> ks;
  std::vector<PowerRow> power;
  std::vector<MseRow> mse;
  std::vector<HistogramBin> histogram;
  Index succeeded = 0;
  Index failed = 0;
  std::vector<std::string> failureMessages;
  bool runFailed = false;
  double runtimeSeconds = 0.0;

  std::vector<double> values(const std::string& quantity) const {
    std::vector<double> out;
    for (const auto& r : records) {
      if (r.quantity == quantity) out.push_back(r.value);
    }
    return out;
  }

  const QuantitySummary* summary(const std::string& quantity) const {
    for (const auto& s : summaries) {
      if (s.quantity == quantity) return &s;
    }
    return nullptr;
  }

  const KsRow* ks_row(const std::string& quantity) const {
    for (const auto& k : ks) {
      if (k.quantity == quantity) return &k;
    }
    return nullptr;
  }
};

namespace detail {

using Quantities = std::vector<std::pair<std::string, double>>;

struct Outcome {
  bool ok = false;
  std::string error;
  Quantities values;
};

// Immutable per-run state shared by all replicates.
struct RunContext {
  ExperimentConfig cfg;
  double rho = 0.0;
  std::optional<TwoBlockTruth> twoBlock;
  std::optional<Rank1Truth> rank1;
  std::optional<SnmcSpec> snmc;
  std::optional<MmsbmSpec> mmsbm;
  std::optional<LatentPositions> mmsbmLatent;
  std::vector<VertexPair> pairs;
  std::vector<Index> firstPure;  // first pure vertex of each community
  std::vector<std::pair<std::string, std::pair<double, double>>> ksTargets;
  std::vector<PowerRow> powerTemplate;
};

inline double sign_of(double v) { return v < 0.0 ? -1.0 : 1.0; }

inline std::string pair_tag(std::size_t k) { return "p" + std::to_string(k + 1); }

inline RunContext prepare(const ExperimentConfig& cfg) {
  cfg.validate();
  RunContext ctx;
  ctx.cfg = cfg;
  ctx.rho = cfg.rho();
  switch (cfg.kind) {
    case ExperimentKind::TwoBlockSbm: {
      ctx.twoBlock = two_block_truth({cfg.n, cfg.a, cfg.b, ctx.rho});
      ctx.ksTargets.push_back({"scaled_v2", {0.0, std::sqrt(ctx.twoBlock->scaledVariance)}});
      ctx.ksTargets.push_back({"unscaled_u2", {0.0, std::sqrt(ctx.twoBlock->unscaledVariance)}});
      break;
    }
    case ExperimentKind::Snmc: {
      ctx.twoBlock = two_block_truth({cfg.n, cfg.a, cfg.b, ctx.rho});
      ctx.snmc = SnmcSpec::make(ctx.twoBlock->latent, cfg.tau);
      const double var = (cfg.a * cfg.a + cfg.b * cfg.b) / (cfg.a - cfg.b);
      ctx.ksTargets.push_back({"scaled_v2", {0.0, std::sqrt(var)}});
      break;
    }
    case ExperimentKind::Rank1Sbm: {
      ctx.rank1 = rank1_sbm_truth({cfg.n, cfg.p, cfg.q, ctx.rho});
      const double sigma = theoretical_sigma_rdpg(ctx.rank1->latent, cfg.vertex).sigma(0, 0);
      const double gInv = theoretical_g(ctx.rank1->latent, cfg.vertex).sigma(0, 0);
      ctx.ksTargets.push_back({"ase_x", {0.0, std::sqrt(sigma)}});
      ctx.ksTargets.push_back({"ose_x", {0.0, std::sqrt(gInv)}});
      break;
    }
    case ExperimentKind::MmsbmPure:
    case ExperimentKind::LpTestPower:
    case ExperimentKind::LpTestSize: {
      ctx.mmsbm = mixed_membership_design(cfg.n, cfg.n0, ctx.rho);
      ctx.mmsbmLatent = LatentPositions(ctx.mmsbm->latent(), ctx.rho);
      ctx.firstPure = {0, cfg.n0};
      if (cfg.kind != ExperimentKind::MmsbmPure) {
        ctx.pairs = default_pairs(cfg);
        const Matrix& x = ctx.mmsbmLatent->x();
        const double scale = std::sqrt(static_cast<double>(cfg.n) * ctx.rho);
        for (const auto& pr : ctx.pairs) {
          if (pr.i >= cfg.n || pr.j >= cfg.n) throw ConfigError("experiment: pair outside the graph");
          PowerRow row;
          row.pair = pr;
          const Vector diff = (x.row(pr.i) - x.row(pr.j)).transpose();
          row.distance = diff.norm();
          const Vector mu = scale * diff;
          const int df = static_cast<int>(x.cols());
          row.theoryAse = theoretical_power(mu,
                                            theoretical_sigma_rdpg(*ctx.mmsbmLatent, pr.i).sigma +
                                                theoretical_sigma_rdpg(*ctx.mmsbmLatent, pr.j).sigma,
                                            df, cfg.alpha);
          row.theoryOse = theoretical_power(mu,
                                            theoretical_g(*ctx.mmsbmLatent, pr.i).sigma +
                                                theoretical_g(*ctx.mmsbmLatent, pr.j).sigma,
                                            df, cfg.alpha);
          ctx.powerTemplate.push_back(row);
        }
      }
      break;
    }
  }
  return ctx;
}

inline Quantities run_two_block(const RunContext& ctx, const SymObservation& obs) {
  const ExperimentConfig& cfg = ctx.cfg;
  const TwoBlockTruth& t = *ctx.twoBlock;
  const Index i = cfg.vertex;
  const double n = static_cast<double>(cfg.n);
  auto eig = std::make_shared<const SignedEigenPair>(signed_truncated_eig(obs.a, cfg.nPos, cfg.nNeg));
  const Matrix uA = eig->vectors();
  const Vector sA = eig->values();
  const Matrix e = obs.a.matrix() - obs.truth->p.matrix();

  Quantities out;
  for (Index k = 0; k < 2; ++k) {
    const std::string c = std::to_string(k + 1);
    const double w = sign_of(uA.col(k).dot(t.eigenvectors.col(k)));
    const Vector uHat = w * uA.col(k);
    const Vector vHat = std::sqrt(std::abs(sA(k))) * uHat;
    const Vector& u = t.eigenvectors.col(k);
    const Vector v = t.scaledEigenvectors.col(k);
    const double lambda = t.eigenvalues(k);
    const Vector ev = e * v / lambda;
    const Vector eu = e * u / lambda;
    const double su = n * std::sqrt(ctx.rho);
    out.push_back({"scaled_v" + c, std::sqrt(n) * (vHat(i) - v(i))});
    out.push_back({"scaled_linear" + c, std::sqrt(n) * ev(i)});
    out.push_back({"scaled_remainder_inf" + c, std::sqrt(n) * (vHat - v - ev).cwiseAbs().maxCoeff()});
    out.push_back({"unscaled_u" + c, su * (uHat(i) - u(i))});
    out.push_back({"unscaled_linear" + c, su * eu(i)});
    out.push_back({"unscaled_remainder_inf" + c, su * (uHat - u - eu).cwiseAbs().maxCoeff()});
  }
  const Decomposition dec = decompose_scaled(obs, embed_from_eig(eig, EmbeddingKind::Scaled), {i});
  out.push_back({"procrustes_remainder_two_inf", std::sqrt(n) * dec.remainderTwoInf});
  return out;
}

inline Quantities run_rank1(const RunContext& ctx, const SymObservation& obs) {
  const ExperimentConfig& cfg = ctx.cfg;
  const Rank1Truth& t = *ctx.rank1;
  const Index i = cfg.vertex;
  const double n = static_cast<double>(cfg.n);
  const double sr = std::sqrt(ctx.rho);
  auto eig = std::make_shared<const SignedEigenPair>(signed_truncated_eig(obs.a, 1, 0));
  const Embedding scaled = embed_from_eig(eig, EmbeddingKind::Scaled);
  const Embedding refined = one_step_refine(obs.a, scaled, ClampOptions{cfg.epsClip});
  const Vector uA = eig->uPlus.col(0);
  const double w = sign_of(uA.dot(t.uP));
  const Vector target = sr * t.latent.x().col(0);
  const Vector xt = w * scaled.coords.col(0);
  const Vector xh = w * refined.coords.col(0);
  const Matrix e = obs.a.matrix() - obs.truth->p.matrix();
  const Vector ax = obs.a.matrix() * target / t.lambda;
  const Vector au = obs.a.matrix() * t.uP / t.lambda;
  const double su = n * sr;

  Quantities out;
  out.push_back({"ase_x", std::sqrt(n) * (xt(i) - target(i))});
  out.push_back({"ose_x", std::sqrt(n) * (xh(i) - target(i))});
  out.push_back({"ase_sqerr", (xt - target).squaredNorm()});
  out.push_back({"ose_sqerr", (xh - target).squaredNorm()});
  out.push_back({"ase_linear", std::sqrt(n) * (e * target)(i) / t.lambda});
  out.push_back({"ase_remainder_inf", std::sqrt(n) * (xt - ax).cwiseAbs().maxCoeff()});
  out.push_back({"unscaled_u", su * (w * uA(i) - t.uP(i))});
  out.push_back({"unscaled_linear", su * (e * t.uP)(i) / t.lambda});
  out.push_back({"unscaled_remainder_inf", su * (w * uA - au).cwiseAbs().maxCoeff()});
  return out;
}

inline Quantities run_snmc(const RunContext& ctx, const SymObservation& obs) {
  const ExperimentConfig& cfg = ctx.cfg;
  const TwoBlockTruth& t = *ctx.twoBlock;
  const Index i = cfg.vertex;
  const double n = static_cast<double>(cfg.n);
  const SignedEigenPair eig = signed_truncated_eig(obs.a, cfg.nPos, cfg.nNeg);
  const Matrix uA = eig.vectors();
  const Vector sA = eig.values();
  Quantities out;
  for (Index k = 0; k < 2; ++k) {
    const double w = sign_of(uA.col(k).dot(t.eigenvectors.col(k)));
    const double vHat = w * std::sqrt(std::abs(sA(k))) * uA(i, k);
    out.push_back({"scaled_v" + std::to_string(k + 1),
                   std::sqrt(n) * (vHat - t.scaledEigenvectors(i, k))});
  }
  return out;
}

inline Quantities run_mmsbm_pure(const RunContext& ctx, const SymObservation& obs) {
  const ExperimentConfig& cfg = ctx.cfg;
  const MmsbmSpec& spec = *ctx.mmsbm;
  auto eig = std::make_shared<const SignedEigenPair>(signed_truncated_eig(obs.a, cfg.nPos, cfg.nNeg));
  const Embedding scaled = embed_from_eig(eig, EmbeddingKind::Scaled);
  const Embedding refined = one_step_refine(obs.a, scaled, ClampOptions{cfg.epsClip});
  const Matrix uA = eig->vectors();
  const SpaResult spa = spa_select(uA, uA.cols());
  MembershipEstimate est = estimate_membership(uA, spa.indices);
  pure_node_indices(est, cfg.eta);
  const std::vector<Index> perm = align_permutation(est.thetaHat, spec.theta);
  const PureNodeEstimates pure = pure_node_estimates(scaled, refined, est.iota);
  const double sr = std::sqrt(ctx.rho);
  const Matrix target = sr * ctx.mmsbmLatent->x();
  const Matrix w = procrustes_align(scaled.coords, target).w;
  const Matrix xStar = sr * spec.xStar;

  Quantities out;
  for (std::size_t k = 0; k < perm.size(); ++k) {
    const Index comm = perm[k];
    const std::string tag = "c" + std::to_string(comm + 1);
    const Vector errAse = (pure.scaled.row(static_cast<Index>(k)) * w - xStar.row(comm)).transpose();
    const Vector errOse = (pure.refined.row(static_cast<Index>(k)) * w - xStar.row(comm)).transpose();
    for (Index c = 0; c < errAse.size(); ++c) {
      out.push_back({"ase_err_" + tag + "_" + std::to_string(c + 1), errAse(c)});
    }
    for (Index c = 0; c < errOse.size(); ++c) {
      out.push_back({"ose_err_" + tag + "_" + std::to_string(c + 1), errOse(c)});
    }
    out.push_back({"iota_match_" + tag,
                   *est.iota[k] == ctx.firstPure[static_cast<std::size_t>(comm)] ? 1.0 : 0.0});
  }
  // Emit in community order so every replicate lists quantities identically.
  std::stable_sort(out.begin(), out.end(), [](const auto& x, const auto& y) { return x.first < y.first; });
  return out;
}

inline Quantities run_lp_test(const RunContext& ctx, const SymObservation& obs) {
  const ExperimentConfig& cfg = ctx.cfg;
  const ClampOptions clamp{cfg.epsClip};
  auto eig = std::make_shared<const SignedEigenPair>(signed_truncated_eig(obs.a, cfg.nPos, cfg.nNeg));
  const Embedding scaled = embed_from_eig(eig, EmbeddingKind::Scaled);
  const Embedding refined = one_step_refine(obs.a, scaled, clamp);
  Quantities out;
  for (std::size_t k = 0; k < ctx.pairs.size(); ++k) {
    const auto& pr = ctx.pairs[k];
    const TestResult ra = t_ase(scaled, pr.i, pr.j, cfg.alpha, cfg.symmetricPlugin, clamp);
    const TestResult ro = t_ose(refined, scaled, pr.i, pr.j, cfg.alpha, clamp);
    const std::string tag = pair_tag(k);
    out.push_back({"ase_stat_" + tag, ra.statistic});
    out.push_back({"ase_reject_" + tag, ra.reject ? 1.0 : 0.0});
    out.push_back({"ose_stat_" + tag, ro.statistic});
    out.push_back({"ose_reject_" + tag, ro.reject ? 1.0 : 0.0});
  }
  return out;
}

inline Outcome run_replicate(const RunContext& ctx, Index r) {
  Outcome o;
  const ExperimentConfig& cfg = ctx.cfg;
  const std::uint64_t seed = replicate_seed(cfg.baseSeed, static_cast<std::uint64_t>(r));
  const SamplerOptions so{cfg.hollow};
  try {
    switch (cfg.kind) {
      case ExperimentKind::TwoBlockSbm:
        o.values = run_two_block(ctx, sample_rdpg(ctx.twoBlock->latent, seed, so));
        break;
      case ExperimentKind::Rank1Sbm:
        o.values = run_rank1(ctx, sample_rdpg(ctx.rank1->latent, seed, so));
        break;
      case ExperimentKind::Snmc:
        o.values = run_snmc(ctx, sample_snmc(*ctx.snmc, seed, so));
        break;
      case ExperimentKind::MmsbmPure:
        o.values = run_mmsbm_pure(ctx, sample_mmsbm(*ctx.mmsbm, seed, so));
        break;
      case ExperimentKind::LpTestPower:
      case ExperimentKind::LpTestSize:
        o.values = run_lp_test(ctx, sample_mmsbm(*ctx.mmsbm, seed, so));
        break;
    }
    o.ok = true;
  } catch (const Error& ex) {
    o.error = "replicate " + std::to_string(r) + ": " + ex.code() + ": " + ex.what();
  } catch (const std::exception& ex) {
    o.error = "replicate " + std::to_string(r) + ": " + ex.what();
  }
  return o;
}

}  // namespace detail

/// One observation from the model a config describes, drawn with the given seed.
inline SymObservation sample_for_config(const ExperimentConfig& cfg, std::uint64_t seed) {
  const detail::RunContext ctx = detail::prepare(cfg);
  const SamplerOptions so{cfg.hollow};
  switch (cfg.kind) {
    case ExperimentKind::TwoBlockSbm: return sample_rdpg(ctx.twoBlock->latent, seed, so);
    case ExperimentKind::Rank1Sbm: return sample_rdpg(ctx.rank1->latent, seed, so);
    case ExperimentKind::Snmc: return sample_snmc(*ctx.snmc, seed, so);
    default: return sample_mmsbm(*ctx.mmsbm, seed, so);
  }
}

namespace detail {

inline Index resolve_workers(Index requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("ENTRYWISE_WORKERS")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v > 0) return static_cast<Index>(v);
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? static_cast<Index>(hw) : 1;
}

inline std::vector<HistogramBin> histogram(const std::string& quantity, const std::vector<double>& v,
                                           Index bins) {
  std::vector<HistogramBin> out;
  if (v.empty()) return out;
  const auto [mn, mx] = std::minmax_element(v.begin(), v.end());
  const double lo = *mn;
  const double width = (*mx > lo) ? (*mx - lo) / static_cast<double>(bins) : 1.0;
  std::vector<Index> counts(static_cast<std::size_t>(bins), 0);
  for (double x : v) {
    auto b = static_cast<Index>((x - lo) / width);
    b = std::clamp<Index>(b, 0, bins - 1);
    ++counts[static_cast<std::size_t>(b)];
  }
  for (Index b = 0; b < bins; ++b) {
    out.push_back({quantity, lo + width * static_cast<double>(b), lo + width * static_cast<double>(b + 1),
                   counts[static_cast<std::size_t>(b)]});
  }
  return out;
}

}  // namespace detail

/// Runs cfg.replicates independent replicates (seed baseSeed + r) and
/// aggregates them in replicate order.
inline McReport run_experiment(const ExperimentConfig& cfg) {
  const auto start = std::chrono::steady_clock::now();
  const detail::RunContext ctx = detail::prepare(cfg);
  const Index reps = cfg.replicates;
  std::vector<detail::Outcome> outcomes(static_cast<std::size_t>(reps));

  const Index workers = std::min(detail::resolve_workers(cfg.workers), reps);
  std::atomic<Index> next{0};
  const auto work = [&]() {
    for (Index t = next.fetch_add(1); t < reps; t = next.fetch_add(1)) {
      const Index r = cfg.reverseOrder ? reps - 1 - t : t;
      outcomes[static_cast<std::size_t>(r)] = detail::run_replicate(ctx, r);
    }
  };
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (Index k = 0; k < workers; ++k) pool.emplace_back(work);
    for (auto& th : pool) th.join();
  }

  McReport rep;
  rep.config = cfg;
  std::vector<std::string> order;
  std::map<std::string, std::vector<double>> byQuantity;
  for (Index r = 0; r < reps; ++r) {
    const auto& o = outcomes[static_cast<std::size_t>(r)];
    if (!o.ok) {
      ++rep.failed;
      rep.failureMessages.push_back(o.error);
      continue;
    }
    ++rep.succeeded;
    for (const auto& [name, value] : o.values) {
      auto it = byQuantity.find(name);
      if (it == byQuantity.end()) {
        order.push_back(name);
        it = byQuantity.emplace(name, std::vector<double>{}).first;
      }
      it->second.push_back(value);
      rep.records.push_back({r, name, value});
    }
  }
  rep.runFailed = static_cast<double>(rep.failed) > 0.01 * static_cast<double>(reps);

  for (const auto& name : order) {
    const auto& v = byQuantity[name];
    rep.summaries.push_back({name, static_cast<Index>(v.size()), mean(v), sample_sd(v), five_number(v)});
  }
  for (const auto& [name, target] : ctx.ksTargets) {
    const auto it = byQuantity.find(name);
    if (it == byQuantity.end() || it->second.size() < 20) continue;
    rep.ks.push_back({name, target.first, target.second, sample_sd(it->second),
                      ks_against_normal(it->second, target.first, target.second),
                      static_cast<Index>(it->second.size())});
    const auto bins = detail::histogram(name, it->second, cfg.histogramBins);
    rep.histogram.insert(rep.histogram.end(), bins.begin(), bins.end());
  }

  if (cfg.kind == ExperimentKind::LpTestPower || cfg.kind == ExperimentKind::LpTestSize) {
    for (std::size_t k = 0; k < ctx.powerTemplate.size(); ++k) {
      PowerRow row = ctx.powerTemplate[k];
      const std::string tag = detail::pair_tag(k);
      if (byQuantity.count("ase_reject_" + tag)) row.powerAse = mean(byQuantity["ase_reject_" + tag]);
      if (byQuantity.count("ose_reject_" + tag)) row.powerOse = mean(byQuantity["ose_reject_" + tag]);
      rep.power.push_back(row);
    }
  }

  if (cfg.kind == ExperimentKind::MmsbmPure && rep.succeeded > 0) {
    for (Index comm = 0; comm < 2; ++comm) {
      const std::string tag = "c" + std::to_string(comm + 1);
      MseRow row;
      row.community = comm + 1;
      Matrix errA(0, 0);
      Matrix errO(0, 0);
      for (Index c = 0; c < 2; ++c) {
        const auto& ea = byQuantity["ase_err_" + tag + "_" + std::to_string(c + 1)];
        const auto& eo = byQuantity["ose_err_" + tag + "_" + std::to_string(c + 1)];
        if (errA.size() == 0) {
          errA.resize(static_cast<Index>(ea.size()), 2);
          errO.resize(static_cast<Index>(eo.size()), 2);
        }
        errA.col(c) = Eigen::Map<const Vector>(ea.data(), static_cast<Index>(ea.size()));
        errO.col(c) = Eigen::Map<const Vector>(eo.data(), static_cast<Index>(eo.size()));
      }
      const auto cov = [](const Matrix& m) {
        const Matrix centered = m.rowwise() - m.colwise().mean();
        return Matrix(centered.transpose() * centered / std::max<double>(1.0, static_cast<double>(m.rows()) - 1.0));
      };
      row.mseAse = errA.rowwise().squaredNorm().mean();
      row.mseOse = errO.rowwise().squaredNorm().mean();
      row.covAse = cov(errA);
      row.covOse = cov(errO);
      row.matchRate = mean(byQuantity["iota_match_" + tag]);
      rep.mse.push_back(row);
    }
  }

  rep.runtimeSeconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return rep;
}

/// Rows (distance, powerASE, powerOSE) of an lpTest run.
inline std::vector<PowerRow> power_table(const ExperimentConfig& cfg) {
  if (cfg.kind != ExperimentKind::LpTestPower && cfg.kind != ExperimentKind::LpTestSize) {
    throw ConfigError("power_table: expects an lpTestPower or lpTestSize config");
  }
  return run_experiment(cfg).power;
}

inline std::vector<MseRow> mse_table(const ExperimentConfig& cfg) {
  if (cfg.kind != ExperimentKind::MmsbmPure) throw ConfigError("mse_table: expects an mmsbmPure config");
  return run_experiment(cfg).mse;
}

// CSV renderers. Column order is fixed.

inline std::string records_csv(const McReport& r) {
  CsvWriter w("replicate,quantity,value");
  for (const auto& rec : r.records) w.row(rec.replicate, rec.quantity, rec.value);
  return w.str();
}

inline std::string summary_csv(const McReport& r) {
  CsvWriter w("quantity,count,mean,sd,min,q1,median,q3,max");
  for (const auto& s : r.summaries) {
    w.row(s.quantity, s.count, s.mean, s.sd, s.five.min, s.five.q1, s.five.median, s.five.q3, s.five.max);
  }
  return w.str();
}

inline std::string ks_csv(const McReport& r) {
  CsvWriter w("quantity,count,target_mean,target_sd,sample_sd,ks");
  for (const auto& k : r.ks) w.row(k.quantity, k.count, k.targetMean, k.targetSd, k.sampleSd, k.ks);
  return w.str();
}

inline std::string power_csv(const McReport& r) {
  CsvWriter w("i,j,distance,power_ase,power_ose,theory_ase,theory_ose");
  for (const auto& p : r.power) {
    w.row(p.pair.i + 1, p.pair.j + 1, p.distance, p.powerAse, p.powerOse, p.theoryAse, p.theoryOse);
  }
  return w.str();
}

inline std::string mse_csv(const McReport& r) {
  CsvWriter w("community,mse_ase,mse_ose,cov_ase_11,cov_ase_12,cov_ase_22,cov_ose_11,cov_ose_12,cov_ose_22,iota_match_rate");
  for (const auto& m : r.mse) {
    w.row(m.community, m.mseAse, m.mseOse, m.covAse(0, 0), m.covAse(0, 1), m.covAse(1, 1), m.covOse(0, 0),
          m.covOse(0, 1), m.covOse(1, 1), m.matchRate);
  }
  return w.str();
}

inline std::string histogram_csv(const McReport& r) {
  CsvWriter w("quantity,bin_lo,bin_hi,count");
  for (const auto& h : r.histogram) w.row(h.quantity, h.lo, h.hi, h.count);
  return w.str();
}

/// Plain-text digest of a report (no timings, so reruns compare equal).
inline std::string report_text(const McReport& r) {
  std::ostringstream s;
  s.imbue(std::locale::classic());
  s << "experiment " << to_string(r.config.kind) << "\n";
  s << "n " << r.config.n << "\nreplicates " << r.config.replicates << "\n";
  s << "succeeded " << r.succeeded << "\nfailed " << r.failed << "\n";
  s << "status " << (r.runFailed ? "FAILED" : "OK") << "\n";
  for (const auto& k : r.ks) {
    s << "ks " << k.quantity << " " << format_double(k.ks) << " sd " << format_double(k.sampleSd)
      << " target_sd " << format_double(k.targetSd) << "\n";
  }
  for (const auto& p : r.power) {
    s << "power " << p.pair.i + 1 << " " << p.pair.j + 1 << " distance " << format_double(p.distance)
      << " ase " << format_double(p.powerAse) << " ose " << format_double(p.powerOse) << "\n";
  }
  for (const auto& m : r.mse) {
    s << "mse community " << m.community << " ase " << format_double(m.mseAse) << " ose "
      << format_double(m.mseOse) << "\n";
  }
  for (const auto& f : r.failureMessages) s << "failure " << f << "\n";
  return s.str();
}

}  // namespace entrywise
