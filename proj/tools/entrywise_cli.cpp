// entrywise: command-line front end.
//
//   entrywise <sample|embed|refine|spa|membership|test|mc> [--config FILE] [--out DIR]
//             [--seed N] [--observation FILE] [--pair I J] [-v]
//   entrywise --dump-default [--kind KIND]
//
// Exit status: 0 on success, 1 on configuration or usage errors, 2 on
// numerical or runtime errors. Errors go to stderr as "ERROR <code>: message".

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "entrywise/entrywise.hpp"

namespace fs = std::filesystem;
using namespace entrywise;

namespace {

struct Options {
  std::string subcommand;
  std::string configPath;
  std::string outDir;
  std::optional<std::uint64_t> seed;
  std::string observationPath;
  std::vector<long long> pair;
  int verbosity = 0;
  bool dumpDefault = false;
  std::string dumpKind = "twoBlockSbm";
};

struct Context {
  Options opt;
  RunConfig cfg;
  fs::path out;
  std::uint64_t seed = 0;

  void log(const std::string& msg) const {
    if (opt.verbosity > 0) std::cerr << "[entrywise] " << msg << "\n";
  }

  void write(const std::string& name, const std::string& content) const {
    write_file_atomic(out / name, content);
    log("wrote " + (out / name).string());
  }
};

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

RunConfig load_config(const Options& opt) {
  if (opt.configPath.empty()) return default_run_config();
  std::string text;
  try {
    text = read_text_file(opt.configPath);
  } catch (const IoError& e) {
    throw ConfigError(e.what());
  }
  return parse_config(text);
}

DenseSymMatrix observation(const Context& ctx) {
  if (!ctx.opt.observationPath.empty()) {
    std::string text;
    try {
      text = read_text_file(ctx.opt.observationPath);
    } catch (const IoError& e) {
      throw ConfigError(e.what());
    }
    ctx.log("reading observation " + ctx.opt.observationPath);
    return parse_observation(text);
  }
  ctx.log("sampling observation with seed " + std::to_string(ctx.seed));
  return sample_for_config(ctx.cfg.experiment, ctx.seed).a;
}

std::shared_ptr<const SignedEigenPair> eigen(const Context& ctx, const DenseSymMatrix& a) {
  const auto& e = ctx.cfg.experiment;
  return std::make_shared<const SignedEigenPair>(signed_truncated_eig(a, e.nPos, e.nNeg));
}

ClampOptions clamp(const Context& ctx) { return ClampOptions{ctx.cfg.experiment.epsClip}; }

int cmd_sample(const Context& ctx) {
  ctx.write("observation.csv", observation_text(sample_for_config(ctx.cfg.experiment, ctx.seed).a));
  return 0;
}

int cmd_embed(const Context& ctx) {
  const auto eig = eigen(ctx, observation(ctx));
  ctx.write("embedding_scaled.csv", embedding_csv(embed_from_eig(eig, EmbeddingKind::Scaled)));
  ctx.write("embedding_unscaled.csv", embedding_csv(embed_from_eig(eig, EmbeddingKind::Unscaled)));
  return 0;
}

int cmd_refine(const Context& ctx) {
  const DenseSymMatrix a = observation(ctx);
  const Embedding scaled = embed_from_eig(eigen(ctx, a), EmbeddingKind::Scaled);
  ctx.write("embedding_refined.csv", embedding_csv(one_step_refine(a, scaled, clamp(ctx))));
  return 0;
}

int cmd_spa(const Context& ctx) {
  const Matrix u = eigen(ctx, observation(ctx))->vectors();
  const SpaResult spa = spa_select(u, u.cols());
  CsvWriter w("step,vertex,score");
  for (std::size_t k = 0; k < spa.indices.size(); ++k) w.row(k + 1, spa.indices[k] + 1, spa.scores[k]);
  ctx.write("spa.csv", w.str());
  return 0;
}

int cmd_membership(const Context& ctx) {
  const Matrix u = eigen(ctx, observation(ctx))->vectors();
  MembershipEstimate est = estimate_membership(u, spa_select(u, u.cols()).indices);
  pure_node_indices(est, ctx.cfg.experiment.eta);
  ctx.write("membership.csv", membership_csv(est.thetaHat));
  CsvWriter w("community,spa_vertex,pure_vertex");
  for (std::size_t k = 0; k < est.iota.size(); ++k) {
    const std::string pure = est.iota[k] ? std::to_string(*est.iota[k] + 1) : "";
    w.row(k + 1, est.spaIndices[k] + 1, pure);
  }
  ctx.write("pure_nodes.csv", w.str());
  return 0;
}

int cmd_test(const Context& ctx) {
  if (ctx.opt.pair.size() != 2) throw ConfigError("test: --pair I J is required");
  const DenseSymMatrix a = observation(ctx);
  const Index n = a.n();
  const auto i = static_cast<Index>(ctx.opt.pair[0] - 1);
  const auto j = static_cast<Index>(ctx.opt.pair[1] - 1);
  if (i < 0 || j < 0 || i >= n || j >= n || i == j) {
    throw ConfigError("test: --pair needs two distinct vertices in 1.." + std::to_string(n));
  }
  const auto& e = ctx.cfg.experiment;
  const Embedding scaled = embed_from_eig(eigen(ctx, a), EmbeddingKind::Scaled);
  const Embedding refined = one_step_refine(a, scaled, clamp(ctx));
  const std::vector<TestResult> results{t_ase(scaled, i, j, e.alpha, e.symmetricPlugin, clamp(ctx)),
                                        t_ose(refined, scaled, i, j, e.alpha, clamp(ctx))};
  ctx.write("tests.csv", test_results_csv(results));
  return 0;
}

int cmd_mc(const Context& ctx) {
  ExperimentConfig e = ctx.cfg.experiment;
  e.baseSeed = ctx.seed;
  ctx.log(std::string("running ") + to_string(e.kind) + " with " + std::to_string(e.replicates) + " replicates");
  const McReport rep = run_experiment(e);
  ctx.log("finished in " + std::to_string(rep.runtimeSeconds) + " s");
  if (ctx.cfg.output.records) ctx.write("records.csv", records_csv(rep));
  ctx.write("summary.csv", summary_csv(rep));
  if (!rep.ks.empty()) ctx.write("ks.csv", ks_csv(rep));
  if (!rep.power.empty()) ctx.write("power.csv", power_csv(rep));
  if (!rep.mse.empty()) ctx.write("mse.csv", mse_csv(rep));
  if (ctx.cfg.output.histogram && !rep.histogram.empty()) ctx.write("histogram.csv", histogram_csv(rep));
  ctx.write("report.txt", report_text(rep));
  if (rep.runFailed) {
    std::cerr << "ERROR RUN_FAILED: " << rep.failed << " of " << e.replicates << " replicates failed\n";
    return 2;
  }
  return 0;
}

void write_manifest(const Context& ctx) {
  std::ostringstream s;
  s << "subcommand " << ctx.opt.subcommand << "\n";
  s << "config_hash " << hex64(config_hash(ctx.cfg)) << "\n";
  s << "seed " << ctx.seed << "\n";
  s << "version " << kVersion << "\n";
  if (!ctx.opt.observationPath.empty()) {
    s << "observation_hash " << hex64(fnv1a(read_text_file(ctx.opt.observationPath))) << "\n";
  }
  if (ctx.opt.subcommand == "test") s << "pair " << ctx.opt.pair[0] << " " << ctx.opt.pair[1] << "\n";
  ctx.write("manifest.txt", s.str());
}

int dispatch(const Options& opt) {
  if (opt.dumpDefault) {
    std::cout << emit_config(default_run_config(parse_experiment_kind(opt.dumpKind)));
    return 0;
  }
  if (opt.subcommand.empty()) throw ConfigError("no subcommand given (see --help)");
  Context ctx;
  ctx.opt = opt;
  ctx.cfg = load_config(opt);
  if (!opt.outDir.empty()) ctx.cfg.output.dir = opt.outDir;
  ctx.out = ctx.cfg.output.dir;
  ctx.seed = opt.seed.value_or(ctx.cfg.experiment.baseSeed);

  int code = 0;
  if (opt.subcommand == "sample") code = cmd_sample(ctx);
  else if (opt.subcommand == "embed") code = cmd_embed(ctx);
  else if (opt.subcommand == "refine") code = cmd_refine(ctx);
  else if (opt.subcommand == "spa") code = cmd_spa(ctx);
  else if (opt.subcommand == "membership") code = cmd_membership(ctx);
  else if (opt.subcommand == "test") code = cmd_test(ctx);
  else code = cmd_mc(ctx);
  write_manifest(ctx);
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Entrywise spectral inference for low-rank random matrices"};
  app.set_version_flag("--version", std::string(kVersion));
  Options opt;
  app.add_flag("--dump-default", opt.dumpDefault, "Print the default config and exit");
  app.add_option("--kind", opt.dumpKind, "Experiment kind for --dump-default");

  const std::vector<std::pair<std::string, std::string>> subs{
      {"sample", "Draw one observation and write observation.csv"},
      {"embed", "Write scaled and unscaled spectral embeddings"},
      {"refine", "Write the one-step refined embedding"},
      {"spa", "Run successive projection on the leading eigenvectors"},
      {"membership", "Estimate membership profiles and pure nodes"},
      {"test", "Test equality of two latent positions"},
      {"mc", "Run a Monte Carlo experiment"}};
  for (const auto& [name, help] : subs) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("--config", opt.configPath, "Config file");
    sub->add_option("--out", opt.outDir, "Output directory (overrides [output] dir)");
    sub->add_option("--seed", opt.seed, "Seed override");
    sub->add_flag("-v,--verbose", opt.verbosity, "Progress messages on stderr");
    if (name != "sample" && name != "mc") {
      sub->add_option("--observation", opt.observationPath, "Observation file written by 'sample'");
    }
    if (name == "test") sub->add_option("--pair", opt.pair, "Vertices I J (1-based)")->expected(2);
    sub->callback([&opt, name = name] { opt.subcommand = name; });
  }
  app.require_subcommand(0, 1);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "ERROR USAGE: " << e.what() << "\n";
    return 1;
  }

  try {
    return dispatch(opt);
  } catch (const Error& e) {
    std::cerr << "ERROR " << e.code() << ": " << e.what() << "\n";
    return e.error_class() == ErrorClass::Numerical ? 2 : 1;
  } catch (const std::exception& e) {
    std::cerr << "ERROR INTERNAL: " << e.what() << "\n";
    return 2;
  }
}
