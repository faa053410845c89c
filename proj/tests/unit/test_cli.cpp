#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdio>
#include <filesystem>
#include <sstream>
#include <string>

#include "entrywise/config.hpp"
#include "entrywise/io.hpp"

using namespace entrywise;
namespace fs = std::filesystem;

namespace {

const std::string kCli = ENTRYWISE_CLI_PATH;
const fs::path kConfigs = ENTRYWISE_CONFIG_DIR;

struct CliRun {
  int code = -1;
  std::string stdoutText;
  std::string stderrText;
};

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("entrywise_cli_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

CliRun run(const std::string& args, const fs::path& dir) {
  const fs::path out = dir / "stdout.txt";
  const fs::path err = dir / "stderr.txt";
  const std::string cmd = "'" + kCli + "' " + args + " > '" + out.string() + "' 2> '" + err.string() + "'";
  const int status = std::system(cmd.c_str());
  CliRun r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.stdoutText = read_text_file(out);
  r.stderrText = read_text_file(err);
  return r;
}

int count_lines(const std::string& s) {
  int n = 0;
  for (char c : s) n += c == '\n' ? 1 : 0;
  return n;
}

}  // namespace

TEST(Cli, McTwiceGivesIdenticalManifest) {
  const fs::path dir = scratch("mc");
  const std::string cfg = (kConfigs / "smoke.cfg").string();
  const CliRun a = run("mc --config '" + cfg + "' --out '" + (dir / "a").string() + "'", dir);
  const CliRun b = run("mc --config '" + cfg + "' --out '" + (dir / "b").string() + "'", dir);
  ASSERT_EQ(a.code, 0) << a.stderrText;
  ASSERT_EQ(b.code, 0) << b.stderrText;
  const std::string ma = read_text_file(dir / "a" / "manifest.txt");
  EXPECT_EQ(ma, read_text_file(dir / "b" / "manifest.txt"));
  EXPECT_NE(ma.find("config_hash "), std::string::npos);
  EXPECT_NE(ma.find("seed 20240501"), std::string::npos);
  EXPECT_NE(ma.find("version "), std::string::npos);
  EXPECT_EQ(read_text_file(dir / "a" / "records.csv"), read_text_file(dir / "b" / "records.csv"));
  EXPECT_TRUE(fs::exists(dir / "a" / "power.csv"));
}

TEST(Cli, MissingConfigExitsOne) {
  const fs::path dir = scratch("missing");
  const CliRun r = run("mc --config '" + (dir / "nope.cfg").string() + "' --out '" + dir.string() + "'", dir);
  EXPECT_EQ(r.code, 1);
  EXPECT_EQ(r.stderrText.rfind("ERROR ", 0), 0u);
  EXPECT_FALSE(fs::exists(dir / "manifest.txt"));
}

TEST(Cli, BadConfigAndUsageExitOne) {
  const fs::path dir = scratch("bad");
  write_file_atomic(dir / "bad.cfg", "[model]\nwidth = 3\n");
  EXPECT_EQ(run("embed --config '" + (dir / "bad.cfg").string() + "' --out '" + dir.string() + "'", dir).code, 1);
  EXPECT_EQ(run("frobnicate", dir).code, 1);
  EXPECT_EQ(run("test --out '" + dir.string() + "'", dir).code, 1);
}

TEST(Cli, TestOnSavedObservation) {
  const fs::path dir = scratch("test");
  const std::string cfg = (kConfigs / "smoke.cfg").string();
  const CliRun s = run("sample --config '" + cfg + "' --seed 7 --out '" + (dir / "s").string() + "'", dir);
  ASSERT_EQ(s.code, 0) << s.stderrText;
  const fs::path obs = dir / "s" / "observation.csv";
  ASSERT_TRUE(fs::exists(obs));
  const CliRun t = run("test --config '" + cfg + "' --observation '" + obs.string() + "' --pair 1 201 --out '" +
                        (dir / "t").string() + "'",
                    dir);
  ASSERT_EQ(t.code, 0) << t.stderrText;
  const std::string csv = read_text_file(dir / "t" / "tests.csv");
  EXPECT_EQ(count_lines(csv), 3);
  EXPECT_EQ(csv.rfind("i,j,kind,statistic,pvalue,reject\n", 0), 0u);
  EXPECT_NE(csv.find("\n1,201,ASE,"), std::string::npos);
  EXPECT_NE(csv.find("\n1,201,OSE,"), std::string::npos);
  const std::string manifest = read_text_file(dir / "t" / "manifest.txt");
  EXPECT_NE(manifest.find("observation_hash "), std::string::npos);
  EXPECT_NE(manifest.find("pair 1 201"), std::string::npos);

  const CliRun bad = run("test --config '" + cfg + "' --observation '" + obs.string() + "' --pair 1 1 --out '" +
                          (dir / "u").string() + "'",
                      dir);
  EXPECT_EQ(bad.code, 1);
}

TEST(Cli, PipelineStagesWriteOutputs) {
  const fs::path dir = scratch("stages");
  const std::string cfg = (kConfigs / "smoke.cfg").string();
  for (const std::string sub : {"embed", "refine", "spa", "membership"}) {
    const CliRun r = run(sub + " --config '" + cfg + "' --out '" + dir.string() + "'", dir);
    EXPECT_EQ(r.code, 0) << sub << ": " << r.stderrText;
  }
  for (const char* f : {"embedding_scaled.csv", "embedding_unscaled.csv", "embedding_refined.csv", "spa.csv",
                        "membership.csv", "pure_nodes.csv"}) {
    EXPECT_TRUE(fs::exists(dir / f)) << f;
  }
  std::size_t stray = 0;
  for (const auto& e : fs::directory_iterator(dir)) {
    stray += e.path().filename().string().find(".tmp.") != std::string::npos ? 1 : 0;
  }
  EXPECT_EQ(stray, 0u);
}

TEST(Cli, DumpDefaultRoundTrips) {
  const fs::path dir = scratch("dump");
  for (const std::string kind : {"twoBlockSbm", "rank1Sbm", "snmc", "mmsbmPure", "lpTestPower", "lpTestSize"}) {
    const CliRun r = run("--dump-default --kind " + kind, dir);
    ASSERT_EQ(r.code, 0) << r.stderrText;
    const RunConfig parsed = parse_config(r.stdoutText);
    EXPECT_EQ(parsed, default_run_config(parse_experiment_kind(kind)));
    EXPECT_EQ(emit_config(parsed), r.stdoutText);
  }
}

TEST(Cli, Version) {
  const fs::path dir = scratch("version");
  const CliRun r = run("--version", dir);
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.stdoutText.find('.'), std::string::npos);
}
