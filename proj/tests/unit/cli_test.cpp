#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace {

namespace fs = std::filesystem;

const fs::path kWork = fs::temp_directory_path() / ("scbf_cli_" + std::to_string(::getpid()));

int run(const std::string& args) {
  const std::string cmd = std::string(SCBF_CLI_PATH) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::stringstream s;
  s << f.rdbuf();
  return s.str();
}

fs::path write_config(const std::string& name, const std::string& text) {
  fs::create_directories(kWork);
  const fs::path p = kWork / name;
  std::ofstream(p) << text;
  return p;
}

const std::string kSmall =
    "d: 2\nn: 4\nr: 3\nT: 0.05\ndt: 0.001\noutput_dt: 0.01\njump_rate: 20\ngamma_c0: 0.2\n"
    "sigma_a: 0.2\nverify_samples: 100\nensemble: 8\ncutoffs: [3, 5]\ndt_factors: [1, 2]\n"
    "dt_reference_factor: 8\nseed: 11\n";

TEST(Cli, VerifyIsByteIdenticalAcrossRuns) {
  const fs::path cfg = write_config("v.yaml", kSmall);
  ASSERT_EQ(run("verify --config " + cfg.string() + " --out " + (kWork / "v1").string()), 0);
  ASSERT_EQ(run("verify --config " + cfg.string() + " --out " + (kWork / "v2").string()), 0);
  const std::string a = slurp(kWork / "v1" / "verify.jsonl");
  EXPECT_FALSE(a.empty());
  EXPECT_EQ(a, slurp(kWork / "v2" / "verify.jsonl"));
  EXPECT_EQ(slurp(kWork / "v1" / "manifest.json"), slurp(kWork / "v2" / "manifest.json"));
}

TEST(Cli, SimulateWritesSnapshotLedgerAndManifest) {
  const fs::path cfg = write_config("s.yaml", kSmall);
  const fs::path out = kWork / "s";
  ASSERT_EQ(run("simulate --config " + cfg.string() + " --out " + out.string() + " --seed 5"), 0);
  EXPECT_TRUE(fs::exists(out / "trajectory.scbf"));
  EXPECT_EQ(slurp(out / "ledger.csv").rfind("time,energy_H2,", 0), 0u);
  std::ifstream f(out / "manifest.json");
  const nlohmann::json m = nlohmann::json::parse(f);
  EXPECT_EQ(m["seed"], 5);
  EXPECT_EQ(m["config"]["seed"], 5);
  EXPECT_TRUE(m["files"].contains("trajectory.scbf"));
  EXPECT_TRUE(m["files"].contains("ledger.csv"));
}

TEST(Cli, ManifestRegeneratesIdenticalFiles) {
  const fs::path cfg = write_config("r.yaml", kSmall);
  const fs::path out = kWork / "r";
  ASSERT_EQ(run("simulate --config " + cfg.string() + " --out " + out.string()), 0);
  std::ifstream f(out / "manifest.json");
  const nlohmann::json m = nlohmann::json::parse(f);
  // Rebuild a config from the manifest echo alone.
  std::ostringstream text;
  for (const auto& [k, v] : m["config"].items()) text << k << ": " << v.dump() << "\n";
  const fs::path echo = write_config("echo.yaml", text.str());
  const fs::path again = kWork / "r2";
  ASSERT_EQ(run("simulate --config " + echo.string() + " --out " + again.string()), 0);
  std::ifstream g(again / "manifest.json");
  EXPECT_EQ(nlohmann::json::parse(g)["files"], m["files"]);
}

TEST(Cli, SubcommandsExitZeroOnPass) {
  const fs::path cfg = write_config("all.yaml", kSmall + "uniqueness: true\n");
  for (const char* sub : {"ensemble", "converge", "uniqueness"}) {
    EXPECT_EQ(run(std::string(sub) + " --config " + cfg.string() + " --jobs 2 --out " + (kWork / sub).string()), 0)
        << sub;
  }
}

TEST(Cli, PropertyFailureExitsOne) {
  // A Galerkin rate threshold no finite study can meet.
  const fs::path cfg = write_config("f.yaml", kSmall + "min_rate: 1000\ncutoffs: [3, 4, 5]\n");
  EXPECT_EQ(run("converge --config " + cfg.string() + " --jobs 1 --out " + (kWork / "f").string()), 1);
}

TEST(Cli, UsageErrorsExitTwo) {
  EXPECT_EQ(run(""), 2);
  EXPECT_EQ(run("frobnicate"), 2);
  EXPECT_EQ(run("verify --config /nonexistent.yaml"), 2);
  EXPECT_EQ(run("verify --config " + write_config("bad.yaml", "mu: -1\n").string()), 2);
  EXPECT_EQ(run("verify --config " + write_config("unk.yaml", "nu: 1\n").string()), 2);
  EXPECT_EQ(run("verify --jobs 0"), 2);
  const fs::path refused = write_config("ref.yaml", "d: 3\nn: 3\nr: 3\nmu: 0.5\nbeta: 0.5\n");
  EXPECT_EQ(run("uniqueness --config " + refused.string() + " --out " + (kWork / "ref").string()), 2);
  EXPECT_EQ(run("ensemble --config " + write_config("j.yaml", kSmall).string() + " --out " + (kWork / "j").string() +
                " --jobs x"),
            2);
}

TEST(Cli, JobsFallsBackToEnvironment) {
  const fs::path cfg = write_config("env.yaml", kSmall);
  const std::string out = (kWork / "env").string();
  EXPECT_EQ(run("ensemble --config " + cfg.string() + " --out " + out), 0);
  EXPECT_EQ(std::system(("SCBF_JOBS=bogus " + std::string(SCBF_CLI_PATH) + " ensemble --config " + cfg.string() +
                         " --out " + out + " > /dev/null 2>&1")
                            .c_str()) >>
                8,
            2);
  const std::string a = slurp(kWork / "env" / "ensemble.jsonl");
  EXPECT_EQ(std::system(("SCBF_JOBS=3 " + std::string(SCBF_CLI_PATH) + " ensemble --config " + cfg.string() +
                         " --out " + out + " > /dev/null 2>&1")
                            .c_str()) >>
                8,
            0);
  EXPECT_EQ(slurp(kWork / "env" / "ensemble.jsonl"), a);
}

}  // namespace
