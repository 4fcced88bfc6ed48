#include <gtest/gtest.h>

#include <cstdlib>
#include <fstream>
#include <sys/wait.h>

#include <nlohmann/json.hpp>

#include "fake_mlm_server.hpp"
#include "support.hpp"

namespace fs = std::filesystem;
using testing_support::fixture;
using testing_support::slurp;

namespace {

struct Run {
  int rc = -1;
  std::string err;
  std::string out;
};

// Runs the CLI with `args` (already shell-quoted where needed).
Run run_cli(const std::string& args, const std::string& env = "") {
  static int counter = 0;
  auto dir = testing_support::temp_dir("cli-io");
  auto out = dir / ("stdout" + std::to_string(counter));
  auto err = dir / ("stderr" + std::to_string(counter++));
  std::string cmd = env + (env.empty() ? "" : " ") + "'" + std::string(LPBIAS_CLI) + "' " + args + " >'" +
                    out.string() + "' 2>'" + err.string() + "'";
  int status = std::system(cmd.c_str());
  Run r;
  r.rc = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = slurp(out.string());
  r.err = slurp(err.string());
  return r;
}

std::string mock_backend() { return "--backend mock:" + fixture("mock_career_family.json"); }

std::string category() {
  return "--category " + std::string(LPBIAS_DATA_DIR) + "/stimuli/career_family.json";
}

}  // namespace

TEST(Cli, ProbeIsReproducibleAndReplayable) {
  auto d1 = testing_support::temp_dir("cli-probe1"), d2 = testing_support::temp_dir("cli-probe2"),
       d3 = testing_support::temp_dir("cli-probe3");
  auto r1 = run_cli("probe " + mock_backend() + " " + category() + " --seed 5 --out " + d1.string());
  ASSERT_EQ(r1.rc, 0) << r1.err;
  EXPECT_NE(r1.out.find("Career/Family"), std::string::npos);
  auto r2 = run_cli("probe " + mock_backend() + " " + category() + " --seed 5 --out " + d2.string());
  ASSERT_EQ(r2.rc, 0) << r2.err;
  EXPECT_EQ(slurp((d1 / "probe.json").string()), slurp((d2 / "probe.json").string()));
  EXPECT_EQ(slurp((d1 / "summary.csv").string()), slurp((d2 / "summary.csv").string()));

  auto r3 = run_cli("replay " + (d1 / "manifest.json").string() + " --out " + d3.string());
  ASSERT_EQ(r3.rc, 0) << r3.err;
  EXPECT_EQ(slurp((d1 / "probe.json").string()), slurp((d3 / "probe.json").string()));
  EXPECT_EQ(slurp((d1 / "summary.csv").string()), slurp((d3 / "summary.csv").string()));

  auto m = nlohmann::json::parse(slurp((d1 / "manifest.json").string()));
  EXPECT_EQ(m["seed"], 5);
  EXPECT_EQ(m["command"], "probe");
  EXPECT_EQ(m["inputs"].size(), 2u);
}

TEST(Cli, SeedFromEnvironment) {
  auto d1 = testing_support::temp_dir("cli-env1"), d2 = testing_support::temp_dir("cli-env2");
  auto r1 = run_cli("probe " + mock_backend() + " " + category() + " --permutations 50 --exact-threshold 1 --out " +
                        d1.string(),
                    "LPBIAS_SEED=9");
  ASSERT_EQ(r1.rc, 0) << r1.err;
  auto r2 = run_cli("probe " + mock_backend() + " " + category() +
                    " --permutations 50 --exact-threshold 1 --seed 9 --out " + d2.string());
  ASSERT_EQ(r2.rc, 0) << r2.err;
  EXPECT_EQ(slurp((d1 / "probe.json").string()), slurp((d2 / "probe.json").string()));
  auto j = nlohmann::json::parse(slurp((d1 / "probe.json").string()));
  EXPECT_EQ(j["results"][0]["seed"], 9);
  EXPECT_EQ(j["results"][0]["exact"], false);
}

TEST(Cli, ReplayRejectsChangedInputs) {
  auto d = testing_support::temp_dir("cli-tamper");
  auto cat = d / "cat.json";
  fs::copy_file(std::string(LPBIAS_DATA_DIR) + "/stimuli/career_family.json", cat);
  auto r = run_cli("probe " + mock_backend() + " --category " + cat.string() + " --out " + (d / "o").string());
  ASSERT_EQ(r.rc, 0) << r.err;
  std::ofstream(cat, std::ios::app) << "\n";
  auto rr = run_cli("replay " + (d / "o" / "manifest.json").string());
  EXPECT_EQ(rr.rc, 1);
  EXPECT_NE(rr.err.find(cat.string()), std::string::npos);
}

TEST(Cli, ValidationErrorsExitOne) {
  auto d = testing_support::temp_dir("cli-errors");
  auto missing = run_cli("probe " + mock_backend() + " --category /nonexistent/cat.json --out " + d.string());
  EXPECT_EQ(missing.rc, 1);
  EXPECT_NE(missing.err.find("/nonexistent/cat.json"), std::string::npos);

  auto bad = d / "bad.json";
  std::ofstream(bad) << "{\"name\": \"x\", \"templates\": [";
  auto malformed = run_cli("probe " + mock_backend() + " --category " + bad.string() + " --out " + d.string());
  EXPECT_EQ(malformed.rc, 1);

  EXPECT_EQ(run_cli("probe --bogus-flag").rc, 1);
  EXPECT_EQ(run_cli("nosuchcommand").rc, 1);
  EXPECT_EQ(run_cli("--help").rc, 0);
  EXPECT_EQ(run_cli("probe --backend nonsense " + category()).rc, 1);
}

TEST(Cli, StaticModeNeedsStaticVectors) {
  testing_support::FakeMlmServer server;
  auto d = testing_support::temp_dir("cli-static");
  auto r = run_cli("weat --mode static --backend http:" + server.address() + " " + category() + " --out " +
                   d.string());
  EXPECT_EQ(r.rc, 1);
  EXPECT_NE(r.err.find("static"), std::string::npos);
}

TEST(Cli, UnreachableBackendExitsTwo) {
  int port = testing_support::closed_port();
  auto d = testing_support::temp_dir("cli-transport");
  auto r = run_cli("probe --backend http:127.0.0.1:" + std::to_string(port) + " " + category() + " --out " +
                   d.string());
  EXPECT_EQ(r.rc, 2);
}

TEST(Cli, WeatOnToyVectors) {
  auto d = testing_support::temp_dir("cli-weat");
  auto r = run_cli("weat --mode static --backend vectors:" + fixture("toy_vectors.txt") + " --category " +
                   fixture("toy_weat.json") + " --out " + d.string());
  ASSERT_EQ(r.rc, 0) << r.err;
  auto j = nlohmann::json::parse(slurp((d / "weat.json").string()));
  EXPECT_EQ(j["results"][0]["kind"], "weat");
  EXPECT_EQ(j["results"][0]["n_permutations"], 20);
}

TEST(Cli, EmploymentPercentages) {
  auto d = testing_support::temp_dir("cli-employment");
  auto r = run_cli("employment --backend mock:" + fixture("mock_employment.json") + " --attributes " +
                   fixture("traits_positive.txt") + " --attributes " + fixture("traits_negative.txt") +
                   " --template is --out " + d.string());
  ASSERT_EQ(r.rc, 0) << r.err;
  auto j = nlohmann::json::parse(slurp((d / "employment.json").string()));
  ASSERT_EQ(j["lists"].size(), 2u);
  EXPECT_NEAR(j["lists"][0]["reports"][0]["percentage_male"].get<double>(), 400.0 / 7.0, 1e-9);
  EXPECT_EQ(j["lists"][1]["reports"][0]["percentage_male"], 75.0);

  auto s = run_cli("employment --backend mock:" + fixture("mock_employment.json") + " --attributes " +
                   fixture("salary.csv") + " --format csv --column title --sort-column 'median salary'" +
                   " --limit 5 --out " + d.string());
  ASSERT_EQ(s.rc, 0) << s.err;
  j = nlohmann::json::parse(slurp((d / "employment.json").string()));
  EXPECT_EQ(j["lists"][0]["n_attributes"], 5);
  EXPECT_EQ(j["lists"][0]["reports"][0]["percentage_male"], 60.0);
}

TEST(Cli, GprOnFixture) {
  auto d = testing_support::temp_dir("cli-gpr");
  auto r = run_cli("gpr --backend mock:" + fixture("mock_gap.json") + " --gap " + fixture("gap_fixture.tsv") +
                   " --topics 3 --out " + d.string());
  ASSERT_EQ(r.rc, 0) << r.err;
  auto j = nlohmann::json::parse(slurp((d / "gpr.json").string()));
  EXPECT_EQ(j["dataset"]["parsed"], 10);
  EXPECT_TRUE(j.contains("neither"));
}
