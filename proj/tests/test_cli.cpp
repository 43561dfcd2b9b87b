#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <string>
#include <sys/wait.h>

#include "tempdir.hpp"

namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string output;
};

// Runs the CLI from inside `cwd`, capturing stdout and stderr.
Run run_cli(const fs::path& cwd, const std::string& args, const std::string& env = "") {
  const fs::path log = cwd / "cli_output.txt";
  const std::string cmd = "cd '" + cwd.string() + "' && " + env + (env.empty() ? "" : " ") + "'" MSFAX_CLI_PATH "' " +
                          args + " > '" + log.string() + "' 2>&1";
  const int status = std::system(cmd.c_str());
  Run r{WIFEXITED(status) ? WEXITSTATUS(status) : -1, testing::read_file(log)};
  fs::remove(log);
  return r;
}

int count_lines(const std::string& text) {
  int n = 0;
  for (char c : text) n += c == '\n';
  return n;
}

int count_fields(const std::string& text) {
  const std::string first = text.substr(0, text.find('\n'));
  int n = 1;
  for (char c : first) n += c == ',';
  return n;
}

const char* kNetworkFiles[] = {"shared.csv", "study_1.csv", "study_2.csv", "shared_edges.csv", "study_1_edges.csv",
                               "study_2_edges.csv"};

}  // namespace

TEST_CASE("usage errors exit with code 2") {
  testing::TempDir dir("cli_usage");
  CHECK(run_cli(dir.path(), "").code == 2);
  CHECK(run_cli(dir.path(), "simulate --setting 2 --reps 0").code == 2);
  CHECK(run_cli(dir.path(), "simulate").code == 2);
  CHECK(run_cli(dir.path(), "fit --data missing.json --k 1 --j 1,1").code == 2);
  CHECK(run_cli(dir.path(), "bogus").code == 2);
  CHECK(run_cli(dir.path(), "--help").code == 0);
}

TEST_CASE("unknown settings are failures") {
  testing::TempDir dir("cli_bad_setting");
  const Run r = run_cli(dir.path(), "simulate --setting setting99");
  CHECK(r.code == 1);
  CHECK(r.output.find("error") != std::string::npos);
}

TEST_CASE("simulate, fit, network, benchmark and evaluate") {
  testing::TempDir dir("cli_flow");
  const fs::path root = dir.path();
  REQUIRE(run_cli(root, "simulate --setting fewer-predictors --reps 2 --seed 5 --out-dir sim").code == 0);

  const fs::path rep = root / "sim" / "rep_1";
  CHECK(fs::exists(root / "sim" / "setting.json"));
  CHECK(fs::exists(root / "sim" / "rep_2" / "data" / "manifest.json"));
  CHECK(fs::exists(rep / "truth.json"));
  for (const char* name : {"study_1.csv", "study_2.csv"}) {
    const std::string text = testing::read_file(rep / "data" / name);
    CHECK(count_lines(text) == 1601);
    CHECK(count_fields(text) == 12);
  }
  for (const char* name : kNetworkFiles) CHECK(fs::exists(rep / "truth" / name));

  SUBCASE("simulation is reproducible byte for byte") {
    REQUIRE(run_cli(root, "simulate --setting fewer-predictors --reps 2 --seed 5 --out-dir again").code == 0);
    for (const char* name : {"study_1.csv", "study_2.csv"}) {
      CHECK(testing::read_file(rep / "data" / name) == testing::read_file(root / "again" / "rep_1" / "data" / name));
    }
    CHECK(testing::read_file(rep / "truth.json") == testing::read_file(root / "again" / "rep_1" / "truth.json"));
    CHECK(testing::read_file(rep / "data" / "study_1.csv") !=
          testing::read_file(root / "sim" / "rep_2" / "data" / "study_1.csv"));
  }

  SUBCASE("fit and downstream commands") {
    const std::string manifest = "sim/rep_1/data/manifest.json";
    const Run fit = run_cli(root, "fit --data " + manifest + " --k 2 --j 2,2 --out fit");
    REQUIRE(fit.code == 0);
    CHECK(fit.output.find("converged=yes") != std::string::npos);
    CHECK(fs::exists(root / "fit" / "model.json"));
    CHECK(fs::exists(root / "fit" / "loglik.csv"));
    for (const char* name : kNetworkFiles) CHECK(fs::exists(root / "fit" / name));

    // same inputs, same model
    REQUIRE(run_cli(root, "fit --data " + manifest + " --k 2 --j 2,2 --out fit2").code == 0);
    CHECK(testing::read_file(root / "fit" / "model.json") == testing::read_file(root / "fit2" / "model.json"));

    const Run net = run_cli(root, "network --model fit/model.json --threshold-alpha 0.05 --hubs hubs.csv --out net");
    REQUIRE(net.code == 0);
    CHECK(net.output.find("threshold=") != std::string::npos);
    const std::string hubs = testing::read_file(root / "hubs.csv");
    CHECK(hubs.rfind("node,group,score\n", 0) == 0);
    // 12 nodes in each of the shared and two study groups
    CHECK(count_lines(hubs) == 1 + 3 * 12);
    CHECK(run_cli(root, "network --model fit/model.json --threshold-alpha 0.05 --threshold-value 0.1").code == 2);

    const Run value = run_cli(root, "network --model fit/model.json --threshold-value 0.2 --out net_value");
    CHECK(value.code == 0);
    CHECK(value.output.find("threshold=0.2") != std::string::npos);

    REQUIRE(run_cli(root, "benchmark --data " + manifest + " --out glasso").code == 0);
    for (const char* name : kNetworkFiles) CHECK(fs::exists(root / "glasso" / name));
    CHECK(run_cli(root, "benchmark --data " + manifest + " --grid 0.1,-1 --out bad").code == 1);

    REQUIRE(run_cli(root, "evaluate --estimated fit --truth sim/rep_1/truth --method mine --setting-label S --out ev")
                .code == 0);
    const std::string summary = testing::read_file(root / "ev" / "metrics_summary.csv");
    CHECK(summary.rfind("Method,Setting,Study,Metric,Median,2.5th percentile,97.5th percentile\n", 0) == 0);
    CHECK(count_lines(summary) == 1 + 3 * 3);
    CHECK(summary.find("mine,S,Shared,matrix_rv,0.9") != std::string::npos);
    CHECK(fs::exists(root / "ev" / "metrics_long.csv"));
  }

  SUBCASE("strict mode reports non-convergence") {
    const Run r = run_cli(root, "fit --data sim/rep_1/data/manifest.json --k 2 --j 2,2 --max-iter 2 --strict --out s");
    CHECK(r.code == 3);
    CHECK(run_cli(root, "fit --data sim/rep_1/data/manifest.json --k 2 --j 2,2 --max-iter 2 --out s").code == 0);
  }

  SUBCASE("factor counts can be estimated") {
    const Run r = run_cli(root, "fit --data sim/rep_1/data/manifest.json --auto-factors --out auto");
    REQUIRE(r.code == 0);
    CHECK(fs::exists(root / "auto" / "factors.json"));
    CHECK(run_cli(root, "fit --data sim/rep_1/data/manifest.json --auto-factors --k 2 --j 2,2").code == 2);
  }

  SUBCASE("mismatched factor counts fail") {
    CHECK(run_cli(root, "fit --data sim/rep_1/data/manifest.json --k 2 --j 2,2,2 --out bad").code == 1);
    CHECK(run_cli(root, "fit --data sim/rep_1/data/manifest.json --k 2").code == 2);
  }
}

TEST_CASE("JSON config mirrors command-line flags") {
  testing::TempDir dir("cli_config");
  const fs::path root = dir.path();
  REQUIRE(run_cli(root, "simulate --setting fewer-predictors --seed 9 --out-dir flags").code == 0);
  testing::write_file(root / "sim.json",
                      R"({"simulate": {"setting": "fewer-predictors", "seed": 9, "out-dir": "config"}})");
  REQUIRE(run_cli(root, "--config sim.json simulate").code == 0);
  CHECK(testing::read_file(root / "flags" / "rep_1" / "data" / "study_1.csv") ==
        testing::read_file(root / "config" / "rep_1" / "data" / "study_1.csv"));

  testing::write_file(root / "fit.json",
                      R"({"fit": {"data": "flags/rep_1/data/manifest.json", "k": 2, "j": [2, 2], "out": "fitc"}})");
  REQUIRE(run_cli(root, "--config fit.json fit").code == 0);
  REQUIRE(run_cli(root, "fit --data flags/rep_1/data/manifest.json --k 2 --j 2,2 --out fitf").code == 0);
  CHECK(testing::read_file(root / "fitc" / "model.json") == testing::read_file(root / "fitf" / "model.json"));

  testing::write_file(root / "broken.json", "{not json");
  CHECK(run_cli(root, "--config broken.json simulate --setting 2").code == 2);
}

TEST_CASE("output directory defaults to the environment variable") {
  testing::TempDir dir("cli_env");
  REQUIRE(run_cli(dir.path(), "simulate --setting fewer-predictors", "MSFAX_OUT_DIR=from_env").code == 0);
  CHECK(fs::exists(dir / "from_env" / "rep_1" / "data" / "manifest.json"));
}

TEST_CASE("small table2 run") {
  testing::TempDir dir("cli_table2");
  const Run r = run_cli(dir.path(), "-q table2 --settings fewer-predictors --reps 2 --jobs 2 --out t2");
  REQUIRE(r.code == 0);
  const std::string table = testing::read_file(dir / "t2" / "table2.csv");
  CHECK(table.rfind("Method,Setting,Study,Median,2.5th percentile,97.5th percentile\n", 0) == 0);
  // three methods by three targets
  CHECK(count_lines(table) == 1 + 9);
  CHECK(table.find("MSFA-X: Est. Fac.,Setting 2,Shared") != std::string::npos);
  CHECK(table.find("glasso,Setting 2,Study 1") != std::string::npos);
  CHECK(fs::exists(dir / "t2" / "metrics_long.csv"));
}
