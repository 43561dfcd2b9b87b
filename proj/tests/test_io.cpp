#include <doctest.h>

#include <cmath>
#include <limits>

#include "msfax/io.hpp"
#include "support.hpp"
#include "tempdir.hpp"

using namespace msfax;
using testing::TempDir;

TEST_CASE("number formatting round-trips") {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> n(0.0, 1e3);
  for (int rep = 0; rep < 200; ++rep) {
    const double v = n(rng);
    CHECK(std::stod(io::format_double(v)) == v);
  }
  CHECK(io::format_double(0.5) == "0.5");
  CHECK(io::format_double(std::nan("")) == "NA");
}

TEST_CASE("CSV matrices") {
  TempDir dir("csv");
  Matrix m(2, 3);
  m << 1.0, -2.5, 1e-300, 0.1, 3.0, -0.0;
  io::write_csv_matrix(dir / "m.csv", {"a", "b,c", "d\"q"}, m);
  const io::CsvMatrix back = io::read_csv_matrix(dir / "m.csv");
  CHECK(back.header == std::vector<std::string>{"a", "b,c", "d\"q"});
  CHECK(back.values == m);

  testing::write_file(dir / "bad.csv", "a,b\n1,2\n3\n");
  CHECK_THROWS_AS(io::read_csv_matrix(dir / "bad.csv"), Error);
  testing::write_file(dir / "text.csv", "a,b\n1,x\n");
  try {
    io::read_csv_matrix(dir / "text.csv");
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::parse);
  }
  CHECK_THROWS_AS(io::read_csv_matrix(dir / "missing.csv"), Error);
  CHECK_THROWS_AS(io::write_csv_matrix(dir / "x.csv", {"a"}, m), Error);
}

TEST_CASE("dataset round trip") {
  TempDir dir("dataset");
  std::mt19937_64 rng(2);
  const MultiStudyDataset d({oracle::random_matrix(5, 3, rng), oracle::random_matrix(4, 3, rng)}, {"x", "y", "z"},
                            {"first", "second"});
  io::save_dataset(dir.path(), d);
  const MultiStudyDataset back = io::load_dataset(dir / "manifest.json");
  CHECK(back.predictor_names() == d.predictor_names());
  CHECK(back.study_names() == d.study_names());
  for (std::size_t s = 0; s < 2; ++s) CHECK(back.study(s) == d.study(s));

  testing::write_file(dir / "broken.json", "{\"studies\": [");
  CHECK_THROWS_AS(io::load_dataset(dir / "broken.json"), Error);
  testing::write_file(dir / "other.csv", "q,r,s\n1,2,3\n4,5,6\n");
  testing::write_file(dir / "mismatch.json",
                      R"({"predictors": ["x", "y", "z"], "studies": [{"file": "other.csv"}]})");
  CHECK_THROWS_AS(io::load_dataset(dir / "mismatch.json"), Error);
}

TEST_CASE("model round trip") {
  TempDir dir("model");
  std::mt19937_64 rng(3);
  const MsfaParameters params = testing::random_parameters(5, 2, {1, 2}, rng);
  const NoiseSplit split = split_noise(params.psi);
  io::ModelDocument doc{MsfaxModel(params, split.gamma, split.etas), {"a", "b", "c", "d", "e"}, {"s1", "s2"}, {10, 20}};
  io::save_model(dir / "model.json", doc);
  const io::ModelDocument back = io::load_model(dir / "model.json");
  CHECK(back.model.phi().values() == doc.model.phi().values());
  CHECK(back.model.gamma() == doc.model.gamma());
  for (std::size_t s = 0; s < 2; ++s) {
    CHECK(back.model.lambdas()[s].values() == doc.model.lambdas()[s].values());
    CHECK(back.model.etas()[s] == doc.model.etas()[s]);
  }
  CHECK(back.predictor_names == doc.predictor_names);
  CHECK(back.study_names == doc.study_names);
  CHECK(back.n == doc.n);

  SUBCASE("noise split is filled in when absent") {
    auto text = io::model_to_json(doc);
    auto j = text.find("\"gamma\"");
    REQUIRE(j != std::string::npos);
    // drop gamma by renaming the key
    text.replace(j, 7, "\"unused\"");
    const io::ModelDocument filled = io::model_from_json(text);
    CHECK((filled.model.gamma() - split.gamma).cwiseAbs().maxCoeff() == 0.0);
  }

  CHECK_THROWS_AS(io::model_from_json("{}"), Error);
  CHECK_THROWS_AS(io::model_from_json("not json"), Error);
}

TEST_CASE("network files") {
  TempDir dir("network");
  Matrix m = Matrix::Zero(3, 3);
  m(0, 1) = m(1, 0) = 0.25;
  m(1, 2) = m(2, 1) = -0.5;
  NetworkSet set{GgmNetwork(m), {GgmNetwork(m * 0.5), GgmNetwork(m * 4.0, true)}};
  const std::vector<std::string> names{"a", "b", "c"};
  io::write_network_set(dir.path(), "est", set, names);
  CHECK(std::filesystem::exists(dir / "est_shared.csv"));
  CHECK(std::filesystem::exists(dir / "est_study_2_edges.csv"));
  const std::string edges = testing::read_file(dir / "est_shared_edges.csv");
  CHECK(edges == "node_i,node_j,partial_correlation\na,b,0.25\nb,c,-0.5\n");

  const NetworkSet back = io::read_network_set(dir.path(), "est");
  CHECK(back.shared.matrix() == m);
  REQUIRE(back.specific.size() == 2);
  CHECK_FALSE(back.specific[0].is_difference());
  CHECK(back.specific[1].is_difference());
  CHECK(back.specific[1].matrix() == m * 4.0);

  io::write_network(dir.path(), "", "shared", set.shared, names);
  CHECK(std::filesystem::exists(dir / "shared.csv"));
  CHECK(io::read_network_set(dir.path(), "").specific.empty());
  CHECK_THROWS_AS(io::write_network(dir.path(), "x", "shared", set.shared, {"a"}), Error);
}

TEST_CASE("hub score files append") {
  TempDir dir("hubs");
  const auto path = dir / "hubs.csv";
  io::write_hub_scores(path, {"a", "b"}, "shared", Vector::Ones(2), true);
  io::write_hub_scores(path, {"a", "b"}, "study_1", Vector::Zero(2), true);
  CHECK(testing::read_file(path) == "node,group,score\na,shared,1\nb,shared,1\na,study_1,0\nb,study_1,0\n");
  io::write_hub_scores(path, {"a"}, "shared", Vector::Ones(1));
  CHECK(testing::read_file(path) == "node,group,score\na,shared,1\n");
}

TEST_CASE("metric reports") {
  TempDir dir("metrics");
  std::vector<MetricRecord> records;
  for (int r = 1; r <= 3; ++r) {
    records.push_back({"glasso", "Setting 1", "Shared", r, 0.1 * r, 0.5, 0.9});
    records.push_back({"MSFA-X: True Fac.", "Setting 1", "Study 1", r, 0.9, std::nan(""), 1.0});
  }
  io::write_metrics_long(dir / "long.csv", records);
  io::write_metrics_summary(dir / "summary.csv", records);
  io::write_table2(dir / "table2.csv", records);

  const std::string long_text = testing::read_file(dir / "long.csv");
  CHECK(long_text.rfind("method,setting,target,metric,replicate,value\nglasso,Setting 1,Shared,matrix_rv,1,0.1\n", 0) == 0);
  CHECK(long_text.find("relative_euclidean,1,NA") != std::string::npos);

  const std::string table = testing::read_file(dir / "table2.csv");
  CHECK(table ==
        "Method,Setting,Study,Median,2.5th percentile,97.5th percentile\n"
        "glasso,Setting 1,Shared,0.2,0.10500000000000001,0.29500000000000004\n"
        "MSFA-X: True Fac.,Setting 1,Study 1,0.9,0.9,0.9\n");

  const std::string summary = testing::read_file(dir / "summary.csv");
  CHECK(summary.find("MSFA-X: True Fac.,Setting 1,Study 1,relative_euclidean,NA,NA,NA") != std::string::npos);
  CHECK(summary.find("glasso,Setting 1,Shared,cosine,0.9,0.9,0.9") != std::string::npos);
}

TEST_CASE("settings and factor estimates as JSON") {
  TempDir dir("setting");
  SimulationSetting s = builtin_setting("setting7");
  s.seed = 1234567890123ULL;
  testing::write_file(dir / "s.json", io::setting_to_json(s));
  const SimulationSetting back = io::load_setting(dir / "s.json");
  CHECK(back.name == s.name);
  CHECK(back.n == s.n);
  CHECK(back.j == s.j);
  CHECK(back.noise == s.noise);
  CHECK(back.seed == s.seed);
  CHECK(back.exact_zeros == s.exact_zeros);

  testing::write_file(dir / "bad.json", R"({"n": [100, 100], "p": 3, "k": 2, "j": [2, 2]})");
  CHECK_THROWS_AS(io::load_setting(dir / "bad.json"), Error);
  testing::write_file(dir / "noise.json", R"({"n": [100, 100], "p": 12, "k": 2, "j": [2, 2], "noise": "x"})");
  CHECK_THROWS_AS(io::load_setting(dir / "noise.json"), Error);

  FactorCountEstimate est;
  est.total_per_study = {4, 4};
  est.k = 2;
  est.j = {2, 2};
  est.shared_eigen_fractions = {0.6, 0.4, 0.0, 0.0};
  const std::string text = io::factor_estimate_to_json(est);
  CHECK(text.find("\"k\": 2") != std::string::npos);
  CHECK(text.find("\"fractions\"") != std::string::npos);
  CHECK(text.find("warnings") == std::string::npos);
}
