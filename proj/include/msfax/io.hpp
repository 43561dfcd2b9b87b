#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "msfax/core.hpp"
#include "msfax/decompose.hpp"
#include "msfax/factors.hpp"
#include "msfax/metrics.hpp"
#include "msfax/simulate.hpp"

namespace msfax::io {

namespace fs = std::filesystem;

/// Shortest decimal representation that round-trips.
std::string format_double(double value);

struct CsvMatrix {
  std::vector<std::string> header;
  Matrix values;
};

CsvMatrix read_csv_matrix(const fs::path& path);
void write_csv_matrix(const fs::path& path, const std::vector<std::string>& header, const Matrix& values);

// Dataset: one CSV per study (header = predictor names) and a JSON manifest
//   {"predictors": [...], "studies": [{"name": "...", "file": "study_1.csv"}, ...]}
// with study files resolved relative to the manifest.
MultiStudyDataset load_dataset(const fs::path& manifest);
void save_dataset(const fs::path& dir, const MultiStudyDataset& data, const std::string& manifest_name = "manifest.json");

// Model: {"p", "k", "j", "S", "phi", "lambdas", "psi", "gamma", "etas"} with
// matrices as arrays of rows. gamma / etas are optional on input (filled by
// the midpoint noise split when absent). "n", "predictor_names" and
// "study_names" are optional metadata.
struct ModelDocument {
  MsfaxModel model;
  std::vector<std::string> predictor_names;
  std::vector<std::string> study_names;
  std::vector<long long> n;
};

ModelDocument load_model(const fs::path& path);
void save_model(const fs::path& path, const ModelDocument& doc);
std::string model_to_json(const ModelDocument& doc);
ModelDocument model_from_json(const std::string& text);

void write_loglik_trace(const fs::path& path, const std::vector<double>& trace);

/// Dense CSV (<prefix>_<target>.csv) and edge list (<prefix>_<target>_edges.csv,
/// columns node_i,node_j,partial_correlation; nonzero upper-triangle entries).
void write_network(const fs::path& dir, const std::string& prefix, const std::string& target, const GgmNetwork& net,
                   const std::vector<std::string>& names);
GgmNetwork read_network(const fs::path& dense_csv);

/// Targets are "shared" and "study_<s>" (1-based).
void write_network_set(const fs::path& dir, const std::string& prefix, const NetworkSet& nets,
                       const std::vector<std::string>& names);
NetworkSet read_network_set(const fs::path& dir, const std::string& prefix);

/// Columns node,group,score.
void write_hub_scores(const fs::path& path, const std::vector<std::string>& names, const std::string& group,
                      const Vector& scores, bool append = false);

/// Long format: method,setting,target,metric,replicate,value
void write_metrics_long(const fs::path& path, const std::vector<MetricRecord>& records);
/// One row per (method, setting, target, metric):
/// Method,Setting,Study,Metric,Median,2.5th percentile,97.5th percentile
void write_metrics_summary(const fs::path& path, const std::vector<MetricRecord>& records);
/// Matrix RV only, in the layout Method,Setting,Study,Median,2.5th percentile,97.5th percentile
void write_table2(const fs::path& path, const std::vector<MetricRecord>& records);

std::string factor_estimate_to_json(const FactorCountEstimate& est);

/// {"name", "n": [...], "p", "k", "j": [...], "noise": "equal" | "gamma_dominant" |
///  "eta_dominant", "exact_zeros", "seed"}
SimulationSetting load_setting(const fs::path& path);
std::string setting_to_json(const SimulationSetting& setting);

void ensure_directory(const fs::path& dir);

}  // namespace msfax::io
