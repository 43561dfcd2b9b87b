#include "msfax/io.hpp"

#include <nlohmann/json.hpp>

#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <tuple>

namespace msfax::io {

using json = nlohmann::json;

namespace {

std::ifstream open_in(const fs::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::io, "cannot open '" + path.string() + "' for reading");
  return in;
}

std::ofstream open_out(const fs::path& path, bool append = false) {
  if (path.has_parent_path()) ensure_directory(path.parent_path());
  std::ofstream out(path, append ? std::ios::app : std::ios::trunc);
  if (!out) fail(ErrorCode::io, "cannot open '" + path.string() + "' for writing");
  return out;
}

std::string slurp(const fs::path& path) {
  auto in = open_in(path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const fs::path& path, const std::string& text) {
  auto out = open_out(path);
  out << text;
  if (!out) fail(ErrorCode::io, "failed writing '" + path.string() + "'");
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        field += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        field += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(field));
      field.clear();
    } else if (c != '\r') {
      field += c;
    }
  }
  fields.push_back(std::move(field));
  return fields;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

double parse_double(const std::string& text, const fs::path& path, std::size_t line) {
  const char* begin = text.data();
  const char* end = begin + text.size();
  while (begin < end && *begin == ' ') ++begin;
  while (end > begin && end[-1] == ' ') --end;
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end) {
    fail(ErrorCode::parse, path.string() + ":" + std::to_string(line) + ": not a number: '" + text + "'");
  }
  return value;
}

json matrix_to_json(const Matrix& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

json vector_to_json(const Vector& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

Matrix matrix_from_json(const json& j, Eigen::Index rows, Eigen::Index cols, const std::string& what) {
  if (!j.is_array() || static_cast<Eigen::Index>(j.size()) != rows) {
    fail(ErrorCode::parse, what + " must be an array of " + std::to_string(rows) + " rows");
  }
  Matrix m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const json& row = j[static_cast<std::size_t>(r)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols) {
      fail(ErrorCode::parse, what + " row " + std::to_string(r) + " must have " + std::to_string(cols) + " entries");
    }
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = row[static_cast<std::size_t>(c)].get<double>();
  }
  return m;
}

Vector vector_from_json(const json& j, Eigen::Index size, const std::string& what) {
  if (!j.is_array() || static_cast<Eigen::Index>(j.size()) != size) {
    fail(ErrorCode::parse, what + " must be an array of length " + std::to_string(size));
  }
  Vector v(size);
  for (Eigen::Index i = 0; i < size; ++i) v(i) = j[static_cast<std::size_t>(i)].get<double>();
  return v;
}

template <typename F>
auto parse_json(F&& f, const std::string& what) {
  try {
    return f();
  } catch (const json::exception& e) {
    fail(ErrorCode::parse, what + ": " + e.what());
  }
}

std::string target_name(std::size_t s) { return "study_" + std::to_string(s + 1); }

}  // namespace

void ensure_directory(const fs::path& dir) {
  if (dir.empty()) return;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) fail(ErrorCode::io, "cannot create directory '" + dir.string() + "'");
}

std::string format_double(double value) {
  if (std::isnan(value)) return "NA";
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, ptr);
}

CsvMatrix read_csv_matrix(const fs::path& path) {
  auto in = open_in(path);
  CsvMatrix out;
  std::string line;
  if (!std::getline(in, line)) fail(ErrorCode::parse, path.string() + ": empty file");
  out.header = split_csv_line(line);
  std::vector<std::vector<double>> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    auto fields = split_csv_line(line);
    if (fields.size() != out.header.size()) {
      fail(ErrorCode::parse, path.string() + ":" + std::to_string(line_no) + ": expected " +
                                 std::to_string(out.header.size()) + " fields");
    }
    std::vector<double> row;
    row.reserve(fields.size());
    for (const auto& f : fields) row.push_back(parse_double(f, path, line_no));
    rows.push_back(std::move(row));
  }
  out.values.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(out.header.size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t c = 0; c < rows[r].size(); ++c) {
      out.values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
    }
  }
  return out;
}

void write_csv_matrix(const fs::path& path, const std::vector<std::string>& header, const Matrix& values) {
  require(static_cast<Eigen::Index>(header.size()) == values.cols(), "CSV header does not match the column count");
  auto out = open_out(path);
  for (std::size_t c = 0; c < header.size(); ++c) out << (c ? "," : "") << csv_field(header[c]);
  out << '\n';
  for (Eigen::Index r = 0; r < values.rows(); ++r) {
    for (Eigen::Index c = 0; c < values.cols(); ++c) out << (c ? "," : "") << format_double(values(r, c));
    out << '\n';
  }
  if (!out) fail(ErrorCode::io, "failed writing '" + path.string() + "'");
}

MultiStudyDataset load_dataset(const fs::path& manifest) {
  const json doc = parse_json([&] { return json::parse(slurp(manifest)); }, manifest.string());
  const fs::path base = manifest.parent_path();
  return parse_json(
      [&] {
        std::vector<Matrix> studies;
        std::vector<std::string> names;
        std::vector<std::string> predictors;
        if (doc.contains("predictors")) predictors = doc.at("predictors").get<std::vector<std::string>>();
        for (const auto& entry : doc.at("studies")) {
          const fs::path file = base / entry.at("file").get<std::string>();
          CsvMatrix csv = read_csv_matrix(file);
          if (predictors.empty()) predictors = csv.header;
          if (csv.header != predictors) {
            fail(ErrorCode::parse, file.string() + ": predictor columns differ from the manifest");
          }
          names.push_back(entry.value("name", file.stem().string()));
          studies.push_back(std::move(csv.values));
        }
        return MultiStudyDataset(std::move(studies), std::move(predictors), std::move(names));
      },
      manifest.string());
}

void save_dataset(const fs::path& dir, const MultiStudyDataset& data, const std::string& manifest_name) {
  ensure_directory(dir);
  json doc;
  doc["predictors"] = data.predictor_names();
  doc["studies"] = json::array();
  for (std::size_t s = 0; s < data.num_studies(); ++s) {
    const std::string file = target_name(s) + ".csv";
    write_csv_matrix(dir / file, data.predictor_names(), data.study(s));
    doc["studies"].push_back({{"name", data.study_names()[s]}, {"file", file}});
  }
  write_text(dir / manifest_name, doc.dump(2) + "\n");
}

std::string model_to_json(const ModelDocument& d) {
  const MsfaxModel& m = d.model;
  json doc;
  doc["p"] = m.num_predictors();
  doc["k"] = m.shared_factors();
  doc["j"] = m.specific_factors();
  doc["S"] = m.num_studies();
  doc["phi"] = matrix_to_json(m.phi().values());
  doc["lambdas"] = json::array();
  doc["psi"] = json::array();
  doc["etas"] = json::array();
  for (std::size_t s = 0; s < m.num_studies(); ++s) {
    doc["lambdas"].push_back(matrix_to_json(m.lambdas()[s].values()));
    doc["psi"].push_back(vector_to_json(m.psi()[s]));
    doc["etas"].push_back(vector_to_json(m.etas()[s]));
  }
  doc["gamma"] = vector_to_json(m.gamma());
  if (!d.n.empty()) doc["n"] = d.n;
  if (!d.predictor_names.empty()) doc["predictor_names"] = d.predictor_names;
  if (!d.study_names.empty()) doc["study_names"] = d.study_names;
  return doc.dump(2) + "\n";
}

ModelDocument model_from_json(const std::string& text) {
  return parse_json(
      [&] {
        const json doc = json::parse(text);
        const auto p = doc.at("p").get<Eigen::Index>();
        const auto k = doc.at("k").get<Eigen::Index>();
        const auto j = doc.at("j").get<std::vector<Eigen::Index>>();
        const auto S = doc.at("S").get<std::size_t>();
        if (j.size() != S) fail(ErrorCode::parse, "model: j must have S entries");
        if (p < 1 || k < 1) fail(ErrorCode::parse, "model: p and k must be positive");
        MsfaParameters params;
        params.phi = LoadingsMatrix(matrix_from_json(doc.at("phi"), p, k, "phi"));
        if (doc.at("lambdas").size() != S || doc.at("psi").size() != S) {
          fail(ErrorCode::parse, "model: lambdas and psi need S entries");
        }
        for (std::size_t s = 0; s < S; ++s) {
          params.lambdas.emplace_back(matrix_from_json(doc.at("lambdas")[s], p, j[s], "lambdas[" + std::to_string(s) + "]"));
          params.psi.push_back(vector_from_json(doc.at("psi")[s], p, "psi[" + std::to_string(s) + "]"));
        }
        ModelDocument out;
        if (doc.contains("gamma") && doc.contains("etas") && !doc.at("gamma").is_null()) {
          Vector gamma = vector_from_json(doc.at("gamma"), p, "gamma");
          std::vector<Vector> etas;
          if (doc.at("etas").size() != S) fail(ErrorCode::parse, "model: etas need S entries");
          for (std::size_t s = 0; s < S; ++s) etas.push_back(vector_from_json(doc.at("etas")[s], p, "etas"));
          out.model = MsfaxModel(std::move(params), std::move(gamma), std::move(etas));
        } else {
          NoiseSplit split = split_noise(params.psi);
          out.model = MsfaxModel(std::move(params), std::move(split.gamma), std::move(split.etas));
        }
        if (doc.contains("n")) out.n = doc.at("n").get<std::vector<long long>>();
        if (doc.contains("predictor_names")) out.predictor_names = doc.at("predictor_names").get<std::vector<std::string>>();
        if (doc.contains("study_names")) out.study_names = doc.at("study_names").get<std::vector<std::string>>();
        return out;
      },
      "model");
}

ModelDocument load_model(const fs::path& path) { return model_from_json(slurp(path)); }

void save_model(const fs::path& path, const ModelDocument& doc) { write_text(path, model_to_json(doc)); }

void write_loglik_trace(const fs::path& path, const std::vector<double>& trace) {
  auto out = open_out(path);
  out << "iteration,loglik\n";
  for (std::size_t i = 0; i < trace.size(); ++i) out << i + 1 << ',' << format_double(trace[i]) << '\n';
}

void write_network(const fs::path& dir, const std::string& prefix, const std::string& target, const GgmNetwork& net,
                   const std::vector<std::string>& names) {
  require(static_cast<Eigen::Index>(names.size()) == net.size(), "need one name per network node");
  const std::string stem = prefix.empty() ? target : prefix + "_" + target;
  write_csv_matrix(dir / (stem + ".csv"), names, net.matrix());
  auto out = open_out(dir / (stem + "_edges.csv"));
  out << "node_i,node_j,partial_correlation\n";
  const Matrix& m = net.matrix();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = i + 1; j < m.cols(); ++j) {
      if (m(i, j) != 0.0) {
        out << csv_field(names[static_cast<std::size_t>(i)]) << ',' << csv_field(names[static_cast<std::size_t>(j)])
            << ',' << format_double(m(i, j)) << '\n';
      }
    }
  }
}

GgmNetwork read_network(const fs::path& dense_csv) {
  CsvMatrix csv = read_csv_matrix(dense_csv);
  if (csv.values.rows() != csv.values.cols()) fail(ErrorCode::parse, dense_csv.string() + ": network must be square");
  const bool difference = csv.values.size() > 0 && csv.values.cwiseAbs().maxCoeff() > 1.0;
  return GgmNetwork(std::move(csv.values), difference);
}

void write_network_set(const fs::path& dir, const std::string& prefix, const NetworkSet& nets,
                       const std::vector<std::string>& names) {
  ensure_directory(dir);
  write_network(dir, prefix, "shared", nets.shared, names);
  for (std::size_t s = 0; s < nets.specific.size(); ++s) write_network(dir, prefix, target_name(s), nets.specific[s], names);
}

NetworkSet read_network_set(const fs::path& dir, const std::string& prefix) {
  const std::string head = prefix.empty() ? "" : prefix + "_";
  NetworkSet out;
  out.shared = read_network(dir / (head + "shared.csv"));
  for (std::size_t s = 0;; ++s) {
    const fs::path file = dir / (head + target_name(s) + ".csv");
    if (!fs::exists(file)) break;
    out.specific.push_back(read_network(file));
  }
  return out;
}

void write_hub_scores(const fs::path& path, const std::vector<std::string>& names, const std::string& group,
                      const Vector& scores, bool append) {
  require(static_cast<Eigen::Index>(names.size()) == scores.size(), "need one name per hub score");
  const bool header = !append || !fs::exists(path) || fs::file_size(path) == 0;
  auto out = open_out(path, append);
  if (header) out << "node,group,score\n";
  for (std::size_t i = 0; i < names.size(); ++i) {
    out << csv_field(names[i]) << ',' << csv_field(group) << ',' << format_double(scores(static_cast<Eigen::Index>(i)))
        << '\n';
  }
}

namespace {

using SummaryKey = std::tuple<std::string, std::string, std::string, std::string>;

std::vector<std::pair<SummaryKey, std::vector<double>>> group_metrics(const std::vector<MetricRecord>& records,
                                                                      bool rv_only) {
  std::vector<std::pair<SummaryKey, std::vector<double>>> groups;
  std::map<SummaryKey, std::size_t> index;
  auto add = [&](const MetricRecord& r, const char* metric, double value) {
    SummaryKey key{r.method, r.setting, r.target, metric};
    auto it = index.find(key);
    if (it == index.end()) {
      it = index.emplace(key, groups.size()).first;
      groups.push_back({key, {}});
    }
    groups[it->second].second.push_back(value);
  };
  for (const auto& r : records) {
    add(r, "matrix_rv", r.matrix_rv);
    if (!rv_only) {
      add(r, "relative_euclidean", r.relative_euclidean);
      add(r, "cosine", r.cosine);
    }
  }
  return groups;
}

}  // namespace

void write_metrics_long(const fs::path& path, const std::vector<MetricRecord>& records) {
  auto out = open_out(path);
  out << "method,setting,target,metric,replicate,value\n";
  for (const auto& r : records) {
    const std::string head = csv_field(r.method) + ',' + csv_field(r.setting) + ',' + csv_field(r.target) + ',';
    out << head << "matrix_rv," << r.replicate << ',' << format_double(r.matrix_rv) << '\n';
    out << head << "relative_euclidean," << r.replicate << ',' << format_double(r.relative_euclidean) << '\n';
    out << head << "cosine," << r.replicate << ',' << format_double(r.cosine) << '\n';
  }
}

void write_metrics_summary(const fs::path& path, const std::vector<MetricRecord>& records) {
  auto out = open_out(path);
  out << "Method,Setting,Study,Metric,Median,2.5th percentile,97.5th percentile\n";
  for (const auto& [key, values] : group_metrics(records, false)) {
    const Summary s = summarize(values);
    out << csv_field(std::get<0>(key)) << ',' << csv_field(std::get<1>(key)) << ',' << csv_field(std::get<2>(key))
        << ',' << std::get<3>(key) << ',' << format_double(s.median) << ',' << format_double(s.q025) << ','
        << format_double(s.q975) << '\n';
  }
}

void write_table2(const fs::path& path, const std::vector<MetricRecord>& records) {
  auto out = open_out(path);
  out << "Method,Setting,Study,Median,2.5th percentile,97.5th percentile\n";
  for (const auto& [key, values] : group_metrics(records, true)) {
    const Summary s = summarize(values);
    out << csv_field(std::get<0>(key)) << ',' << csv_field(std::get<1>(key)) << ',' << csv_field(std::get<2>(key))
        << ',' << format_double(s.median) << ',' << format_double(s.q025) << ',' << format_double(s.q975) << '\n';
  }
}

std::string factor_estimate_to_json(const FactorCountEstimate& est) {
  json doc;
  doc["t"] = est.total_per_study;
  doc["k"] = est.k;
  doc["j"] = est.j;
  doc["fractions"] = est.shared_eigen_fractions;
  if (!est.warnings.empty()) doc["warnings"] = est.warnings;
  return doc.dump(2) + "\n";
}

SimulationSetting load_setting(const fs::path& path) {
  const std::string text = slurp(path);
  return parse_json(
      [&] {
        const json doc = json::parse(text);
        SimulationSetting s;
        s.name = doc.value("name", path.stem().string());
        s.n = doc.at("n").get<std::vector<int>>();
        s.p = doc.at("p").get<int>();
        s.k = doc.at("k").get<int>();
        s.j = doc.at("j").get<std::vector<int>>();
        s.noise = parse_noise_regime(doc.value("noise", std::string("equal")));
        s.exact_zeros = doc.value("exact_zeros", true);
        s.seed = doc.value("seed", std::uint64_t{1});
        s.validate();
        return s;
      },
      path.string());
}

std::string setting_to_json(const SimulationSetting& s) {
  json doc;
  doc["name"] = s.name;
  doc["n"] = s.n;
  doc["p"] = s.p;
  doc["k"] = s.k;
  doc["j"] = s.j;
  doc["noise"] = to_string(s.noise);
  doc["exact_zeros"] = s.exact_zeros;
  doc["seed"] = s.seed;
  return doc.dump(2) + "\n";
}

}  // namespace msfax::io
