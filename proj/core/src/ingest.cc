// Copyright 2026 The FairMTL Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "fairmtl/ingest.h"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <unordered_map>

#include "fairmtl/csv.h"

namespace fairmtl {
namespace {

using nlohmann::json;

bool IsMissing(const std::string& cell) {
  std::string v = cell;
  v.erase(0, v.find_first_not_of(' '));
  v.erase(v.find_last_not_of(' ') + 1);
  return v.empty() || v == "NA" || v == "N/A" || v == "NaN" || v == "nan" ||
         v == "null";
}

std::string Trim(const std::string& s) {
  const auto b = s.find_first_not_of(' ');
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(' ');
  return s.substr(b, e - b + 1);
}

// Type-7 quantile of a sorted sample.
double SortedQuantile(const std::vector<double>& sorted, double q) {
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

std::vector<std::string> BinNames(const std::vector<double>& edges) {
  std::vector<std::string> names;
  if (edges.empty()) return {"all"};
  names.push_back("<" + FormatDouble(edges.front()));
  for (std::size_t i = 0; i + 1 < edges.size(); ++i) {
    names.push_back("[" + FormatDouble(edges[i]) + "," + FormatDouble(edges[i + 1]) + ")");
  }
  names.push_back(">=" + FormatDouble(edges.back()));
  return names;
}

int BinOf(double value, const std::vector<double>& edges) {
  return static_cast<int>(std::upper_bound(edges.begin(), edges.end(), value) -
                          edges.begin());
}

// Computes per-column mean / scale over train rows for standardized columns.
Standardization FitStandardization(const Matrix& raw, const std::vector<bool>& standardized,
                                   const std::vector<Split>& split) {
  const auto d = static_cast<std::size_t>(raw.cols());
  Standardization st;
  st.mean.assign(d, 0.0);
  st.scale.assign(d, 1.0);
  st.standardized = standardized;
  std::vector<Eigen::Index> train;
  for (std::size_t i = 0; i < split.size(); ++i) {
    if (split[i] == Split::kTrain) train.push_back(static_cast<Eigen::Index>(i));
  }
  if (train.empty()) throw InputError("train split is empty");
  for (std::size_t j = 0; j < d; ++j) {
    if (!standardized[j]) continue;
    const auto col = static_cast<Eigen::Index>(j);
    double mean = 0.0;
    for (Eigen::Index r : train) mean += raw(r, col);
    mean /= static_cast<double>(train.size());
    double var = 0.0;
    for (Eigen::Index r : train) var += (raw(r, col) - mean) * (raw(r, col) - mean);
    var /= static_cast<double>(train.size());
    st.mean[j] = mean;
    // Constant columns are centered only.
    st.scale[j] = var > 0.0 ? std::sqrt(var) : 1.0;
  }
  return st;
}

Matrix ApplyStandardization(const Matrix& raw, const Standardization& st) {
  Matrix out = raw;
  for (Eigen::Index j = 0; j < raw.cols(); ++j) {
    const auto jj = static_cast<std::size_t>(j);
    out.col(j) = (raw.col(j).array() - st.mean[jj]) / st.scale[jj];
  }
  return out;
}

std::vector<double> TrainQuartiles(const std::vector<double>& values,
                                   const std::vector<Split>& split) {
  std::vector<double> train;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (split[i] == Split::kTrain) train.push_back(values[i]);
  }
  std::sort(train.begin(), train.end());
  std::vector<double> edges;
  if (train.empty()) return edges;
  for (double q : {0.25, 0.5, 0.75}) {
    const double e = SortedQuantile(train, q);
    if (edges.empty() || e > edges.back()) edges.push_back(e);
  }
  return edges;
}

}  // namespace

std::string ToString(ColumnKind kind) {
  switch (kind) {
    case ColumnKind::kNumeric: return "numeric";
    case ColumnKind::kCategorical: return "categorical";
    case ColumnKind::kSensitiveNumeric: return "sensitive-numeric";
    case ColumnKind::kSensitiveCategorical: return "sensitive-categorical";
    case ColumnKind::kLabel: return "label";
  }
  return "unknown";
}

ColumnKind ColumnKindFromString(const std::string& name) {
  static const std::map<std::string, ColumnKind> kKinds = {
      {"numeric", ColumnKind::kNumeric},
      {"categorical", ColumnKind::kCategorical},
      {"sensitive-numeric", ColumnKind::kSensitiveNumeric},
      {"sensitive-categorical", ColumnKind::kSensitiveCategorical},
      {"label", ColumnKind::kLabel},
  };
  auto it = kKinds.find(name);
  if (it == kKinds.end()) throw InputError("unknown column kind '" + name + "'");
  return it->second;
}

void FeatureSchema::Validate(bool require_sensitive) const {
  std::size_t labels = 0;
  std::set<std::string> names;
  for (const auto& col : columns) {
    if (col.name.empty()) throw InputError("schema: empty column name");
    if (!names.insert(col.name).second) throw SchemaError(col.name, "duplicate column");
    if (col.kind == ColumnKind::kLabel) ++labels;
    if (col.IsCategorical()) {
      if (col.vocabulary.empty()) throw SchemaError(col.name, "empty vocabulary");
      std::set<std::string> vocab(col.vocabulary.begin(), col.vocabulary.end());
      if (vocab.size() != col.vocabulary.size()) {
        throw SchemaError(col.name, "vocabulary contains duplicates");
      }
    }
    if (!std::is_sorted(col.bin_edges.begin(), col.bin_edges.end()) ||
        std::adjacent_find(col.bin_edges.begin(), col.bin_edges.end()) !=
            col.bin_edges.end()) {
      throw SchemaError(col.name, "bin_edges must be strictly increasing");
    }
  }
  if (labels != 1) {
    throw InputError("schema: expected exactly one label column, found " +
                     std::to_string(labels));
  }
  if (num_classes < 2) throw InputError("schema: num_classes must be >= 2");
  if (require_sensitive && !HasSensitive()) {
    throw InputError("schema: subgroup inference needs at least one sensitive column");
  }
}

std::size_t FeatureSchema::LabelIndex() const {
  for (std::size_t i = 0; i < columns.size(); ++i) {
    if (columns[i].kind == ColumnKind::kLabel) return i;
  }
  throw InputError("schema: no label column");
}

bool FeatureSchema::HasSensitive() const {
  return std::any_of(columns.begin(), columns.end(),
                     [](const ColumnSpec& c) { return c.IsSensitive(); });
}

json ToJson(const FeatureSchema& schema) {
  json cols = json::array();
  for (const auto& c : schema.columns) {
    json jc = {{"name", c.name}, {"kind", ToString(c.kind)}};
    if (c.IsCategorical()) jc["vocabulary"] = c.vocabulary;
    if (!c.bin_edges.empty()) jc["bin_edges"] = c.bin_edges;
    cols.push_back(std::move(jc));
  }
  return {{"num_classes", schema.num_classes}, {"columns", std::move(cols)}};
}

FeatureSchema SchemaFromJson(const json& j) {
  FeatureSchema schema;
  try {
    schema.num_classes = j.at("num_classes").get<int>();
    for (const auto& jc : j.at("columns")) {
      ColumnSpec c;
      c.name = jc.at("name").get<std::string>();
      c.kind = ColumnKindFromString(jc.at("kind").get<std::string>());
      if (jc.contains("vocabulary")) {
        c.vocabulary = jc.at("vocabulary").get<std::vector<std::string>>();
      }
      if (jc.contains("bin_edges")) {
        c.bin_edges = jc.at("bin_edges").get<std::vector<double>>();
      }
      schema.columns.push_back(std::move(c));
    }
  } catch (const json::exception& e) {
    throw InputError(std::string("schema JSON: ") + e.what());
  }
  schema.Validate();
  return schema;
}

FeatureSchema LoadSchema(const std::filesystem::path& path) {
  const json j = ReadJsonFile(path);
  return SchemaFromJson(j);
}

void SaveSchema(const FeatureSchema& schema, const std::filesystem::path& path) {
  WriteTextFile(path, ToJson(schema).dump(2) + "\n");
}

std::string ToString(Split split) {
  switch (split) {
    case Split::kTrain: return "train";
    case Split::kVal: return "val";
    case Split::kTest: return "test";
  }
  return "unknown";
}

Split SplitFromString(const std::string& name) {
  if (name == "train") return Split::kTrain;
  if (name == "val") return Split::kVal;
  if (name == "test") return Split::kTest;
  throw InputError("unknown split tag '" + name + "'");
}

void SplitRatios::Validate() const {
  if (train < 0.0 || val < 0.0 || test < 0.0) {
    throw InputError("split ratios must be non-negative");
  }
  if (!(train > 0.0)) throw InputError("train ratio must be positive");
  if (std::abs(train + val + test - 1.0) > 1e-9) {
    throw InputError("split ratios must sum to 1");
  }
}

int SplitRatios::NumSplits() const {
  return (train > 0.0) + (val > 0.0) + (test > 0.0);
}

Matrix Cohort::Sensitive() const {
  Matrix s(x.rows(), static_cast<Eigen::Index>(sensitive_columns.size()));
  for (std::size_t k = 0; k < sensitive_columns.size(); ++k) {
    s.col(static_cast<Eigen::Index>(k)) = x.col(sensitive_columns[k]);
  }
  return s;
}

std::vector<std::size_t> Cohort::Indices(Split which) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < split.size(); ++i) {
    if (split[i] == which) out.push_back(i);
  }
  return out;
}

const SensitiveAttribute& Cohort::Attribute(const std::string& name) const {
  for (const auto& a : attributes) {
    if (a.name == name) return a;
  }
  throw InputError("unknown sensitive attribute '" + name + "'");
}

std::vector<Split> AssignStratifiedSplit(const Labels& y, int num_classes,
                                         const SplitRatios& ratios, std::uint64_t seed) {
  ratios.Validate();
  const std::array<double, 3> r = {ratios.train, ratios.val, ratios.test};
  const int active = ratios.NumSplits();
  const std::size_t n = y.size();

  std::vector<std::vector<std::size_t>> by_class(static_cast<std::size_t>(num_classes));
  for (std::size_t i = 0; i < n; ++i) {
    if (y[i] < 0 || y[i] >= num_classes) {
      throw InputError("label " + std::to_string(y[i]) + " out of range");
    }
    by_class[static_cast<std::size_t>(y[i])].push_back(i);
  }
  for (int c = 0; c < num_classes; ++c) {
    const std::size_t nc = by_class[static_cast<std::size_t>(c)].size();
    if (nc > 0 && nc < static_cast<std::size_t>(active)) {
      throw InputError("class " + std::to_string(c) + " has " + std::to_string(nc) +
                       " rows, fewer than the " + std::to_string(active) + " splits");
    }
  }

  // Global split sizes by largest remainder.
  std::array<std::size_t, 3> target{};
  {
    std::array<double, 3> frac{};
    std::size_t assigned = 0;
    for (int s = 0; s < 3; ++s) {
      const double q = static_cast<double>(n) * r[s];
      target[s] = static_cast<std::size_t>(std::floor(q + 1e-9));
      frac[s] = r[s] > 0.0 ? q - static_cast<double>(target[s]) : -1.0;
      assigned += target[s];
    }
    std::array<int, 3> order = {0, 1, 2};
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return frac[a] > frac[b]; });
    for (std::size_t k = 0; assigned < n; ++k, ++assigned) ++target[order[k % 3]];
  }

  std::mt19937_64 rng(seed);
  // Per class floor quotas; the leftover rows form a 0/1 transport problem
  // between classes (row sums) and splits (column sums).
  std::vector<std::array<std::size_t, 3>> count(static_cast<std::size_t>(num_classes));
  std::vector<std::array<double, 3>> frac(static_cast<std::size_t>(num_classes));
  std::vector<std::size_t> leftover(static_cast<std::size_t>(num_classes), 0);
  std::array<std::size_t, 3> demand = target;
  for (std::size_t c = 0; c < by_class.size(); ++c) {
    const double nc = static_cast<double>(by_class[c].size());
    std::size_t used = 0;
    for (int s = 0; s < 3; ++s) {
      const double q = nc * r[s];
      count[c][s] = static_cast<std::size_t>(std::floor(q + 1e-9));
      frac[c][s] = q - static_cast<double>(count[c][s]);
      used += count[c][s];
      demand[s] -= count[c][s];
    }
    leftover[c] = by_class[c].size() - used;
  }
  std::vector<std::size_t> class_order(by_class.size());
  std::iota(class_order.begin(), class_order.end(), 0);
  std::shuffle(class_order.begin(), class_order.end(), rng);
  std::stable_sort(class_order.begin(), class_order.end(),
                   [&](std::size_t a, std::size_t b) { return leftover[a] > leftover[b]; });
  for (std::size_t c : class_order) {
    std::array<int, 3> order = {0, 1, 2};
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
      if (demand[a] != demand[b]) return demand[a] > demand[b];
      return frac[c][a] > frac[c][b];
    });
    for (std::size_t k = 0; k < leftover[c]; ++k) {
      const int s = order[k];
      if (demand[s] == 0 || r[s] <= 0.0) {
        throw std::logic_error("stratified split: allocation failed");
      }
      ++count[c][s];
      --demand[s];
    }
  }

  std::vector<Split> split(n, Split::kTrain);
  for (std::size_t c = 0; c < by_class.size(); ++c) {
    auto rows = by_class[c];
    std::shuffle(rows.begin(), rows.end(), rng);
    std::size_t pos = 0;
    for (int s = 0; s < 3; ++s) {
      for (std::size_t k = 0; k < count[c][s]; ++k) split[rows[pos++]] = static_cast<Split>(s);
    }
    if (!rows.empty() && count[c][0] == 0) {
      throw InputError("class " + std::to_string(c) + " has no rows in the train split");
    }
  }
  return split;
}

Cohort EncodeTable(const RawTable& table, const LoadOptions& options) {
  const FeatureSchema& schema = table.schema;
  schema.Validate();
  options.ratios.Validate();

  // Header must name exactly the schema columns.
  std::unordered_map<std::string, std::size_t> header_pos;
  for (std::size_t i = 0; i < table.header.size(); ++i) {
    const std::string name = Trim(table.header[i]);
    if (!header_pos.emplace(name, i).second) throw SchemaError(name, "duplicate header");
  }
  std::vector<std::size_t> source(schema.columns.size());
  for (std::size_t c = 0; c < schema.columns.size(); ++c) {
    auto it = header_pos.find(schema.columns[c].name);
    if (it == header_pos.end()) {
      throw SchemaError(schema.columns[c].name, "missing from CSV header");
    }
    source[c] = it->second;
  }
  for (const auto& [name, pos] : header_pos) {
    const bool known = std::any_of(schema.columns.begin(), schema.columns.end(),
                                   [&](const ColumnSpec& c) { return c.name == name; });
    if (!known) throw SchemaError(name, "not declared in schema");
  }
  if (table.rows.empty()) throw InputError("empty file: no data rows");

  // Encoded layout.
  std::vector<std::string> names;
  std::vector<bool> standardized;
  std::vector<int> sensitive_cols;
  std::vector<std::size_t> first_col(schema.columns.size(), 0);
  for (std::size_t c = 0; c < schema.columns.size(); ++c) {
    const ColumnSpec& col = schema.columns[c];
    if (col.kind == ColumnKind::kLabel) continue;
    first_col[c] = names.size();
    if (col.IsCategorical()) {
      for (const auto& v : col.vocabulary) {
        if (col.IsSensitive()) sensitive_cols.push_back(static_cast<int>(names.size()));
        names.push_back(col.name + "=" + v);
        standardized.push_back(false);
      }
    } else {
      if (col.IsSensitive()) sensitive_cols.push_back(static_cast<int>(names.size()));
      names.push_back(col.name);
      standardized.push_back(true);
    }
  }

  // Parse rows, dropping incomplete ones.
  std::vector<std::vector<double>> raw_rows;
  std::vector<std::vector<double>> sensitive_raw;  // per row, per schema column
  Labels y;
  std::size_t dropped = 0;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    bool missing = false;
    for (std::size_t c = 0; c < schema.columns.size(); ++c) {
      if (IsMissing(row[source[c]])) missing = true;
    }
    if (missing) {
      ++dropped;
      continue;
    }
    std::vector<double> enc(names.size(), 0.0);
    std::vector<double> sens(schema.columns.size(), 0.0);
    for (std::size_t c = 0; c < schema.columns.size(); ++c) {
      const ColumnSpec& col = schema.columns[c];
      const std::string cell = Trim(row[source[c]]);
      if (col.kind == ColumnKind::kLabel) {
        double v = 0.0;
        if (!ParseDouble(cell, &v) || v != std::floor(v)) {
          throw SchemaError(col.name, "row " + std::to_string(r + 1) +
                                          ": label '" + cell + "' is not an integer");
        }
        if (v < 0 || v >= schema.num_classes) {
          throw SchemaError(col.name, "row " + std::to_string(r + 1) + ": label " + cell +
                                          " outside [0, " +
                                          std::to_string(schema.num_classes) + ")");
        }
        y.push_back(static_cast<int>(v));
      } else if (col.IsCategorical()) {
        auto it = std::find(col.vocabulary.begin(), col.vocabulary.end(), cell);
        if (it == col.vocabulary.end()) {
          throw SchemaError(col.name, "row " + std::to_string(r + 1) +
                                          ": unseen categorical value '" + cell + "'");
        }
        const auto k = static_cast<std::size_t>(it - col.vocabulary.begin());
        enc[first_col[c] + k] = 1.0;
        sens[c] = static_cast<double>(k);
      } else {
        double v = 0.0;
        if (!ParseDouble(cell, &v)) {
          throw SchemaError(col.name, "row " + std::to_string(r + 1) + ": '" + cell +
                                          "' is not numeric");
        }
        if (!std::isfinite(v)) {
          throw SchemaError(col.name, "row " + std::to_string(r + 1) + ": non-finite value");
        }
        enc[first_col[c]] = v;
        sens[c] = v;
      }
    }
    raw_rows.push_back(std::move(enc));
    sensitive_raw.push_back(std::move(sens));
  }
  if (raw_rows.empty()) throw InputError("no complete rows after dropping missing values");

  const auto n = static_cast<Eigen::Index>(raw_rows.size());
  Matrix raw(n, static_cast<Eigen::Index>(names.size()));
  for (Eigen::Index i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < names.size(); ++j) {
      raw(i, static_cast<Eigen::Index>(j)) = raw_rows[static_cast<std::size_t>(i)][j];
    }
  }

  Cohort cohort;
  cohort.schema = schema;
  cohort.feature_names = std::move(names);
  cohort.y = std::move(y);
  cohort.sensitive_columns = std::move(sensitive_cols);
  cohort.dropped_rows = dropped;
  cohort.split = AssignStratifiedSplit(cohort.y, schema.num_classes, options.ratios,
                                       DeriveSeed(options.seed, SeedStream::kSplit));
  cohort.standardization = FitStandardization(raw, standardized, cohort.split);
  cohort.x = ApplyStandardization(raw, cohort.standardization);

  for (std::size_t c = 0; c < schema.columns.size(); ++c) {
    const ColumnSpec& col = schema.columns[c];
    if (!col.IsSensitive()) continue;
    SensitiveAttribute attr;
    attr.name = col.name;
    attr.groups.resize(sensitive_raw.size());
    if (col.IsCategorical()) {
      attr.group_names = col.vocabulary;
      for (std::size_t i = 0; i < sensitive_raw.size(); ++i) {
        attr.groups[i] = static_cast<int>(sensitive_raw[i][c]);
      }
    } else {
      std::vector<double> values(sensitive_raw.size());
      for (std::size_t i = 0; i < values.size(); ++i) values[i] = sensitive_raw[i][c];
      attr.bin_edges = col.bin_edges.empty() ? TrainQuartiles(values, cohort.split)
                                             : col.bin_edges;
      attr.group_names = BinNames(attr.bin_edges);
      for (std::size_t i = 0; i < values.size(); ++i) {
        attr.groups[i] = BinOf(values[i], attr.bin_edges);
      }
    }
    cohort.attributes.push_back(std::move(attr));
  }
  return cohort;
}

Cohort LoadCsv(const std::filesystem::path& path, const FeatureSchema& schema,
               const LoadOptions& options) {
  CsvTable csv = ReadCsvFile(path);
  RawTable table{schema, std::move(csv.header), std::move(csv.rows)};
  return EncodeTable(table, options);
}

Matrix Destandardize(const Cohort& cohort) {
  Matrix raw = cohort.x;
  const auto& st = cohort.standardization;
  for (Eigen::Index j = 0; j < raw.cols(); ++j) {
    const auto jj = static_cast<std::size_t>(j);
    raw.col(j) = cohort.x.col(j).array() * st.scale[jj] + st.mean[jj];
  }
  return raw;
}

Cohort StratifiedSplit(const Cohort& cohort, const SplitRatios& ratios, std::uint64_t seed) {
  Cohort out = cohort;
  const Matrix raw = Destandardize(cohort);
  out.split = AssignStratifiedSplit(cohort.y, cohort.num_classes(), ratios,
                                    DeriveSeed(seed, SeedStream::kSplit));
  out.standardization =
      FitStandardization(raw, cohort.standardization.standardized, out.split);
  out.x = ApplyStandardization(raw, out.standardization);
  return out;
}

void WriteEncodedCohort(const Cohort& cohort, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  CsvTable csv;
  csv.header = cohort.feature_names;
  csv.header.push_back(cohort.schema.columns[cohort.schema.LabelIndex()].name);
  csv.rows.reserve(cohort.num_rows());
  for (Eigen::Index i = 0; i < cohort.x.rows(); ++i) {
    std::vector<std::string> row;
    row.reserve(csv.header.size());
    for (Eigen::Index j = 0; j < cohort.x.cols(); ++j) row.push_back(FormatDouble(cohort.x(i, j)));
    row.push_back(std::to_string(cohort.y[static_cast<std::size_t>(i)]));
    csv.rows.push_back(std::move(row));
  }
  WriteCsvFile(dir / "encoded.csv", csv);

  json attrs = json::array();
  for (const auto& a : cohort.attributes) {
    attrs.push_back({{"name", a.name},
                     {"group_names", a.group_names},
                     {"bin_edges", a.bin_edges},
                     {"groups", a.groups}});
  }
  std::vector<std::string> split;
  split.reserve(cohort.split.size());
  for (Split s : cohort.split) split.push_back(ToString(s));
  std::vector<int> standardized(cohort.standardization.standardized.begin(),
                                cohort.standardization.standardized.end());
  json sidecar = {
      {"format", "fairmtl.encoded_cohort"},
      {"version", 1},
      {"schema", ToJson(cohort.schema)},
      {"feature_names", cohort.feature_names},
      {"sensitive_columns", cohort.sensitive_columns},
      {"standardization",
       {{"mean", cohort.standardization.mean},
        {"scale", cohort.standardization.scale},
        {"standardized", standardized}}},
      {"split", split},
      {"dropped_rows", cohort.dropped_rows},
      {"attributes", attrs},
  };
  WriteTextFile(dir / "encoded.json", sidecar.dump(2) + "\n");
}

Cohort ReadEncodedCohort(const std::filesystem::path& dir) {
  const json sidecar = ReadJsonFile(dir / "encoded.json");
  const CsvTable csv = ReadCsvFile(dir / "encoded.csv");
  Cohort cohort;
  try {
    cohort.schema = SchemaFromJson(sidecar.at("schema"));
    cohort.feature_names = sidecar.at("feature_names").get<std::vector<std::string>>();
    cohort.sensitive_columns = sidecar.at("sensitive_columns").get<std::vector<int>>();
    const auto& st = sidecar.at("standardization");
    cohort.standardization.mean = st.at("mean").get<std::vector<double>>();
    cohort.standardization.scale = st.at("scale").get<std::vector<double>>();
    for (int s : st.at("standardized").get<std::vector<int>>()) {
      cohort.standardization.standardized.push_back(s != 0);
    }
    for (const auto& s : sidecar.at("split")) cohort.split.push_back(SplitFromString(s));
    cohort.dropped_rows = sidecar.at("dropped_rows").get<std::size_t>();
    for (const auto& ja : sidecar.at("attributes")) {
      SensitiveAttribute a;
      a.name = ja.at("name").get<std::string>();
      a.group_names = ja.at("group_names").get<std::vector<std::string>>();
      a.bin_edges = ja.at("bin_edges").get<std::vector<double>>();
      a.groups = ja.at("groups").get<std::vector<int>>();
      cohort.attributes.push_back(std::move(a));
    }
  } catch (const json::exception& e) {
    throw InputError("encoded.json: " + std::string(e.what()));
  }

  const std::size_t d = cohort.feature_names.size();
  if (csv.header.size() != d + 1) throw InputError("encoded.csv: header width mismatch");
  for (std::size_t j = 0; j < d; ++j) {
    if (csv.header[j] != cohort.feature_names[j]) {
      throw SchemaError(csv.header[j], "encoded.csv header does not match encoded.json");
    }
  }
  const std::size_t n = csv.rows.size();
  if (cohort.split.size() != n) throw InputError("encoded.json: split length mismatch");
  cohort.x.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  cohort.y.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      double v = 0.0;
      if (!ParseDouble(csv.rows[i][j], &v) || !std::isfinite(v)) {
        throw SchemaError(csv.header[j], "row " + std::to_string(i + 1) + ": bad value");
      }
      cohort.x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = v;
    }
    double label = 0.0;
    if (!ParseDouble(csv.rows[i][d], &label) || label < 0 ||
        label >= cohort.schema.num_classes) {
      throw SchemaError(csv.header[d], "row " + std::to_string(i + 1) + ": bad label");
    }
    cohort.y[i] = static_cast<int>(label);
  }
  for (const auto& a : cohort.attributes) {
    if (a.groups.size() != n) throw InputError("encoded.json: attribute length mismatch");
  }
  return cohort;
}

Matrix SelectRows(const Matrix& m, const std::vector<std::size_t>& rows) {
  Matrix out(static_cast<Eigen::Index>(rows.size()), m.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out.row(static_cast<Eigen::Index>(i)) = m.row(static_cast<Eigen::Index>(rows[i]));
  }
  return out;
}

Labels SelectRows(const Labels& v, const std::vector<std::size_t>& rows) {
  Labels out;
  out.reserve(rows.size());
  for (std::size_t r : rows) out.push_back(v[r]);
  return out;
}

}  // namespace fairmtl
