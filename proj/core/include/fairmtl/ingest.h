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

// Tabular cohort loading, encoding and stratified splitting.
//
// A cohort is read from CSV against a FeatureSchema. Categorical columns are
// one-hot expanded with the schema vocabulary, numeric columns are
// standardized with statistics of the train split only, and rows with a
// missing value in any schema column are dropped and counted.

#ifndef FAIRMTL_INGEST_H_
#define FAIRMTL_INGEST_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fairmtl/common.h"

namespace fairmtl {

enum class ColumnKind {
  kNumeric,
  kCategorical,
  kSensitiveNumeric,
  kSensitiveCategorical,
  kLabel,
};

std::string ToString(ColumnKind kind);
ColumnKind ColumnKindFromString(const std::string& name);

struct ColumnSpec {
  std::string name;
  ColumnKind kind = ColumnKind::kNumeric;
  // Ordered category values for the categorical kinds.
  std::vector<std::string> vocabulary;
  // Sensitive-numeric only: ascending cut points used to bin the raw value
  // into audit groups. Empty means train-split quartiles.
  std::vector<double> bin_edges;

  bool IsSensitive() const {
    return kind == ColumnKind::kSensitiveNumeric ||
           kind == ColumnKind::kSensitiveCategorical;
  }
  bool IsCategorical() const {
    return kind == ColumnKind::kCategorical ||
           kind == ColumnKind::kSensitiveCategorical;
  }
};

struct FeatureSchema {
  std::vector<ColumnSpec> columns;
  // Label values are integers in [0, num_classes).
  int num_classes = 0;

  // Throws SchemaError / InputError when an invariant does not hold.
  void Validate(bool require_sensitive = false) const;
  std::size_t LabelIndex() const;
  bool HasSensitive() const;
};

nlohmann::json ToJson(const FeatureSchema& schema);
FeatureSchema SchemaFromJson(const nlohmann::json& j);
FeatureSchema LoadSchema(const std::filesystem::path& path);
void SaveSchema(const FeatureSchema& schema, const std::filesystem::path& path);

enum class Split : std::uint8_t { kTrain = 0, kVal = 1, kTest = 2 };

std::string ToString(Split split);
Split SplitFromString(const std::string& name);

struct SplitRatios {
  double train = 0.7;
  double val = 0.15;
  double test = 0.15;

  // Ratios must be non-negative, sum to 1 within 1e-9, and train > 0.
  void Validate() const;
  int NumSplits() const;
};

// Audit grouping derived from one sensitive column. Categorical columns use
// vocabulary order; numeric columns use the bins of the column spec.
struct SensitiveAttribute {
  std::string name;
  std::vector<std::string> group_names;
  std::vector<int> groups;  // per row, in [0, group_names.size())
  std::vector<double> bin_edges;  // numeric columns only
};

// Per encoded column affine map: encoded = (raw - mean) / scale.
// One-hot columns carry mean 0 and scale 1.
struct Standardization {
  std::vector<double> mean;
  std::vector<double> scale;
  std::vector<bool> standardized;
};

struct Cohort {
  FeatureSchema schema;
  std::vector<std::string> feature_names;
  Matrix x;  // N x d, encoded
  Labels y;
  // Columns of x that encode sensitive attributes (the demographic block).
  std::vector<int> sensitive_columns;
  std::vector<Split> split;
  std::vector<SensitiveAttribute> attributes;
  Standardization standardization;
  std::size_t dropped_rows = 0;

  std::size_t num_rows() const { return y.size(); }
  std::size_t num_features() const { return static_cast<std::size_t>(x.cols()); }
  int num_classes() const { return schema.num_classes; }

  // The N x d_s sensitive sub-matrix.
  Matrix Sensitive() const;
  std::vector<std::size_t> Indices(Split which) const;
  const SensitiveAttribute& Attribute(const std::string& name) const;
};

// Raw string table plus its schema, before encoding.
struct RawTable {
  FeatureSchema schema;
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

struct LoadOptions {
  SplitRatios ratios;
  std::uint64_t seed = 0;
};

// Validates the table against its schema, drops incomplete rows, assigns a
// stratified split and encodes.
Cohort EncodeTable(const RawTable& table, const LoadOptions& options);
Cohort LoadCsv(const std::filesystem::path& path, const FeatureSchema& schema,
               const LoadOptions& options = {});

// Stratified split tags for labels in [0, num_classes). Per class, each split
// receives floor or ceil of its ideal share; global split sizes are the
// largest-remainder rounding of N * ratio. Deterministic given seed.
std::vector<Split> AssignStratifiedSplit(const Labels& y, int num_classes,
                                         const SplitRatios& ratios, std::uint64_t seed);

// Re-splits a cohort and re-derives standardization from the new train rows.
Cohort StratifiedSplit(const Cohort& cohort, const SplitRatios& ratios,
                       std::uint64_t seed);

// Inverse of the standardization: the raw numeric / one-hot matrix.
Matrix Destandardize(const Cohort& cohort);

// Encoded cohort persistence: <dir>/encoded.csv and <dir>/encoded.json.
void WriteEncodedCohort(const Cohort& cohort, const std::filesystem::path& dir);
Cohort ReadEncodedCohort(const std::filesystem::path& dir);

// Row subsets.
Matrix SelectRows(const Matrix& m, const std::vector<std::size_t>& rows);
Labels SelectRows(const Labels& v, const std::vector<std::size_t>& rows);

}  // namespace fairmtl

#endif  // FAIRMTL_INGEST_H_
