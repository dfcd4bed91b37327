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

// Small helpers shared by the unit tests.

#ifndef FAIRMTL_TESTS_TEST_UTIL_H_
#define FAIRMTL_TESTS_TEST_UTIL_H_

#include <cstdlib>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include <unistd.h>

#include "fairmtl/common.h"
#include "fairmtl/ingest.h"

namespace fairmtl::testing {

// Fresh, empty directory under the system temp dir.
inline std::filesystem::path TempDir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() /
                   ("fairmtl_" + name + "_" + std::to_string(::getpid()));
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline Matrix RandomMatrix(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng,
                           double scale = 1.0) {
  std::normal_distribution<double> n(0.0, scale);
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = n(rng);
  }
  return m;
}

// Sets FAIRMTL_THREADS for the lifetime of the object.
class ScopedThreads {
 public:
  explicit ScopedThreads(int n) {
    if (const char* old = std::getenv("FAIRMTL_THREADS")) saved_ = old;
    ::setenv("FAIRMTL_THREADS", std::to_string(n).c_str(), 1);
  }
  ~ScopedThreads() {
    if (saved_.empty()) {
      ::unsetenv("FAIRMTL_THREADS");
    } else {
      ::setenv("FAIRMTL_THREADS", saved_.c_str(), 1);
    }
  }
  ScopedThreads(const ScopedThreads&) = delete;
  ScopedThreads& operator=(const ScopedThreads&) = delete;

 private:
  std::string saved_;
};

// A cohort built directly from matrices; the first sensitive_cols columns
// form the demographic block. Splits cycle train/val/test unless given.
inline Cohort MakeCohort(const Matrix& x, const Labels& y, int num_classes,
                         int sensitive_cols = 1, std::vector<Split> split = {}) {
  Cohort c;
  c.schema.num_classes = num_classes;
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    const bool sens = j < sensitive_cols;
    c.schema.columns.push_back({"f" + std::to_string(j),
                                sens ? ColumnKind::kSensitiveNumeric : ColumnKind::kNumeric,
                                {},
                                {}});
    c.feature_names.push_back("f" + std::to_string(j));
    if (sens) c.sensitive_columns.push_back(static_cast<int>(j));
  }
  c.schema.columns.push_back({"label", ColumnKind::kLabel, {}, {}});
  c.x = x;
  c.y = y;
  if (split.empty()) {
    for (std::size_t i = 0; i < y.size(); ++i) {
      split.push_back(i % 5 < 3 ? Split::kTrain : (i % 5 == 3 ? Split::kVal : Split::kTest));
    }
  }
  c.split = std::move(split);
  c.standardization.mean.assign(static_cast<std::size_t>(x.cols()), 0.0);
  c.standardization.scale.assign(static_cast<std::size_t>(x.cols()), 1.0);
  c.standardization.standardized.assign(static_cast<std::size_t>(x.cols()), false);
  return c;
}

}  // namespace fairmtl::testing

#endif  // FAIRMTL_TESTS_TEST_UTIL_H_
