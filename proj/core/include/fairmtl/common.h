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

#ifndef FAIRMTL_COMMON_H_
#define FAIRMTL_COMMON_H_

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace fairmtl {

// Row-major so that a row is one sample, matching the CSV layout.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;
using RowVector = Eigen::RowVectorXd;

using Labels = std::vector<int>;

inline constexpr char kVersion[] = "0.1.0";

// Bad input: malformed files, schema mismatches, out-of-range arguments.
// The command-line tool maps it to exit code 2.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A column-specific input error.
class SchemaError : public InputError {
 public:
  SchemaError(std::string column, const std::string& what)
      : InputError("column '" + column + "': " + what), column_(std::move(column)) {}

  const std::string& column() const { return column_; }

 private:
  std::string column_;
};

// Numerical failure at run time (for example a non-finite loss). Exit code 3.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// SplitMix64 finalizer. All component seeds are derived from the single run
// seed through this function so that independent streams never collide.
inline std::uint64_t DeriveSeed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Named seed streams used across components.
enum class SeedStream : std::uint64_t {
  kSplit = 1,
  kSynth = 2,
  kAutoencoder = 3,
  kKMeans = 4,
  kModelInit = 5,
  kShuffle = 6,
  kDropout = 7,
  kForest = 8,
  kBootstrap = 9,
  kShap = 10,
  kBackground = 11,
};

inline std::uint64_t DeriveSeed(std::uint64_t seed, SeedStream stream) {
  return DeriveSeed(seed, static_cast<std::uint64_t>(stream));
}

}  // namespace fairmtl

#endif  // FAIRMTL_COMMON_H_
