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

#ifndef FAIRMTL_CSV_H_
#define FAIRMTL_CSV_H_

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace fairmtl {

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

// Parses RFC 4180 style CSV (double-quoted fields, "" escapes, CRLF or LF).
// Throws InputError on ragged rows or an empty input.
CsvTable ParseCsv(std::string_view text);
CsvTable ReadCsvFile(const std::filesystem::path& path);

void WriteCsvRow(std::ostream& out, const std::vector<std::string>& fields);
void WriteCsvFile(const std::filesystem::path& path, const CsvTable& table);

// Shortest representation that parses back to the same double.
std::string FormatDouble(double value);
// Strict parse of a whole field; returns false on trailing garbage.
bool ParseDouble(std::string_view text, double* value);

std::string ReadTextFile(const std::filesystem::path& path);
void WriteTextFile(const std::filesystem::path& path, std::string_view text);

// Parses a JSON file; malformed input throws InputError naming the byte
// offset of the failure.
nlohmann::json ReadJsonFile(const std::filesystem::path& path);
nlohmann::json ParseJsonText(std::string_view text, const std::string& context);

}  // namespace fairmtl

#endif  // FAIRMTL_CSV_H_
