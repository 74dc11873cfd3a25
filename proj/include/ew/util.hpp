// Copyright 2026 The ewscore Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace ew {

/// Dense row-major matrix of doubles. Small helper, not a linear-algebra
/// library; the heavy kernels live in parallel.hpp / the model classes.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

  double* operator[](std::size_t r) { return data.data() + r * cols; }
  const double* operator[](std::size_t r) const { return data.data() + r * cols; }

  std::vector<double> row(std::size_t r) const {
    return std::vector<double>(data.begin() + static_cast<long>(r * cols),
                               data.begin() + static_cast<long>((r + 1) * cols));
  }
  void push_row(const std::vector<double>& v);
};

// ----- strings -----

std::vector<std::string> split(const std::string& s, char sep);
std::string trim(const std::string& s);
std::string lower_ascii(std::string s);
bool starts_with(const std::string& s, const std::string& prefix);

/// Format a double with enough digits to round-trip exactly.
std::string format_double(double v);

/// `[hh:mm:ss]` <-> seconds. parse_hms throws on malformed input.
double parse_hms(const std::string& s);
std::string format_hms(double seconds);

// ----- CSV (RFC 4180 quoting for fields containing , " or newline) -----

std::string csv_escape(const std::string& field);
std::vector<std::string> csv_parse_line(const std::string& line);

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  int col(const std::string& name) const;  // -1 when absent
};

CsvTable read_csv(const std::filesystem::path& path);
void write_csv(const std::filesystem::path& path,
               const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows);

// ----- files -----

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& content);

// ----- deterministic seeding -----

/// SplitMix64 step; used to derive independent per-task seeds from a master
/// seed so parallel work is reproducible regardless of thread count.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream);

}  // namespace ew
