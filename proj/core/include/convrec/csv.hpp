// Copyright 2026 The Authors.
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

#include <cstddef>
#include <istream>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace convrec::csv {

// One RFC-4180 record. `line` is the 1-based physical line the record starts on.
struct Record {
  std::vector<std::string> fields;
  std::size_t line = 0;
};

class Reader {
 public:
  explicit Reader(std::istream& in) : in_(in) {}

  // Returns false at end of input. Throws DataError on an unterminated quote.
  bool next(Record& out);

 private:
  std::istream& in_;
  std::size_t line_ = 1;
};

// A header-indexed table with required columns checked up front.
class Table {
 public:
  // Reads the whole file. Throws DataError when the file is missing, the
  // header lacks a required column, or a row has the wrong field count.
  static Table read(const std::string& path,
                    const std::vector<std::string>& required_columns);

  const std::vector<std::string>& header() const { return header_; }
  const std::vector<Record>& rows() const { return rows_; }
  std::size_t column(std::string_view name) const;
  std::optional<std::size_t> find_column(std::string_view name) const;
  const std::string& path() const { return path_; }

 private:
  std::string path_;
  std::vector<std::string> header_;
  std::unordered_map<std::string, std::size_t> columns_;
  std::vector<Record> rows_;
};

// Quotes a field when it contains a comma, quote, or line break.
std::string escape(std::string_view field);

}  // namespace convrec::csv
