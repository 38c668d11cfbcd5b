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

#include "convrec/csv.hpp"

#include <fstream>

#include "convrec/error.hpp"

namespace convrec::csv {

bool Reader::next(Record& out) {
  out.fields.clear();
  out.line = line_;
  if (in_.peek() == std::char_traits<char>::eof()) return false;

  std::string field;
  bool quoted = false;
  bool field_started_quoted = false;
  char c;
  while (in_.get(c)) {
    if (quoted) {
      if (c == '"') {
        if (in_.peek() == '"') {
          in_.get(c);
          field.push_back('"');
        } else {
          quoted = false;
        }
      } else {
        if (c == '\n') ++line_;
        field.push_back(c);
      }
      continue;
    }
    if (c == '"' && field.empty() && !field_started_quoted) {
      quoted = true;
      field_started_quoted = true;
    } else if (c == ',') {
      out.fields.push_back(std::move(field));
      field.clear();
      field_started_quoted = false;
    } else if (c == '\r' && in_.peek() == '\n') {
      // CRLF; the '\n' terminates the record
    } else if (c == '\n') {
      ++line_;
      out.fields.push_back(std::move(field));
      return true;
    } else {
      field.push_back(c);
    }
  }
  if (quoted) {
    throw DataError("line " + std::to_string(out.line) + ": unterminated quoted field");
  }
  out.fields.push_back(std::move(field));
  return true;
}

Table Table::read(const std::string& path, const std::vector<std::string>& required_columns) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path);

  Table table;
  table.path_ = path;
  Reader reader(in);
  Record header;
  if (!reader.next(header)) throw DataError(path + ": missing header row");
  if (!header.fields.empty() && header.fields[0].rfind("\xEF\xBB\xBF", 0) == 0) {
    header.fields[0].erase(0, 3);
  }
  for (std::size_t i = 0; i < header.fields.size(); ++i) {
    table.columns_.emplace(header.fields[i], i);
  }
  table.header_ = header.fields;
  for (const auto& name : required_columns) {
    if (!table.columns_.contains(name)) {
      throw DataError(path + ": header is missing column '" + name + "'");
    }
  }

  Record row;
  while (reader.next(row)) {
    if (row.fields.size() == 1 && row.fields[0].empty()) continue;  // blank line
    if (row.fields.size() != header.fields.size()) {
      throw DataError(path + ": line " + std::to_string(row.line) + ": expected " +
                      std::to_string(header.fields.size()) + " fields, got " +
                      std::to_string(row.fields.size()));
    }
    table.rows_.push_back(std::move(row));
  }
  return table;
}

std::size_t Table::column(std::string_view name) const {
  auto it = columns_.find(std::string(name));
  if (it == columns_.end()) throw DataError(path_ + ": no column '" + std::string(name) + "'");
  return it->second;
}

std::optional<std::size_t> Table::find_column(std::string_view name) const {
  auto it = columns_.find(std::string(name));
  if (it == columns_.end()) return std::nullopt;
  return it->second;
}

std::string escape(std::string_view field) {
  if (field.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(field);
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

}  // namespace convrec::csv
