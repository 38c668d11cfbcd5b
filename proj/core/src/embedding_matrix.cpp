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

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include "convrec/embeddings.hpp"
#include "convrec/error.hpp"

namespace convrec {

EmbeddingMatrix::EmbeddingMatrix(std::vector<std::string> item_ids, RowMatrix vectors)
    : item_ids_(std::move(item_ids)), vectors_(std::move(vectors)) {
  if (static_cast<std::size_t>(vectors_.rows()) != item_ids_.size()) {
    throw DataError("embedding matrix has " + std::to_string(vectors_.rows()) + " rows for " +
                    std::to_string(item_ids_.size()) + " item ids");
  }
  if (vectors_.cols() < 1) throw DataError("embedding dimension must be at least 1");
  if (!vectors_.allFinite()) throw DataError("embedding matrix has non-finite entries");
  index_.reserve(item_ids_.size());
  for (std::size_t i = 0; i < item_ids_.size(); ++i) {
    if (!index_.emplace(item_ids_[i], i).second) {
      throw DataError("duplicate embedding id '" + item_ids_[i] + "'");
    }
  }
}

std::optional<std::size_t> EmbeddingMatrix::index_of(std::string_view item_id) const {
  auto it = index_.find(std::string(item_id));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

void save_embeddings(const EmbeddingMatrix& embeddings, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path);
  out << embeddings.size() << ' ' << embeddings.dim() << '\n';
  char buffer[64];
  for (std::size_t i = 0; i < embeddings.size(); ++i) {
    const std::string& id = embeddings.item_ids()[i];
    if (id.empty() || id.find_first_of(" \t\r\n") != std::string::npos) {
      throw DataError("item id '" + id + "' cannot be written to an embedding file");
    }
    out << id;
    for (double value : embeddings.row(i)) {
      auto [ptr, ec] = std::to_chars(buffer, buffer + sizeof(buffer), value);
      out << ' ' << std::string_view(buffer, ptr - buffer);
    }
    out << '\n';
  }
  if (!out) throw DataError("failed writing " + path);
}

namespace {

bool parse_double(std::string_view token, double& value) {
  auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
  return ec == std::errc() && ptr == token.data() + token.size() && std::isfinite(value);
}

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> tokens;
  std::size_t pos = 0;
  while (pos < line.size()) {
    pos = line.find_first_not_of(" \t\r", pos);
    if (pos == std::string_view::npos) break;
    const std::size_t end = std::min(line.find_first_of(" \t\r", pos), line.size());
    tokens.push_back(line.substr(pos, end - pos));
    pos = end;
  }
  return tokens;
}

}  // namespace

EmbeddingMatrix load_embeddings(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw DataError(path + ": empty embedding file");
  const auto header = split_ws(line);
  std::size_t n_items = 0;
  std::size_t dim = 0;
  const auto parse_count = [](std::string_view token, std::size_t& out) {
    auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), out);
    return ec == std::errc() && ptr == token.data() + token.size();
  };
  if (header.size() != 2 || !parse_count(header[0], n_items) || !parse_count(header[1], dim)) {
    throw DataError(path + ": malformed header, expected '<count> <dim>'");
  }
  if (n_items == 0) throw DataError(path + ": empty embedding file");
  if (dim == 0) throw DataError(path + ": header dimension must be at least 1");

  std::vector<std::string> ids;
  ids.reserve(n_items);
  RowMatrix vectors(static_cast<Eigen::Index>(n_items), static_cast<Eigen::Index>(dim));
  std::unordered_set<std::string> seen;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    const auto tokens = split_ws(line);
    if (tokens.empty()) continue;
    const std::size_t row = ids.size();
    const std::string where = path + ": line " + std::to_string(line_no) + " (row " +
                              std::to_string(row + 1) + "): ";
    if (row >= n_items) throw DataError(where + "more rows than the header count " +
                                        std::to_string(n_items));
    if (tokens.size() != dim + 1) {
      throw DataError(where + "expected " + std::to_string(dim) + " values, got " +
                      std::to_string(tokens.size() - 1));
    }
    std::string id(tokens[0]);
    if (!seen.insert(id).second) throw DataError(where + "duplicate item id '" + id + "'");
    for (std::size_t j = 0; j < dim; ++j) {
      double value;
      if (!parse_double(tokens[j + 1], value)) {
        throw DataError(where + "invalid value '" + std::string(tokens[j + 1]) + "'");
      }
      vectors(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(j)) = value;
    }
    ids.push_back(std::move(id));
  }
  if (ids.size() != n_items) {
    throw DataError(path + ": header declares " + std::to_string(n_items) + " rows, found " +
                    std::to_string(ids.size()));
  }
  return EmbeddingMatrix(std::move(ids), std::move(vectors));
}

double PopularityScores::count_of(std::string_view item_id) const {
  for (std::size_t i = 0; i < item_ids.size(); ++i) {
    if (item_ids[i] == item_id) return counts[i];
  }
  return 0.0;
}

PopularityScores compute_popularity(const std::vector<InteractionSequence>& sequences,
                                    const std::vector<std::string>& item_ids) {
  std::unordered_map<std::string_view, std::size_t> index;
  for (std::size_t i = 0; i < item_ids.size(); ++i) index.emplace(item_ids[i], i);
  PopularityScores scores{item_ids, std::vector<double>(item_ids.size(), 0.0)};
  for (const auto& sequence : sequences) {
    for (const auto& item : sequence.items) {
      if (auto it = index.find(item); it != index.end()) scores.counts[it->second] += 1.0;
    }
  }
  return scores;
}

}  // namespace convrec
