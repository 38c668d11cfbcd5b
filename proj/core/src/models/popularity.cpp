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

#include "models/models.hpp"

namespace convrec::models {
namespace {

// Context-free scores: the interaction count of each item.
class PopularityModel final : public Model {
 public:
  PopularityModel(const std::vector<std::string>& item_ids, std::vector<double> counts)
      : Model(item_ids), counts_(std::move(counts)) {}

  Backbone backbone() const override { return Backbone::kPop; }

  // A single column holding the count; cosine over it only separates
  // zero-count items from the rest.
  EmbeddingMatrix embeddings() const override {
    RowMatrix column(static_cast<Eigen::Index>(counts_.size()), 1);
    for (std::size_t i = 0; i < counts_.size(); ++i) column(static_cast<Eigen::Index>(i), 0) = counts_[i];
    return EmbeddingMatrix(item_ids_, std::move(column));
  }

 protected:
  std::vector<double> score_indices(const std::vector<std::size_t>&) const override {
    return counts_;
  }

 private:
  std::vector<double> counts_;
};

}  // namespace

std::unique_ptr<Model> make_popularity(const std::vector<std::string>& item_ids,
                                       std::vector<double> counts) {
  return std::make_unique<PopularityModel>(item_ids, std::move(counts));
}

}  // namespace convrec::models
