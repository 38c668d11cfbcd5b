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

#include <cmath>
#include <memory>
#include <string>
#include <vector>

#include "convrec/embeddings.hpp"

namespace convrec::models {

std::unique_ptr<Model> make_popularity(const std::vector<std::string>& item_ids,
                                       std::vector<double> counts);
std::unique_ptr<TrainableModel> make_item2vec(const TrainingConfig& config,
                                              const std::vector<std::string>& item_ids);
std::unique_ptr<TrainableModel> make_fism(const TrainingConfig& config,
                                          const std::vector<std::string>& item_ids);
std::unique_ptr<TrainableModel> make_sasmini(const TrainingConfig& config,
                                             const std::vector<std::string>& item_ids);

// uniform(-1/sqrt(d), 1/sqrt(d)) from the seeded generator.
inline void init_uniform(RowMatrix& m, std::size_t dim, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(dim));
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.uniform(-bound, bound);
}

inline double sigmoid(double x) {
  return x >= 0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
}

// log(1 + exp(x)) without overflow.
inline double softplus(double x) {
  return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

// Full or sampled softmax mode once |V| is known.
inline bool use_full_softmax(const TrainingConfig& config, std::size_t n_items) {
  switch (config.loss_mode) {
    case LossMode::kFullSoftmax:
      return true;
    case LossMode::kSampled:
      return false;
    case LossMode::kAuto:
      break;
  }
  return n_items <= config.full_softmax_limit;
}

// Uniform item index different from `exclude` (when the catalog allows it).
inline std::size_t sample_other(Rng& rng, std::size_t n_items, std::size_t exclude) {
  if (n_items < 2) return rng.index(n_items);
  std::size_t draw = rng.index(n_items - 1);
  return draw >= exclude ? draw + 1 : draw;
}

}  // namespace convrec::models
