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

#include "convrec/embeddings.hpp"

#include <algorithm>
#include <cmath>

#include "convrec/error.hpp"
#include "models/models.hpp"

namespace convrec {

std::string_view to_string(Backbone backbone) {
  switch (backbone) {
    case Backbone::kPop:
      return "pop";
    case Backbone::kItem2Vec:
      return "item2vec";
    case Backbone::kFism:
      return "fism";
    case Backbone::kSasMini:
      return "sasmini";
  }
  return "unknown";
}

std::optional<Backbone> parse_backbone(std::string_view name) {
  for (Backbone b : {Backbone::kPop, Backbone::kItem2Vec, Backbone::kFism, Backbone::kSasMini}) {
    if (to_string(b) == name) return b;
  }
  return std::nullopt;
}

std::string_view to_string(LossMode mode) {
  switch (mode) {
    case LossMode::kAuto:
      return "auto";
    case LossMode::kFullSoftmax:
      return "full_softmax";
    case LossMode::kSampled:
      return "sampled";
  }
  return "unknown";
}

std::optional<LossMode> parse_loss_mode(std::string_view name) {
  for (LossMode m : {LossMode::kAuto, LossMode::kFullSoftmax, LossMode::kSampled}) {
    if (to_string(m) == name) return m;
  }
  return std::nullopt;
}

void validate(const TrainingConfig& config) {
  if (config.dim < 1) throw UsageError("dim must be positive");
  if (config.epochs < 1) throw UsageError("epochs must be positive");
  if (!(config.learning_rate > 0.0) || !std::isfinite(config.learning_rate)) {
    throw UsageError("learning_rate must be positive");
  }
  if (config.negatives_per_positive < 1) throw UsageError("negatives_per_positive must be positive");
  if (config.window < 1) throw UsageError("window must be positive");
  if (config.max_seq_len < 1) throw UsageError("max_seq_len must be positive");
  if (config.n_heads != 1 || config.n_blocks != 1) {
    throw UsageError("sasmini supports exactly one head and one block");
  }
}

Gradient::Gradient(std::vector<Shape> shapes) : shapes_(std::move(shapes)) {
  for (const auto& s : shapes_) {
    data_.emplace_back(s.rows * s.cols, 0.0);
    is_touched_.emplace_back(s.rows, 0);
    touched_.emplace_back();
  }
}

void Gradient::touch(std::size_t block, std::size_t r) {
  if (!is_touched_[block][r]) {
    is_touched_[block][r] = 1;
    touched_[block].push_back(r);
  }
}

std::span<double> Gradient::row(std::size_t block, std::size_t r) {
  touch(block, r);
  const std::size_t cols = shapes_[block].cols;
  return {data_[block].data() + r * cols, cols};
}

Eigen::Map<RowMatrix> Gradient::dense(std::size_t block) {
  const auto& s = shapes_[block];
  if (touched_[block].size() != s.rows) {
    for (std::size_t r = 0; r < s.rows; ++r) touch(block, r);
  }
  return {data_[block].data(), static_cast<Eigen::Index>(s.rows), static_cast<Eigen::Index>(s.cols)};
}

void Gradient::clear() {
  for (std::size_t b = 0; b < data_.size(); ++b) {
    const std::size_t cols = shapes_[b].cols;
    for (std::size_t r : touched_[b]) {
      std::fill_n(data_[b].begin() + static_cast<std::ptrdiff_t>(r * cols), cols, 0.0);
      is_touched_[b][r] = 0;
    }
    touched_[b].clear();
  }
}

Model::Model(std::vector<std::string> item_ids) : item_ids_(std::move(item_ids)) {
  for (std::size_t i = 0; i < item_ids_.size(); ++i) {
    if (!index_.emplace(item_ids_[i], i).second) {
      throw DataError("duplicate item id '" + item_ids_[i] + "' in model vocabulary");
    }
  }
}

std::vector<double> Model::next_item_scores(const std::vector<std::string>& prefix) const {
  std::vector<std::size_t> known;
  known.reserve(prefix.size());
  for (const auto& item : prefix) {
    if (auto it = index_.find(item); it != index_.end()) known.push_back(it->second);
  }
  if (known.empty()) throw DataError("no prefix item is known to the model");
  return score_indices(known);
}

Gradient TrainableModel::make_gradient() {
  std::vector<Gradient::Shape> shapes;
  for (const auto& block : parameters()) shapes.push_back({block.rows, block.cols});
  return Gradient(std::move(shapes));
}

double TrainableModel::sgd_step(const TrainingBatch& batch, double learning_rate,
                                Gradient& scratch) {
  scratch.clear();
  const double loss = forward_backward(batch, &scratch);
  const auto blocks = parameters();
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    const std::size_t cols = blocks[b].cols;
    for (std::size_t r : scratch.touched_rows(b)) {
      double* p = blocks[b].data + r * cols;
      for (std::size_t j = 0; j < cols; ++j) p[j] -= learning_rate * scratch.value(b, r * cols + j);
    }
  }
  scratch.clear();
  return loss;
}

std::unique_ptr<Model> make_model(const TrainingConfig& config,
                                  const std::vector<std::string>& item_ids) {
  validate(config);
  if (item_ids.empty()) throw DataError("model vocabulary is empty");
  switch (config.backbone) {
    case Backbone::kPop:
      return models::make_popularity(item_ids, std::vector<double>(item_ids.size(), 0.0));
    case Backbone::kItem2Vec:
      return models::make_item2vec(config, item_ids);
    case Backbone::kFism:
      return models::make_fism(config, item_ids);
    case Backbone::kSasMini:
      return models::make_sasmini(config, item_ids);
  }
  throw UsageError("unknown backbone");
}

TrainedModel train(const std::vector<InteractionSequence>& sequences,
                   const std::vector<std::string>& item_ids, const TrainingConfig& config) {
  validate(config);
  if (item_ids.empty()) throw DataError("model vocabulary is empty");

  std::unordered_map<std::string_view, std::size_t> index;
  for (std::size_t i = 0; i < item_ids.size(); ++i) index.emplace(item_ids[i], i);
  std::vector<std::vector<std::size_t>> encoded;
  for (const auto& sequence : sequences) {
    std::vector<std::size_t> ids;
    for (const auto& item : sequence.items) {
      if (auto it = index.find(item); it != index.end()) ids.push_back(it->second);
    }
    if (!ids.empty()) encoded.push_back(std::move(ids));
  }
  if (encoded.empty()) throw DataError("empty training set");

  TrainedModel result;
  if (config.backbone == Backbone::kPop) {
    result.model = models::make_popularity(item_ids, compute_popularity(sequences, item_ids).counts);
    return result;
  }

  auto model = make_model(config, item_ids);
  auto* trainable = dynamic_cast<TrainableModel*>(model.get());
  Gradient scratch = trainable->make_gradient();
  // The model's init consumed config.seed; batches use a derived stream.
  Rng rng(config.seed ^ 0x9E3779B97F4A7C15ULL);
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    const auto batches = trainable->epoch_batches(encoded, rng);
    if (batches.empty()) throw DataError("empty training set: no sequence yields a training unit");
    double total = 0.0;
    for (const auto& batch : batches) total += trainable->sgd_step(batch, config.learning_rate, scratch);
    const double mean = total / static_cast<double>(batches.size());
    if (!std::isfinite(mean)) throw DataError("training diverged at epoch " + std::to_string(epoch + 1));
    result.log.epoch_mean_loss.push_back(mean);
  }
  result.model = std::move(model);
  return result;
}

GradientCheckResult gradient_check(TrainableModel& model, const TrainingBatch& batch,
                                   double epsilon) {
  Gradient analytic = model.make_gradient();
  model.forward_backward(batch, &analytic);
  GradientCheckResult result;
  const auto blocks = model.parameters();
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    const std::size_t count = blocks[b].rows * blocks[b].cols;
    for (std::size_t i = 0; i < count; ++i) {
      double& p = blocks[b].data[i];
      const double saved = p;
      p = saved + epsilon;
      const double up = model.forward_backward(batch, nullptr);
      p = saved - epsilon;
      const double down = model.forward_backward(batch, nullptr);
      p = saved;
      const double numeric = (up - down) / (2.0 * epsilon);
      const double exact = analytic.value(b, i);
      const double denom = std::max({std::abs(exact), std::abs(numeric), 1e-6});
      const double error = std::abs(exact - numeric) / denom;
      ++result.n_parameters;
      if (error > result.max_relative_error || result.worst_parameter.empty()) {
        if (error >= result.max_relative_error) {
          result.max_relative_error = error;
          result.worst_parameter = blocks[b].name + "[" + std::to_string(i) + "]";
        }
      }
    }
  }
  return result;
}

}  // namespace convrec
