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
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

#include "convrec/corpus.hpp"
#include "convrec/random.hpp"

namespace convrec {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// |V| x d item embeddings with rows aligned to item_ids.
class EmbeddingMatrix {
 public:
  EmbeddingMatrix() = default;
  // Throws DataError on duplicate ids, a shape mismatch, d == 0 or a
  // non-finite entry.
  EmbeddingMatrix(std::vector<std::string> item_ids, RowMatrix vectors);

  std::size_t size() const { return item_ids_.size(); }
  std::size_t dim() const { return static_cast<std::size_t>(vectors_.cols()); }
  const std::vector<std::string>& item_ids() const { return item_ids_; }
  const RowMatrix& vectors() const { return vectors_; }
  std::span<const double> row(std::size_t i) const {
    return {vectors_.data() + i * dim(), dim()};
  }
  std::optional<std::size_t> index_of(std::string_view item_id) const;

  bool operator==(const EmbeddingMatrix& other) const {
    return item_ids_ == other.item_ids_ && vectors_ == other.vectors_;
  }

 private:
  std::vector<std::string> item_ids_;
  RowMatrix vectors_;
  std::unordered_map<std::string, std::size_t> index_;
};

// Text format: "<|V|> <d>" then one "<item_id> <v1> ... <vd>" line per item,
// values in shortest round-trip decimal form.
void save_embeddings(const EmbeddingMatrix& embeddings, const std::string& path);
EmbeddingMatrix load_embeddings(const std::string& path);

struct PopularityScores {
  std::vector<std::string> item_ids;
  std::vector<double> counts;  // interaction count per item

  double count_of(std::string_view item_id) const;
};

PopularityScores compute_popularity(const std::vector<InteractionSequence>& sequences,
                                    const std::vector<std::string>& item_ids);

enum class Backbone { kPop, kItem2Vec, kFism, kSasMini };
enum class LossMode { kAuto, kFullSoftmax, kSampled };

std::string_view to_string(Backbone backbone);
std::optional<Backbone> parse_backbone(std::string_view name);
std::string_view to_string(LossMode mode);
std::optional<LossMode> parse_loss_mode(std::string_view name);

struct TrainingConfig {
  Backbone backbone = Backbone::kSasMini;
  std::size_t dim = 64;
  std::size_t epochs = 50;
  double learning_rate = 0.05;
  std::size_t negatives_per_positive = 5;
  std::size_t window = 5;         // item2vec
  std::size_t max_seq_len = 50;   // sasmini window, fism context cap
  std::size_t n_heads = 1;        // sasmini supports exactly one
  std::size_t n_blocks = 1;       // sasmini supports exactly one
  std::uint64_t seed = 13;
  LossMode loss_mode = LossMode::kAuto;
  // kAuto uses the full softmax up to this many items.
  std::size_t full_softmax_limit = 10000;
};

// Throws UsageError on zero counts, a non-positive learning rate or an
// unsupported head/block count.
void validate(const TrainingConfig& config);

// One SGD unit. Interpretation depends on the backbone:
//   item2vec  items = {center, context}, negatives = K noise items
//   fism      items = {target, context...}, negatives = K items or empty
//   sasmini   items = window w0..wn (inputs w0..w(n-1), targets w1..wn),
//             negatives = n*K row-major or empty
// Empty negatives means full softmax over the catalog.
struct TrainingBatch {
  std::vector<std::size_t> items;
  std::vector<std::size_t> negatives;
};

// Dense gradient buffers parallel to a model's parameter blocks, tracking
// which rows were written so an update only visits those.
class Gradient {
 public:
  struct Shape {
    std::size_t rows = 0;
    std::size_t cols = 0;
  };

  explicit Gradient(std::vector<Shape> shapes);

  std::size_t block_count() const { return data_.size(); }
  const Shape& shape(std::size_t block) const { return shapes_[block]; }

  // Marks the row touched and returns it for accumulation.
  std::span<double> row(std::size_t block, std::size_t r);
  // Whole block as a row-major map; marks every row touched.
  Eigen::Map<RowMatrix> dense(std::size_t block);

  double value(std::size_t block, std::size_t flat_index) const {
    return data_[block][flat_index];
  }
  const std::vector<std::size_t>& touched_rows(std::size_t block) const { return touched_[block]; }

  // Zeroes touched rows and forgets them.
  void clear();

 private:
  void touch(std::size_t block, std::size_t r);

  std::vector<Shape> shapes_;
  std::vector<std::vector<double>> data_;
  std::vector<std::vector<char>> is_touched_;
  std::vector<std::vector<std::size_t>> touched_;
};

// A trainable parameter block stored row-major.
struct ParameterBlock {
  std::string name;
  double* data = nullptr;
  std::size_t rows = 0;
  std::size_t cols = 0;
};

class Model {
 public:
  virtual ~Model() = default;

  virtual Backbone backbone() const = 0;
  const std::vector<std::string>& item_ids() const { return item_ids_; }

  // The per-item vectors used for similarity ranking.
  virtual EmbeddingMatrix embeddings() const = 0;

  // Finite score per catalog item given the prefix (oldest first). Unknown
  // prefix items are skipped; throws DataError when none is known.
  std::vector<double> next_item_scores(const std::vector<std::string>& prefix) const;

 protected:
  explicit Model(std::vector<std::string> item_ids);
  virtual std::vector<double> score_indices(const std::vector<std::size_t>& prefix) const = 0;

  std::vector<std::string> item_ids_;
  std::unordered_map<std::string, std::size_t> index_;
};

class TrainableModel : public Model {
 public:
  virtual std::vector<ParameterBlock> parameters() = 0;

  // Loss of one batch. When `gradient` is non-null the gradient of that loss
  // is accumulated into it. This is the only gradient code path: training
  // and gradient_check both go through it.
  virtual double forward_backward(const TrainingBatch& batch, Gradient* gradient) const = 0;

  // Training units for one epoch, in the order they are applied.
  virtual std::vector<TrainingBatch> epoch_batches(
      const std::vector<std::vector<std::size_t>>& sequences, Rng& rng) const = 0;

  Gradient make_gradient();

  // forward_backward followed by p -= learning_rate * g. Returns the loss
  // before the step.
  double sgd_step(const TrainingBatch& batch, double learning_rate, Gradient& scratch);

 protected:
  using Model::Model;
};

struct TrainingLog {
  std::vector<double> epoch_mean_loss;
};

struct TrainedModel {
  std::unique_ptr<Model> model;
  TrainingLog log;
};

// Initialized, untrained model over the given vocabulary.
std::unique_ptr<Model> make_model(const TrainingConfig& config,
                                  const std::vector<std::string>& item_ids);

// Trains on sequences whose items are looked up in item_ids (unknown items
// are skipped). Deterministic for a fixed config.seed.
TrainedModel train(const std::vector<InteractionSequence>& sequences,
                   const std::vector<std::string>& item_ids, const TrainingConfig& config);

struct GradientCheckResult {
  double max_relative_error = 0.0;
  std::size_t n_parameters = 0;
  std::string worst_parameter;
};

// Compares forward_backward's gradient with central differences on every
// parameter. The relative error of one coordinate is
// |analytic - numeric| / max(|analytic|, |numeric|, 1e-6).
GradientCheckResult gradient_check(TrainableModel& model, const TrainingBatch& batch,
                                   double epsilon = 1e-4);

}  // namespace convrec
