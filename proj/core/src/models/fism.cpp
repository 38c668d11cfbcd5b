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

#include <algorithm>

#include "models/models.hpp"

namespace convrec::models {
namespace {

// Factored item similarity: an item's score for a user is the mean of
// p_i . q_j over the user's other items i, plus an item bias. Trained with
// softmax cross-entropy over the catalog (or a sampled subset).
class Fism final : public TrainableModel {
 public:
  Fism(const TrainingConfig& config, const std::vector<std::string>& item_ids)
      : TrainableModel(item_ids), config_(config), full_softmax_(use_full_softmax(config, item_ids.size())) {
    const auto n = static_cast<Eigen::Index>(item_ids.size());
    const auto d = static_cast<Eigen::Index>(config.dim);
    history_.resize(n, d);
    target_.resize(n, d);
    bias_ = RowMatrix::Zero(n, 1);
    Rng rng(config.seed);
    init_uniform(history_, config.dim, rng);
    init_uniform(target_, config.dim, rng);
  }

  Backbone backbone() const override { return Backbone::kFism; }

  EmbeddingMatrix embeddings() const override { return EmbeddingMatrix(item_ids_, history_); }

  std::vector<ParameterBlock> parameters() override {
    const auto n = item_ids_.size();
    return {{"history", history_.data(), n, config_.dim},
            {"target", target_.data(), n, config_.dim},
            {"bias", bias_.data(), n, 1}};
  }

  double forward_backward(const TrainingBatch& batch, Gradient* gradient) const override {
    const std::size_t target = batch.items.at(0);
    const std::size_t n_context = batch.items.size() - 1;
    if (n_context == 0) throw std::invalid_argument("fism batch needs at least one context item");

    Eigen::RowVectorXd h = Eigen::RowVectorXd::Zero(history_.cols());
    for (std::size_t c = 1; c < batch.items.size(); ++c) {
      h += history_.row(static_cast<Eigen::Index>(batch.items[c]));
    }
    h /= static_cast<double>(n_context);

    // Candidate 0 is the target.
    std::vector<std::size_t> candidates;
    if (batch.negatives.empty()) {
      candidates.resize(item_ids_.size());
      for (std::size_t i = 0; i < candidates.size(); ++i) candidates[i] = i;
      std::swap(candidates[0], candidates[target]);
    } else {
      candidates.push_back(target);
      candidates.insert(candidates.end(), batch.negatives.begin(), batch.negatives.end());
    }

    Eigen::VectorXd logits(static_cast<Eigen::Index>(candidates.size()));
    for (std::size_t k = 0; k < candidates.size(); ++k) {
      const auto c = static_cast<Eigen::Index>(candidates[k]);
      logits[static_cast<Eigen::Index>(k)] = target_.row(c).dot(h) + bias_(c, 0);
    }
    const double max_logit = logits.maxCoeff();
    const Eigen::VectorXd exps = (logits.array() - max_logit).exp();
    const double sum = exps.sum();
    const double loss = -(logits[0] - max_logit - std::log(sum));
    if (gradient == nullptr) return loss;

    Eigen::RowVectorXd dh = Eigen::RowVectorXd::Zero(h.size());
    const std::size_t d = config_.dim;
    for (std::size_t k = 0; k < candidates.size(); ++k) {
      const double g = exps[static_cast<Eigen::Index>(k)] / sum - (k == 0 ? 1.0 : 0.0);
      const auto c = candidates[k];
      const auto q = target_.row(static_cast<Eigen::Index>(c));
      auto dq = gradient->row(1, c);
      for (std::size_t j = 0; j < d; ++j) dq[j] += g * h[static_cast<Eigen::Index>(j)];
      gradient->row(2, c)[0] += g;
      dh += g * q;
    }
    dh /= static_cast<double>(n_context);
    for (std::size_t c = 1; c < batch.items.size(); ++c) {
      auto dp = gradient->row(0, batch.items[c]);
      for (std::size_t j = 0; j < d; ++j) dp[j] += dh[static_cast<Eigen::Index>(j)];
    }
    return loss;
  }

  // One unit per (user, position): target = that item, context = the user's
  // other distinct items nearest to it, at most max_seq_len of them.
  std::vector<TrainingBatch> epoch_batches(const std::vector<std::vector<std::size_t>>& sequences,
                                           Rng& rng) const override {
    std::vector<TrainingBatch> batches;
    const std::size_t n_items = item_ids_.size();
    for (const auto& sequence : sequences) {
      const std::size_t n = sequence.size();
      for (std::size_t t = 0; t < n; ++t) {
        TrainingBatch batch;
        batch.items.push_back(sequence[t]);
        for (std::size_t offset = 1; offset < n && batch.items.size() <= config_.max_seq_len;
             ++offset) {
          for (std::size_t pos : {t - offset, t + offset}) {
            if (pos >= n || batch.items.size() > config_.max_seq_len) continue;  // wraps when t < offset
            const std::size_t item = sequence[pos];
            if (item == sequence[t]) continue;
            if (std::find(batch.items.begin() + 1, batch.items.end(), item) != batch.items.end()) {
              continue;
            }
            batch.items.push_back(item);
          }
        }
        if (batch.items.size() < 2) continue;
        batches.push_back(std::move(batch));
      }
    }
    rng.shuffle(batches);
    if (!full_softmax_) {
      for (auto& batch : batches) {
        for (std::size_t k = 0; k < config_.negatives_per_positive; ++k) {
          batch.negatives.push_back(sample_other(rng, n_items, batch.items[0]));
        }
      }
    }
    return batches;
  }

 protected:
  std::vector<double> score_indices(const std::vector<std::size_t>& prefix) const override {
    const std::size_t start = prefix.size() > config_.max_seq_len ? prefix.size() - config_.max_seq_len : 0;
    Eigen::RowVectorXd h = Eigen::RowVectorXd::Zero(history_.cols());
    for (std::size_t i = start; i < prefix.size(); ++i) {
      h += history_.row(static_cast<Eigen::Index>(prefix[i]));
    }
    h /= static_cast<double>(prefix.size() - start);
    const Eigen::VectorXd scores = target_ * h.transpose() + bias_.col(0);
    return {scores.data(), scores.data() + scores.size()};
  }

 private:
  TrainingConfig config_;
  bool full_softmax_;
  RowMatrix history_;
  RowMatrix target_;
  RowMatrix bias_;
};

}  // namespace

std::unique_ptr<TrainableModel> make_fism(const TrainingConfig& config,
                                          const std::vector<std::string>& item_ids) {
  return std::make_unique<Fism>(config, item_ids);
}

}  // namespace convrec::models
