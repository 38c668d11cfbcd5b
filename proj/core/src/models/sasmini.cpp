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
#include <limits>

#include "models/models.hpp"

namespace convrec::models {
namespace {

enum Block : std::size_t { kItems, kPositions, kQuery, kKey, kValue, kFf1, kFf1Bias, kFf2, kFf2Bias };

// Minimal self-attentive next-item model: item + learned position embedding,
// one causal single-head attention block with a residual connection, a
// residual ReLU feed-forward layer, and output scores h_t . E^T against the
// same item table.
class SasMini final : public TrainableModel {
 public:
  SasMini(const TrainingConfig& config, const std::vector<std::string>& item_ids)
      : TrainableModel(item_ids),
        config_(config),
        full_softmax_(use_full_softmax(config, item_ids.size())),
        scale_(1.0 / std::sqrt(static_cast<double>(config.dim))) {
    const auto n = static_cast<Eigen::Index>(item_ids.size());
    const auto d = static_cast<Eigen::Index>(config.dim);
    const auto L = static_cast<Eigen::Index>(config.max_seq_len);
    Rng rng(config.seed);
    items_.resize(n, d);
    positions_.resize(L, d);
    query_.resize(d, d);
    key_.resize(d, d);
    value_.resize(d, d);
    ff1_.resize(d, d);
    ff2_.resize(d, d);
    for (RowMatrix* m : {&items_, &positions_, &query_, &key_, &value_, &ff1_, &ff2_}) {
      init_uniform(*m, config.dim, rng);
    }
    ff1_bias_ = RowMatrix::Zero(1, d);
    ff2_bias_ = RowMatrix::Zero(1, d);
  }

  Backbone backbone() const override { return Backbone::kSasMini; }

  EmbeddingMatrix embeddings() const override { return EmbeddingMatrix(item_ids_, items_); }

  std::vector<ParameterBlock> parameters() override {
    const auto block = [](const char* name, RowMatrix& m) {
      return ParameterBlock{name, m.data(), static_cast<std::size_t>(m.rows()),
                            static_cast<std::size_t>(m.cols())};
    };
    return {block("items", items_),   block("positions", positions_), block("query", query_),
            block("key", key_),       block("value", value_),         block("ff1", ff1_),
            block("ff1_bias", ff1_bias_), block("ff2", ff2_),         block("ff2_bias", ff2_bias_)};
  }

  double forward_backward(const TrainingBatch& batch, Gradient* gradient) const override {
    if (batch.items.size() < 2) throw std::invalid_argument("sasmini batch needs 2+ items");
    const std::size_t n = batch.items.size() - 1;
    const std::vector<std::size_t> inputs(batch.items.begin(), batch.items.end() - 1);
    const Forward f = forward(inputs);
    const double inv_n = 1.0 / static_cast<double>(n);
    const std::size_t k_neg = config_.negatives_per_positive;
    const bool sampled = !batch.negatives.empty();
    if (sampled && batch.negatives.size() != n * k_neg) {
      throw std::invalid_argument("sasmini batch has the wrong number of negatives");
    }

    double loss = 0.0;
    RowMatrix d_hidden = RowMatrix::Zero(f.hidden.rows(), f.hidden.cols());
    if (!sampled) {
      RowMatrix logits = f.hidden * items_.transpose();  // n x |V|
      for (std::size_t t = 0; t < n; ++t) {
        auto row = logits.row(static_cast<Eigen::Index>(t));
        const double max_logit = row.maxCoeff();
        row = (row.array() - max_logit).exp();
        const double sum = row.sum();
        const auto target = static_cast<Eigen::Index>(batch.items[t + 1]);
        loss -= std::log(row[target] / sum);
        row /= sum;
        row[target] -= 1.0;
        row *= inv_n;
      }
      if (gradient != nullptr) {
        d_hidden = logits * items_;
        gradient->dense(kItems).noalias() += logits.transpose() * f.hidden;
      }
    } else {
      std::vector<std::size_t> candidates(k_neg + 1);
      Eigen::VectorXd logits(static_cast<Eigen::Index>(k_neg + 1));
      for (std::size_t t = 0; t < n; ++t) {
        candidates[0] = batch.items[t + 1];
        std::copy_n(batch.negatives.begin() + static_cast<std::ptrdiff_t>(t * k_neg), k_neg,
                    candidates.begin() + 1);
        const auto h = f.hidden.row(static_cast<Eigen::Index>(t));
        for (std::size_t k = 0; k <= k_neg; ++k) {
          logits[static_cast<Eigen::Index>(k)] = items_.row(static_cast<Eigen::Index>(candidates[k])).dot(h);
        }
        const double max_logit = logits.maxCoeff();
        const Eigen::VectorXd exps = (logits.array() - max_logit).exp();
        const double sum = exps.sum();
        loss -= logits[0] - max_logit - std::log(sum);
        if (gradient == nullptr) continue;
        for (std::size_t k = 0; k <= k_neg; ++k) {
          const double g = (exps[static_cast<Eigen::Index>(k)] / sum - (k == 0 ? 1.0 : 0.0)) * inv_n;
          const auto c = static_cast<Eigen::Index>(candidates[k]);
          d_hidden.row(static_cast<Eigen::Index>(t)) += g * items_.row(c);
          auto de = gradient->row(kItems, candidates[k]);
          for (std::size_t j = 0; j < config_.dim; ++j) de[j] += g * h[static_cast<Eigen::Index>(j)];
        }
      }
    }
    loss *= inv_n;
    if (gradient == nullptr) return loss;

    // Feed-forward block: hidden = h1 + relu(h1 W1 + b1) W2 + b2.
    gradient->dense(kFf2).noalias() += f.relu.transpose() * d_hidden;
    gradient->dense(kFf2Bias) += d_hidden.colwise().sum();
    RowMatrix d_pre = d_hidden * ff2_.transpose();
    d_pre = d_pre.cwiseProduct((f.pre_relu.array() > 0.0).cast<double>().matrix());
    gradient->dense(kFf1).noalias() += f.h1.transpose() * d_pre;
    gradient->dense(kFf1Bias) += d_pre.colwise().sum();
    const RowMatrix d_h1 = d_hidden + d_pre * ff1_.transpose();

    // Attention block: h1 = x + softmax_causal(x Wq (x Wk)^T * scale) x Wv.
    const RowMatrix d_attn_weights = d_h1 * f.v.transpose();
    const RowMatrix d_v = f.attn.transpose() * d_h1;
    RowMatrix d_scores = f.attn.cwiseProduct(d_attn_weights);
    const Eigen::VectorXd row_dot = d_scores.rowwise().sum();
    d_scores -= f.attn.cwiseProduct(row_dot.replicate(1, d_scores.cols()));
    d_scores *= scale_;
    const RowMatrix d_q = d_scores * f.k;
    const RowMatrix d_k = d_scores.transpose() * f.q;
    gradient->dense(kQuery).noalias() += f.x.transpose() * d_q;
    gradient->dense(kKey).noalias() += f.x.transpose() * d_k;
    gradient->dense(kValue).noalias() += f.x.transpose() * d_v;
    const RowMatrix d_x =
        d_h1 + d_q * query_.transpose() + d_k * key_.transpose() + d_v * value_.transpose();

    for (std::size_t t = 0; t < n; ++t) {
      auto de = gradient->row(kItems, inputs[t]);
      auto dp = gradient->row(kPositions, t);
      for (std::size_t j = 0; j < config_.dim; ++j) {
        const double g = d_x(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(j));
        de[j] += g;
        dp[j] += g;
      }
    }
    return loss;
  }

  // Sequences longer than max_seq_len + 1 are cut into windows of that size
  // taken from the end, adjacent windows sharing one item.
  std::vector<TrainingBatch> epoch_batches(const std::vector<std::vector<std::size_t>>& sequences,
                                           Rng& rng) const override {
    std::vector<TrainingBatch> batches;
    const std::size_t span = config_.max_seq_len + 1;
    for (const auto& sequence : sequences) {
      if (sequence.size() < 2) continue;
      std::size_t end = sequence.size();
      while (end >= 2) {
        const std::size_t begin = end > span ? end - span : 0;
        batches.push_back({{sequence.begin() + static_cast<std::ptrdiff_t>(begin),
                            sequence.begin() + static_cast<std::ptrdiff_t>(end)},
                           {}});
        if (begin == 0) break;
        end = begin + 1;
      }
    }
    rng.shuffle(batches);
    if (!full_softmax_) {
      const std::size_t n_items = item_ids_.size();
      for (auto& batch : batches) {
        for (std::size_t t = 1; t < batch.items.size(); ++t) {
          for (std::size_t k = 0; k < config_.negatives_per_positive; ++k) {
            batch.negatives.push_back(sample_other(rng, n_items, batch.items[t]));
          }
        }
      }
    }
    return batches;
  }

 protected:
  std::vector<double> score_indices(const std::vector<std::size_t>& prefix) const override {
    const std::size_t start =
        prefix.size() > config_.max_seq_len ? prefix.size() - config_.max_seq_len : 0;
    const std::vector<std::size_t> window(prefix.begin() + static_cast<std::ptrdiff_t>(start),
                                          prefix.end());
    const Forward f = forward(window);
    const Eigen::VectorXd scores =
        items_ * f.hidden.row(f.hidden.rows() - 1).transpose();
    return {scores.data(), scores.data() + scores.size()};
  }

 private:
  struct Forward {
    RowMatrix x, q, k, v, attn, h1, pre_relu, relu, hidden;
  };

  Forward forward(const std::vector<std::size_t>& inputs) const {
    const auto n = static_cast<Eigen::Index>(inputs.size());
    if (inputs.empty() || inputs.size() > config_.max_seq_len) {
      throw std::invalid_argument("sasmini input length out of range");
    }
    Forward f;
    f.x.resize(n, items_.cols());
    for (Eigen::Index t = 0; t < n; ++t) {
      f.x.row(t) = items_.row(static_cast<Eigen::Index>(inputs[static_cast<std::size_t>(t)])) +
                   positions_.row(t);
    }
    f.q = f.x * query_;
    f.k = f.x * key_;
    f.v = f.x * value_;
    f.attn = RowMatrix::Zero(n, n);
    const RowMatrix scores = (f.q * f.k.transpose()) * scale_;
    for (Eigen::Index t = 0; t < n; ++t) {
      const double max_score = scores.row(t).head(t + 1).maxCoeff();
      double sum = 0.0;
      for (Eigen::Index s = 0; s <= t; ++s) {
        f.attn(t, s) = std::exp(scores(t, s) - max_score);
        sum += f.attn(t, s);
      }
      f.attn.row(t).head(t + 1) /= sum;
    }
    f.h1 = f.x + f.attn * f.v;
    f.pre_relu = (f.h1 * ff1_).rowwise() + ff1_bias_.row(0);
    f.relu = f.pre_relu.cwiseMax(0.0);
    f.hidden = f.h1 + ((f.relu * ff2_).rowwise() + ff2_bias_.row(0));
    return f;
  }

  TrainingConfig config_;
  bool full_softmax_;
  double scale_;
  RowMatrix items_, positions_, query_, key_, value_, ff1_, ff1_bias_, ff2_, ff2_bias_;
};

}  // namespace

std::unique_ptr<TrainableModel> make_sasmini(const TrainingConfig& config,
                                             const std::vector<std::string>& item_ids) {
  return std::make_unique<SasMini>(config, item_ids);
}

}  // namespace convrec::models
