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

// Skip-gram with negative sampling; every sequence is one sentence.
class Item2Vec final : public TrainableModel {
 public:
  Item2Vec(const TrainingConfig& config, const std::vector<std::string>& item_ids)
      : TrainableModel(item_ids), config_(config) {
    const auto n = static_cast<Eigen::Index>(item_ids.size());
    const auto d = static_cast<Eigen::Index>(config.dim);
    input_.resize(n, d);
    output_.resize(n, d);
    Rng rng(config.seed);
    init_uniform(input_, config.dim, rng);
    init_uniform(output_, config.dim, rng);
  }

  Backbone backbone() const override { return Backbone::kItem2Vec; }

  EmbeddingMatrix embeddings() const override { return EmbeddingMatrix(item_ids_, input_); }

  std::vector<ParameterBlock> parameters() override {
    return {{"input", input_.data(), rows(input_), cols(input_)},
            {"output", output_.data(), rows(output_), cols(output_)}};
  }

  // -log s(u_o . v_c) - sum_k log s(-u_k . v_c)
  double forward_backward(const TrainingBatch& batch, Gradient* gradient) const override {
    const std::size_t center = batch.items.at(0);
    const std::size_t context = batch.items.at(1);
    const auto v = input_.row(static_cast<Eigen::Index>(center));
    const std::size_t d = config_.dim;

    const auto term = [&](std::size_t target, double label) {
      const auto u = output_.row(static_cast<Eigen::Index>(target));
      const double z = u.dot(v);
      // label 1: -log s(z) = softplus(-z); label 0: -log s(-z) = softplus(z)
      const double loss = label > 0 ? softplus(-z) : softplus(z);
      if (gradient != nullptr) {
        const double g = sigmoid(z) - label;
        auto dv = gradient->row(0, center);
        auto du = gradient->row(1, target);
        for (std::size_t j = 0; j < d; ++j) {
          dv[j] += g * u[static_cast<Eigen::Index>(j)];
          du[j] += g * v[static_cast<Eigen::Index>(j)];
        }
      }
      return loss;
    };

    double loss = term(context, 1.0);
    for (std::size_t negative : batch.negatives) loss += term(negative, 0.0);
    return loss;
  }

  std::vector<TrainingBatch> epoch_batches(const std::vector<std::vector<std::size_t>>& sequences,
                                           Rng& rng) const override {
    const std::size_t n_items = item_ids_.size();
    // Noise distribution: unigram counts raised to 0.75.
    std::vector<double> cdf(n_items, 0.0);
    for (const auto& sequence : sequences) {
      for (std::size_t item : sequence) cdf[item] += 1.0;
    }
    double total = 0.0;
    for (auto& value : cdf) {
      total += std::pow(value, 0.75);
      value = total;
    }
    const auto draw_noise = [&](std::size_t avoid) {
      for (int attempt = 0; attempt < 10; ++attempt) {
        const double u = rng.uniform() * total;
        const std::size_t pick = static_cast<std::size_t>(
            std::upper_bound(cdf.begin(), cdf.end(), u) - cdf.begin());
        const std::size_t item = std::min(pick, n_items - 1);
        if (item != avoid) return item;
      }
      return sample_other(rng, n_items, avoid);
    };

    std::vector<TrainingBatch> batches;
    const auto window = static_cast<std::ptrdiff_t>(config_.window);
    for (const auto& sequence : sequences) {
      const auto n = static_cast<std::ptrdiff_t>(sequence.size());
      for (std::ptrdiff_t i = 0; i < n; ++i) {
        for (std::ptrdiff_t j = std::max<std::ptrdiff_t>(0, i - window);
             j <= std::min(n - 1, i + window); ++j) {
          if (j == i || sequence[j] == sequence[i]) continue;
          batches.push_back({{sequence[i], sequence[j]}, {}});
        }
      }
    }
    rng.shuffle(batches);
    if (total > 0) {
      for (auto& batch : batches) {
        batch.negatives.reserve(config_.negatives_per_positive);
        for (std::size_t k = 0; k < config_.negatives_per_positive; ++k) {
          batch.negatives.push_back(draw_noise(batch.items[1]));
        }
      }
    }
    return batches;
  }

 protected:
  // mean over the prefix of v_i . u_c
  std::vector<double> score_indices(const std::vector<std::size_t>& prefix) const override {
    Eigen::RowVectorXd mean = Eigen::RowVectorXd::Zero(input_.cols());
    for (std::size_t i : prefix) mean += input_.row(static_cast<Eigen::Index>(i));
    mean /= static_cast<double>(prefix.size());
    const Eigen::VectorXd scores = output_ * mean.transpose();
    return {scores.data(), scores.data() + scores.size()};
  }

 private:
  static std::size_t rows(const RowMatrix& m) { return static_cast<std::size_t>(m.rows()); }
  static std::size_t cols(const RowMatrix& m) { return static_cast<std::size_t>(m.cols()); }

  TrainingConfig config_;
  RowMatrix input_;
  RowMatrix output_;
};

}  // namespace

std::unique_ptr<TrainableModel> make_item2vec(const TrainingConfig& config,
                                              const std::vector<std::string>& item_ids) {
  return std::make_unique<Item2Vec>(config, item_ids);
}

}  // namespace convrec::models
