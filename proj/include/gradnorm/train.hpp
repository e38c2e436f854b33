// Copyright 2026 The gradnorm-ood Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "gradnorm/dataset.hpp"
#include "gradnorm/linalg.hpp"
#include "gradnorm/nn.hpp"

namespace gradnorm {

// Plain minibatch SGD on mean cross-entropy at temperature 1. The learning
// rate is multiplied by lr_decay_factor at the start of each epoch listed in
// decay_epochs (0-based).
struct TrainConfig {
  std::size_t epochs = 100;
  std::size_t batch_size = 32;
  double learning_rate = 0.1;
  double lr_decay_factor = 0.1;
  std::vector<std::size_t> decay_epochs;
  std::uint64_t seed = 0;

  void validate() const;
};

struct EpochLog {
  std::size_t epoch = 0;
  double learning_rate = 0.0;
  double mean_loss = 0.0;
  // Measured on each batch before its update.
  double accuracy = 0.0;
};

// Trains in place; deterministic given the config seed. Throws NumericError if
// a batch loss turns non-finite.
std::vector<EpochLog> train(MlpModel& model, const Matrix& inputs,
                            std::span<const std::uint32_t> labels, const TrainConfig& cfg);

// One SGD step on a single batch; exposed for tests.
double sgd_step(MlpModel& model, const Matrix& inputs, std::span<const std::uint32_t> labels,
                std::span<const std::size_t> batch, double learning_rate);

double mean_cross_entropy(const MlpModel& model, const Matrix& inputs,
                          std::span<const std::uint32_t> labels);
double accuracy(const MlpModel& model, const Matrix& inputs,
                std::span<const std::uint32_t> labels);

// Penultimate activations and logits per row of `inputs`; labels are copied.
FeatureLogitDataset extract(const MlpModel& model, const Matrix& inputs,
                            const std::optional<std::vector<std::uint32_t>>& labels = std::nullopt);

}  // namespace gradnorm
