// Copyright 2026 The gradnorm-ood Authors
// SPDX-License-Identifier: Apache-2.0

#include "gradnorm/train.hpp"

#include <cmath>
#include <numeric>
#include <string>

#include "gradnorm/errors.hpp"
#include "gradnorm/losses.hpp"
#include "gradnorm/rng.hpp"

namespace gradnorm {
namespace {

void check_training_data(const MlpModel& model, const Matrix& inputs,
                         std::span<const std::uint32_t> labels) {
  if (inputs.rows() != labels.size()) {
    throw ShapeError("training data has " + std::to_string(inputs.rows()) + " rows but " +
                     std::to_string(labels.size()) + " labels");
  }
  if (inputs.rows() > 0 && inputs.cols() != model.input_dim()) {
    throw ShapeError("model expects inputs of width " + std::to_string(model.input_dim()) +
                     ", data has width " + std::to_string(inputs.cols()));
  }
  for (auto y : labels) {
    if (y >= model.output_dim()) {
      throw InvalidArgument("label " + std::to_string(y) + " out of range for a " +
                            std::to_string(model.output_dim()) + "-class model");
    }
  }
}

}  // namespace

void TrainConfig::validate() const {
  if (epochs == 0) throw InvalidArgument("epochs must be positive");
  if (batch_size == 0) throw InvalidArgument("batch_size must be positive");
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) {
    throw InvalidArgument("learning_rate must be finite and >= 0");
  }
  if (!(lr_decay_factor > 0.0) || !std::isfinite(lr_decay_factor)) {
    throw InvalidArgument("lr_decay_factor must be finite and > 0");
  }
}

double sgd_step(MlpModel& model, const Matrix& inputs, std::span<const std::uint32_t> labels,
                std::span<const std::size_t> batch, double learning_rate) {
  if (batch.empty()) return 0.0;
  const double inv_batch = 1.0 / static_cast<double>(batch.size());

  std::vector<LayerGradient> total;
  for (const auto& layer : model.layers()) {
    total.push_back({Matrix(layer.in_dim(), layer.out_dim()), Vector(layer.out_dim(), 0.0)});
  }
  double loss = 0.0;
  for (std::size_t idx : batch) {
    const auto fwd = forward(model, inputs.row(idx));
    const double l = cross_entropy(fwd.logits, labels[idx]);
    if (!std::isfinite(l)) {
      throw NumericError("non-finite training loss at sample " + std::to_string(idx) +
                         " (learning rate " + std::to_string(learning_rate) + " may be too high)");
    }
    loss += l;
    Vector upstream = cross_entropy_grad(fwd.logits, labels[idx]);
    for (double& g : upstream) g *= inv_batch;
    const auto grads = backward(model, fwd.trace, upstream);
    for (std::size_t k = 0; k < total.size(); ++k) {
      auto dst = total[k].weight.data();
      const auto src = grads.layers[k].weight.data();
      for (std::size_t j = 0; j < dst.size(); ++j) dst[j] += src[j];
      for (std::size_t j = 0; j < total[k].bias.size(); ++j) total[k].bias[j] += grads.layers[k].bias[j];
    }
  }
  if (learning_rate != 0.0) {
    auto& layers = model.mutable_layers();
    for (std::size_t k = 0; k < layers.size(); ++k) {
      auto w = layers[k].weight.data();
      const auto g = total[k].weight.data();
      for (std::size_t j = 0; j < w.size(); ++j) w[j] -= learning_rate * g[j];
      for (std::size_t j = 0; j < layers[k].bias.size(); ++j) {
        layers[k].bias[j] -= learning_rate * total[k].bias[j];
      }
    }
  }
  return loss * inv_batch;
}

std::vector<EpochLog> train(MlpModel& model, const Matrix& inputs,
                            std::span<const std::uint32_t> labels, const TrainConfig& cfg) {
  cfg.validate();
  check_training_data(model, inputs, labels);
  const std::size_t n = inputs.rows();
  if (n == 0) throw InvalidArgument("cannot train on an empty dataset");

  Rng rng(cfg.seed);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  double lr = cfg.learning_rate;
  std::vector<EpochLog> log;
  log.reserve(cfg.epochs);

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    for (std::size_t d : cfg.decay_epochs) {
      if (d == epoch) lr *= cfg.lr_decay_factor;
    }
    for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);

    double loss_sum = 0.0;
    std::size_t correct = 0;
    for (std::size_t start = 0; start < n; start += cfg.batch_size) {
      const std::size_t end = std::min(n, start + cfg.batch_size);
      const std::span<const std::size_t> batch(order.data() + start, end - start);
      for (std::size_t idx : batch) {
        if (argmax(predict(model, inputs.row(idx))) == labels[idx]) ++correct;
      }
      loss_sum += sgd_step(model, inputs, labels, batch, lr) * static_cast<double>(batch.size());
    }
    log.push_back({epoch, lr, loss_sum / static_cast<double>(n),
                   static_cast<double>(correct) / static_cast<double>(n)});
  }
  return log;
}

double mean_cross_entropy(const MlpModel& model, const Matrix& inputs,
                          std::span<const std::uint32_t> labels) {
  check_training_data(model, inputs, labels);
  if (inputs.rows() == 0) return 0.0;
  double sum = 0.0;
  for (std::size_t i = 0; i < inputs.rows(); ++i) {
    sum += cross_entropy(predict(model, inputs.row(i)), labels[i]);
  }
  return sum / static_cast<double>(inputs.rows());
}

double accuracy(const MlpModel& model, const Matrix& inputs, std::span<const std::uint32_t> labels) {
  check_training_data(model, inputs, labels);
  if (inputs.rows() == 0) return 0.0;
  std::size_t correct = 0;
  for (std::size_t i = 0; i < inputs.rows(); ++i) {
    if (argmax(predict(model, inputs.row(i))) == labels[i]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(inputs.rows());
}

FeatureLogitDataset extract(const MlpModel& model, const Matrix& inputs,
                            const std::optional<std::vector<std::uint32_t>>& labels) {
  const std::size_t n = inputs.rows();
  if (n > 0 && inputs.cols() != model.input_dim()) {
    throw ShapeError("model expects inputs of width " + std::to_string(model.input_dim()) +
                     ", data has width " + std::to_string(inputs.cols()));
  }
  if (labels && labels->size() != n) {
    throw ShapeError("extract: " + std::to_string(n) + " inputs but " +
                     std::to_string(labels->size()) + " labels");
  }
  const std::size_t m = model.layers().back().in_dim();
  FeatureLogitDataset ds;
  ds.features = Matrix(n, m);
  ds.logits = Matrix(n, model.output_dim());
  for (std::size_t i = 0; i < n; ++i) {
    const auto fwd = forward(model, inputs.row(i));
    const auto pen = fwd.trace.penultimate();
    std::copy(pen.begin(), pen.end(), ds.features.row(i).begin());
    std::copy(fwd.logits.begin(), fwd.logits.end(), ds.logits.row(i).begin());
  }
  ds.labels = labels;
  return ds;
}

}  // namespace gradnorm
