// Copyright 2026 The gradnorm-ood Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "gradnorm/linalg.hpp"

namespace gradnorm {

class Rng;

// out_j = sum_i weight(i, j) * in_i + bias_j
struct LinearLayer {
  Matrix weight;  // in_dim x out_dim
  Vector bias;    // out_dim

  std::size_t in_dim() const noexcept { return weight.rows(); }
  std::size_t out_dim() const noexcept { return weight.cols(); }

  friend bool operator==(const LinearLayer&, const LinearLayer&) = default;
};

// Fully connected network with ReLU after every layer except the last.
class MlpModel {
 public:
  MlpModel() = default;
  // Throws ShapeError if layer dimensions do not chain or the output has
  // fewer than two classes.
  explicit MlpModel(std::vector<LinearLayer> layers);

  // Glorot-uniform weights, s = sqrt(6 / (fan_in + fan_out)), drawn layer by
  // layer in row-major order; biases start at zero. dims = {in, h1, ..., C}.
  static MlpModel glorot(std::span<const std::size_t> dims, Rng& rng);
  static MlpModel zeros(std::span<const std::size_t> dims);

  std::size_t input_dim() const noexcept { return layers_.front().in_dim(); }
  std::size_t output_dim() const noexcept { return layers_.back().out_dim(); }
  std::size_t layer_count() const noexcept { return layers_.size(); }
  std::size_t parameter_count() const noexcept;
  std::vector<std::size_t> dims() const;

  const std::vector<LinearLayer>& layers() const noexcept { return layers_; }
  std::vector<LinearLayer>& mutable_layers() noexcept { return layers_; }

  friend bool operator==(const MlpModel&, const MlpModel&) = default;

 private:
  std::vector<LinearLayer> layers_;
};

// Activations cached by forward() for the reverse pass. post_activations
// holds ReLU outputs for hidden layers and the raw logits for the last one.
struct ForwardTrace {
  Vector input;
  std::vector<Vector> pre_activations;
  std::vector<Vector> post_activations;

  // Input to the final linear layer: the raw input for a single-layer model.
  std::span<const double> penultimate() const;
};

struct ForwardResult {
  Vector logits;
  ForwardTrace trace;
};

ForwardResult forward(const MlpModel& model, std::span<const double> x);
// Logits only; skips building a trace.
Vector predict(const MlpModel& model, std::span<const double> x);

struct LayerGradient {
  Matrix weight;
  Vector bias;
};

struct Gradients {
  std::vector<LayerGradient> layers;
  Vector input;
};

// Reverse pass for a scalar loss whose gradient w.r.t. the logits is
// `dloss_dlogits`. ReLU'(0) is taken as 0. Throws ShapeError when the trace
// does not belong to a model of this shape.
Gradients backward(const MlpModel& model, const ForwardTrace& trace,
                   std::span<const double> dloss_dlogits);

// Which parameter gradients enter the score. LastLayerWeight excludes the
// final bias; Layer(k) and All include biases.
class ParamSelection {
 public:
  enum class Kind { kLastLayerWeight, kLayer, kAll };

  static ParamSelection last_layer_weight() noexcept { return {Kind::kLastLayerWeight, 0}; }
  static ParamSelection layer(std::size_t index) noexcept { return {Kind::kLayer, index}; }
  static ParamSelection all() noexcept { return {Kind::kAll, 0}; }
  // "last", "all", or "layer:K".
  static ParamSelection parse(std::string_view text);

  Kind kind() const noexcept { return kind_; }
  std::size_t index() const noexcept { return index_; }
  std::string to_string() const;

  friend bool operator==(const ParamSelection&, const ParamSelection&) = default;

 private:
  ParamSelection(Kind kind, std::size_t index) noexcept : kind_(kind), index_(index) {}

  Kind kind_ = Kind::kLastLayerWeight;
  std::size_t index_ = 0;
};

// Flattens the selected blocks, layer-major, each layer as weight (row-major)
// then bias. Throws InvalidArgument for an out-of-range layer index.
Vector select_gradients(const Gradients& grads, const ParamSelection& selection);

// "MLP1" | u32 layer count | per layer: u32 in, u32 out, f64 weight row-major,
// f64 bias. Little-endian.
void save_model(const std::filesystem::path& path, const MlpModel& model);
MlpModel load_model(const std::filesystem::path& path);

}  // namespace gradnorm
