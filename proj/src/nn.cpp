// Copyright 2026 The gradnorm-ood Authors
// SPDX-License-Identifier: Apache-2.0

#include "gradnorm/nn.hpp"

#include <charconv>
#include <cmath>

#include "binary_io.hpp"
#include "gradnorm/errors.hpp"
#include "gradnorm/rng.hpp"

namespace gradnorm {
namespace {

constexpr std::string_view kModelMagic = "MLP1";

void check_dims(std::span<const std::size_t> dims) {
  if (dims.size() < 2) throw InvalidArgument("model needs at least input and output dims");
  for (std::size_t d : dims) {
    if (d == 0) throw InvalidArgument("model dims must be positive");
  }
}

}  // namespace

MlpModel::MlpModel(std::vector<LinearLayer> layers) : layers_(std::move(layers)) {
  if (layers_.empty()) throw ShapeError("model has no layers");
  for (std::size_t k = 0; k < layers_.size(); ++k) {
    const auto& layer = layers_[k];
    if (layer.in_dim() == 0 || layer.out_dim() == 0) {
      throw ShapeError("layer " + std::to_string(k) + " has empty weight " +
                       layer.weight.shape_string());
    }
    if (layer.bias.size() != layer.out_dim()) {
      throw ShapeError("layer " + std::to_string(k) + ": weight " + layer.weight.shape_string() +
                       " but bias has " + std::to_string(layer.bias.size()) + " entries");
    }
    if (k > 0 && layers_[k - 1].out_dim() != layer.in_dim()) {
      throw ShapeError("layer " + std::to_string(k - 1) + " outputs " +
                       std::to_string(layers_[k - 1].out_dim()) + " but layer " +
                       std::to_string(k) + " expects " + std::to_string(layer.in_dim()));
    }
  }
  if (output_dim() < 2) {
    throw ShapeError("model must produce at least 2 classes, got " + std::to_string(output_dim()));
  }
}

MlpModel MlpModel::zeros(std::span<const std::size_t> dims) {
  check_dims(dims);
  std::vector<LinearLayer> layers;
  for (std::size_t k = 0; k + 1 < dims.size(); ++k) {
    layers.push_back({Matrix(dims[k], dims[k + 1]), Vector(dims[k + 1], 0.0)});
  }
  return MlpModel(std::move(layers));
}

MlpModel MlpModel::glorot(std::span<const std::size_t> dims, Rng& rng) {
  MlpModel model = zeros(dims);
  for (auto& layer : model.layers_) {
    const double s = std::sqrt(6.0 / static_cast<double>(layer.in_dim() + layer.out_dim()));
    for (double& w : layer.weight.data()) w = rng.uniform(-s, s);
  }
  return model;
}

std::size_t MlpModel::parameter_count() const noexcept {
  std::size_t n = 0;
  for (const auto& layer : layers_) n += layer.weight.size() + layer.bias.size();
  return n;
}

std::vector<std::size_t> MlpModel::dims() const {
  std::vector<std::size_t> d{input_dim()};
  for (const auto& layer : layers_) d.push_back(layer.out_dim());
  return d;
}

std::span<const double> ForwardTrace::penultimate() const {
  if (post_activations.size() < 2) return input;
  return post_activations[post_activations.size() - 2];
}

ForwardResult forward(const MlpModel& model, std::span<const double> x) {
  if (x.size() != model.input_dim()) {
    throw ShapeError("forward: model expects input of length " +
                     std::to_string(model.input_dim()) + ", got " + std::to_string(x.size()));
  }
  ForwardResult result;
  auto& trace = result.trace;
  trace.input.assign(x.begin(), x.end());
  const std::size_t depth = model.layer_count();
  trace.pre_activations.reserve(depth);
  trace.post_activations.reserve(depth);

  std::span<const double> current = trace.input;
  for (std::size_t k = 0; k < depth; ++k) {
    const auto& layer = model.layers()[k];
    Vector z = matvec(layer.weight, current);
    for (std::size_t j = 0; j < z.size(); ++j) z[j] += layer.bias[j];
    Vector a = z;
    if (k + 1 < depth) {
      for (double& v : a) v = v > 0.0 ? v : 0.0;
    }
    trace.pre_activations.push_back(std::move(z));
    trace.post_activations.push_back(std::move(a));
    current = trace.post_activations.back();
  }
  result.logits = trace.post_activations.back();
  return result;
}

Vector predict(const MlpModel& model, std::span<const double> x) {
  if (x.size() != model.input_dim()) {
    throw ShapeError("predict: model expects input of length " +
                     std::to_string(model.input_dim()) + ", got " + std::to_string(x.size()));
  }
  Vector current(x.begin(), x.end());
  const std::size_t depth = model.layer_count();
  for (std::size_t k = 0; k < depth; ++k) {
    const auto& layer = model.layers()[k];
    Vector z = matvec(layer.weight, current);
    for (std::size_t j = 0; j < z.size(); ++j) {
      z[j] += layer.bias[j];
      if (k + 1 < depth && !(z[j] > 0.0)) z[j] = 0.0;
    }
    current = std::move(z);
  }
  return current;
}

Gradients backward(const MlpModel& model, const ForwardTrace& trace,
                   std::span<const double> dloss_dlogits) {
  const std::size_t depth = model.layer_count();
  if (trace.pre_activations.size() != depth || trace.post_activations.size() != depth ||
      trace.input.size() != model.input_dim()) {
    throw ShapeError("backward: trace does not match a " + std::to_string(depth) +
                     "-layer model");
  }
  for (std::size_t k = 0; k < depth; ++k) {
    if (trace.pre_activations[k].size() != model.layers()[k].out_dim()) {
      throw ShapeError("backward: trace layer " + std::to_string(k) + " has width " +
                       std::to_string(trace.pre_activations[k].size()) + ", model has " +
                       std::to_string(model.layers()[k].out_dim()));
    }
  }
  if (dloss_dlogits.size() != model.output_dim()) {
    throw ShapeError("backward: upstream gradient has length " +
                     std::to_string(dloss_dlogits.size()) + ", model outputs " +
                     std::to_string(model.output_dim()));
  }

  Gradients grads;
  grads.layers.resize(depth);
  Vector delta(dloss_dlogits.begin(), dloss_dlogits.end());

  for (std::size_t k = depth; k-- > 0;) {
    const auto& layer = model.layers()[k];
    const std::span<const double> in =
        k == 0 ? std::span<const double>(trace.input) : std::span<const double>(trace.post_activations[k - 1]);

    auto& g = grads.layers[k];
    g.weight = Matrix(layer.in_dim(), layer.out_dim());
    for (std::size_t i = 0; i < layer.in_dim(); ++i) {
      auto row = g.weight.row(i);
      for (std::size_t j = 0; j < layer.out_dim(); ++j) row[j] = in[i] * delta[j];
    }
    g.bias = delta;

    Vector upstream(layer.in_dim(), 0.0);
    for (std::size_t i = 0; i < layer.in_dim(); ++i) {
      const auto row = layer.weight.row(i);
      double sum = 0.0;
      for (std::size_t j = 0; j < layer.out_dim(); ++j) sum += row[j] * delta[j];
      upstream[i] = sum;
    }
    if (k > 0) {
      const auto& z = trace.pre_activations[k - 1];
      for (std::size_t i = 0; i < upstream.size(); ++i) {
        if (!(z[i] > 0.0)) upstream[i] = 0.0;
      }
    }
    delta = std::move(upstream);
  }
  grads.input = std::move(delta);
  return grads;
}

ParamSelection ParamSelection::parse(std::string_view text) {
  if (text == "last") return last_layer_weight();
  if (text == "all") return all();
  constexpr std::string_view kPrefix = "layer:";
  if (text.starts_with(kPrefix)) {
    const auto digits = text.substr(kPrefix.size());
    std::size_t index = 0;
    const auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), index);
    if (ec == std::errc{} && ptr == digits.data() + digits.size() && !digits.empty()) {
      return layer(index);
    }
  }
  throw InvalidArgument("invalid selection \"" + std::string(text) +
                        "\" (expected last, all or layer:K)");
}

std::string ParamSelection::to_string() const {
  switch (kind_) {
    case Kind::kLastLayerWeight: return "last";
    case Kind::kAll: return "all";
    case Kind::kLayer: return "layer:" + std::to_string(index_);
  }
  return "?";
}

Vector select_gradients(const Gradients& grads, const ParamSelection& selection) {
  Vector out;
  auto append_layer = [&out](const LayerGradient& g, bool with_bias) {
    const auto w = g.weight.data();
    out.insert(out.end(), w.begin(), w.end());
    if (with_bias) out.insert(out.end(), g.bias.begin(), g.bias.end());
  };
  switch (selection.kind()) {
    case ParamSelection::Kind::kLastLayerWeight:
      append_layer(grads.layers.back(), false);
      break;
    case ParamSelection::Kind::kLayer:
      if (selection.index() >= grads.layers.size()) {
        throw InvalidArgument("layer index " + std::to_string(selection.index()) +
                              " out of range for " + std::to_string(grads.layers.size()) +
                              "-layer model");
      }
      append_layer(grads.layers[selection.index()], true);
      break;
    case ParamSelection::Kind::kAll:
      for (const auto& g : grads.layers) append_layer(g, true);
      break;
  }
  return out;
}

void save_model(const std::filesystem::path& path, const MlpModel& model) {
  io::Writer w;
  w.magic(kModelMagic);
  w.u32(model.layer_count(), "layer count");
  for (const auto& layer : model.layers()) {
    w.u32(layer.in_dim(), "in_dim");
    w.u32(layer.out_dim(), "out_dim");
    for (double v : layer.weight.data()) w.put(v);
    for (double v : layer.bias) w.put(v);
  }
  w.commit(path);
}

MlpModel load_model(const std::filesystem::path& path) {
  io::Reader r(path);
  r.expect_magic(kModelMagic);
  const auto count = r.get<std::uint32_t>();
  if (count == 0) throw IoError(IoError::Kind::kCorrupt, r.name() + ": model has no layers");
  std::vector<LinearLayer> layers;
  for (std::uint32_t k = 0; k < count; ++k) {
    const auto in = r.get<std::uint32_t>();
    const auto out = r.get<std::uint32_t>();
    const std::uint64_t n_weights = std::uint64_t{in} * out;
    r.require_elements(n_weights + out, sizeof(double));
    std::vector<double> w(n_weights);
    for (double& v : w) v = r.get<double>();
    Vector b(out);
    for (double& v : b) v = r.get<double>();
    layers.push_back({Matrix(in, out, std::move(w)), std::move(b)});
  }
  if (r.remaining() != 0) {
    throw IoError(IoError::Kind::kCorrupt, r.name() + ": trailing bytes after model");
  }
  try {
    return MlpModel(std::move(layers));
  } catch (const ShapeError& e) {
    throw IoError(IoError::Kind::kCorrupt, r.name() + ": " + e.what());
  }
}

}  // namespace gradnorm
