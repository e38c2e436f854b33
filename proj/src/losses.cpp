// Copyright 2026 The gradnorm-ood Authors
// SPDX-License-Identifier: Apache-2.0

#include "gradnorm/losses.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "gradnorm/errors.hpp"

namespace gradnorm {
namespace {

void check_logits(std::span<const double> logits, const char* op) {
  if (logits.empty()) throw InvalidArgument(std::string(op) + ": empty logits");
  if (!all_finite(logits)) throw NumericError(std::string(op) + ": non-finite logits");
}

void check_label(std::span<const double> logits, std::size_t label) {
  if (label >= logits.size()) {
    throw InvalidArgument("label " + std::to_string(label) + " out of range for " +
                          std::to_string(logits.size()) + " classes");
  }
}

void check_classes(std::span<const double> logits, const char* op) {
  if (logits.size() < 2) {
    throw InvalidArgument(std::string(op) + ": needs at least 2 classes, got " +
                          std::to_string(logits.size()));
  }
}

}  // namespace

Temperature::Temperature(double t) : t_(t) {
  if (!(t > 0.0) || !std::isfinite(t)) {
    throw InvalidArgument("temperature must be finite and > 0, got " + std::to_string(t));
  }
}

std::size_t argmax(std::span<const double> v) {
  if (v.empty()) throw InvalidArgument("argmax of empty vector");
  std::size_t best = 0;
  for (std::size_t i = 1; i < v.size(); ++i) {
    if (v[i] > v[best]) best = i;
  }
  return best;
}

double log_sum_exp(std::span<const double> v) {
  check_logits(v, "log_sum_exp");
  const double m = *std::max_element(v.begin(), v.end());
  double sum = 0.0;
  for (double x : v) sum += std::exp(x - m);
  return m + std::log(sum);
}

Vector log_softmax(std::span<const double> logits, Temperature t) {
  check_logits(logits, "log_softmax");
  const double inv_t = 1.0 / t.value();
  const double m = *std::max_element(logits.begin(), logits.end()) * inv_t;
  double sum = 0.0;
  for (double f : logits) sum += std::exp(f * inv_t - m);
  const double log_z = std::log(sum);
  Vector out(logits.size());
  for (std::size_t c = 0; c < logits.size(); ++c) out[c] = (logits[c] * inv_t - m) - log_z;
  return out;
}

Vector softmax(std::span<const double> logits, Temperature t) {
  check_logits(logits, "softmax");
  const double inv_t = 1.0 / t.value();
  const double m = *std::max_element(logits.begin(), logits.end()) * inv_t;
  Vector out(logits.size());
  double sum = 0.0;
  for (std::size_t c = 0; c < logits.size(); ++c) {
    out[c] = std::exp(logits[c] * inv_t - m);
    sum += out[c];
  }
  for (double& p : out) p /= sum;
  return out;
}

double cross_entropy(std::span<const double> logits, std::size_t label, Temperature t) {
  check_logits(logits, "cross_entropy");
  check_label(logits, label);
  return -log_softmax(logits, t)[label];
}

Vector cross_entropy_grad(std::span<const double> logits, std::size_t label, Temperature t) {
  check_logits(logits, "cross_entropy_grad");
  check_label(logits, label);
  Vector g = softmax(logits, t);
  g[label] -= 1.0;
  for (double& x : g) x /= t.value();
  return g;
}

double kl_to_uniform(std::span<const double> logits, Temperature t) {
  check_logits(logits, "kl_to_uniform");
  check_classes(logits, "kl_to_uniform");
  const Vector ls = log_softmax(logits, t);
  const auto c = static_cast<double>(logits.size());
  double sum = 0.0;
  for (double v : ls) sum += v;
  // Rounding can leave a tiny negative value at exact uniformity.
  return std::max(0.0, -sum / c - std::log(c));
}

Vector kl_to_uniform_grad(std::span<const double> logits, Temperature t) {
  check_logits(logits, "kl_to_uniform_grad");
  check_classes(logits, "kl_to_uniform_grad");
  Vector g = softmax(logits, t);
  const auto c = static_cast<double>(logits.size());
  const double scale = -1.0 / (c * t.value());
  for (double& p : g) p = scale * (1.0 - c * p);
  return g;
}

}  // namespace gradnorm
