// Copyright 2026 The gradnorm-ood Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <span>

#include "gradnorm/linalg.hpp"

namespace gradnorm {

class Temperature {
 public:
  // Throws InvalidArgument unless t is finite and > 0.
  explicit Temperature(double t = 1.0);

  double value() const noexcept { return t_; }

  friend bool operator==(const Temperature&, const Temperature&) = default;

 private:
  double t_;
};

// Index of the largest entry; ties go to the lowest index.
std::size_t argmax(std::span<const double> v);

// log sum_c exp(v_c), max-shifted.
double log_sum_exp(std::span<const double> v);

Vector softmax(std::span<const double> logits, Temperature t = Temperature{});
Vector log_softmax(std::span<const double> logits, Temperature t = Temperature{});

// -log softmax(logits / T)[label]
double cross_entropy(std::span<const double> logits, std::size_t label,
                     Temperature t = Temperature{});
// (softmax_T - e_label) / T
Vector cross_entropy_grad(std::span<const double> logits, std::size_t label,
                          Temperature t = Temperature{});

// D_KL(u || softmax(logits / T)) = -(1/C) sum_c log softmax_c - ln C.
// Requires C >= 2.
double kl_to_uniform(std::span<const double> logits, Temperature t = Temperature{});
// -(1 / (C T)) (1 - C softmax_c)
Vector kl_to_uniform_grad(std::span<const double> logits, Temperature t = Temperature{});

}  // namespace gradnorm
