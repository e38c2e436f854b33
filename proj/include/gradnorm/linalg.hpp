// Copyright 2026 The gradnorm-ood Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace gradnorm {

using Vector = std::vector<double>;

// Dense row-major matrix of doubles.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  // Throws ShapeError unless data.size() == rows * cols.
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);

  static Matrix identity(std::size_t n);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }

  std::string shape_string() const;

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

// Order p of an Lp aggregate. Finite p may be fractional (p = 0.3 is a valid
// "norm" here even though it breaks the triangle inequality).
class NormOrder {
 public:
  // Throws InvalidArgument("invalid norm order") unless p > 0 and finite.
  static NormOrder finite(double p);
  static NormOrder infinity() noexcept { return NormOrder(0.0, true); }
  static NormOrder l1() noexcept { return NormOrder(1.0, false); }
  static NormOrder l2() noexcept { return NormOrder(2.0, false); }

  // Accepts a positive decimal or "inf".
  static NormOrder parse(std::string_view text);

  bool is_infinity() const noexcept { return infinite_; }
  // Meaningless when is_infinity().
  double p() const noexcept { return p_; }

  std::string to_string() const;

  friend bool operator==(const NormOrder&, const NormOrder&) = default;

 private:
  NormOrder(double p, bool infinite) noexcept : p_(p), infinite_(infinite) {}

  double p_ = 1.0;
  bool infinite_ = false;
};

// (sum_i |v_i|^p)^(1/p), or max_i |v_i| for the infinity order. An all-zero
// vector has norm 0 for every order. Throws InvalidArgument on an empty
// vector and NumericError on a non-finite entry.
double lp_norm(std::span<const double> v, NormOrder order);

// Computes W^T x for W of shape m x C and x of length m; the result has C
// entries. This is the logit orientation f = W^T x.
Vector matvec(const Matrix& w, std::span<const double> x);

bool all_finite(std::span<const double> v) noexcept;

}  // namespace gradnorm
