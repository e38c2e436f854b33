// Copyright 2026 The gradnorm-ood Authors
// SPDX-License-Identifier: Apache-2.0

#include "gradnorm/linalg.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <sstream>

#include "gradnorm/errors.hpp"

namespace gradnorm {

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows_ * cols_) {
    throw ShapeError("matrix " + shape_string() + " given " + std::to_string(data_.size()) +
                     " values");
  }
}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

std::string Matrix::shape_string() const {
  return std::to_string(rows_) + "x" + std::to_string(cols_);
}

NormOrder NormOrder::finite(double p) {
  if (!(p > 0.0) || !std::isfinite(p)) {
    throw InvalidArgument("invalid norm order: p = " + std::to_string(p));
  }
  return NormOrder(p, false);
}

NormOrder NormOrder::parse(std::string_view text) {
  if (text == "inf" || text == "Inf" || text == "infinity") return infinity();
  double p = 0.0;
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, p);
  if (ec != std::errc{} || ptr != end) {
    throw InvalidArgument("invalid norm order: \"" + std::string(text) + "\"");
  }
  return finite(p);
}

std::string NormOrder::to_string() const {
  if (infinite_) return "inf";
  std::ostringstream os;
  os << p_;
  return os.str();
}

bool all_finite(std::span<const double> v) noexcept {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

double lp_norm(std::span<const double> v, NormOrder order) {
  if (v.empty()) throw InvalidArgument("empty vector");
  if (!all_finite(v)) throw NumericError("non-finite input");

  double max_abs = 0.0;
  for (double x : v) max_abs = std::max(max_abs, std::abs(x));
  if (order.is_infinity() || max_abs == 0.0) return max_abs;

  const double p = order.p();
  if (p == 1.0) {
    double sum = 0.0;
    for (double x : v) sum += std::abs(x);
    return sum;
  }
  // Scale by the largest magnitude so |x|^p cannot overflow; zero entries
  // contribute 0 (0^p := 0 for every p > 0).
  double sum = 0.0;
  if (p == 2.0) {
    for (double x : v) {
      const double r = x / max_abs;
      sum += r * r;
    }
    return max_abs * std::sqrt(sum);
  }
  for (double x : v) {
    if (x != 0.0) sum += std::exp(p * std::log(std::abs(x) / max_abs));
  }
  return max_abs * std::exp(std::log(sum) / p);
}

Vector matvec(const Matrix& w, std::span<const double> x) {
  if (w.rows() != x.size()) {
    throw ShapeError("matvec: W is " + w.shape_string() + " but x has length " +
                     std::to_string(x.size()));
  }
  Vector out(w.cols(), 0.0);
  for (std::size_t i = 0; i < w.rows(); ++i) {
    const double xi = x[i];
    if (xi == 0.0) continue;
    const auto row = w.row(i);
    for (std::size_t c = 0; c < out.size(); ++c) out[c] += row[c] * xi;
  }
  return out;
}

}  // namespace gradnorm
