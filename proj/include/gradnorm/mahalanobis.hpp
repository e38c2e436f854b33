// Copyright 2026 The gradnorm-ood Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "gradnorm/linalg.hpp"

namespace gradnorm {

// Class-conditional Gaussians with one shared covariance, fitted on
// penultimate features.
class MahalanobisEstimator {
 public:
  static constexpr double kDefaultLambda = 1e-3;

  // Means are per-class averages; the shared covariance is
  //   S = (1/N) sum_i (x_i - mu_{y_i})(x_i - mu_{y_i})^T
  // and the precision is (S + lambda * tr(S)/m * I)^-1 via Cholesky.
  // Every class in [0, classes) needs at least one sample and N >= classes + 1.
  static MahalanobisEstimator fit(const Matrix& features, std::span<const std::uint32_t> labels,
                                  std::size_t classes, double lambda = kDefaultLambda);

  MahalanobisEstimator(std::vector<Vector> class_means, Matrix precision, double ridge);

  // (x - mu_c)^T P (x - mu_c)
  double distance(std::span<const double> x, std::size_t cls) const;
  // -min_c distance(x, c); higher means closer to some class.
  double score(std::span<const double> x) const;

  const std::vector<Vector>& class_means() const noexcept { return means_; }
  const Matrix& precision() const noexcept { return precision_; }
  // The absolute ridge added to the covariance diagonal.
  double ridge() const noexcept { return ridge_; }
  std::size_t class_count() const noexcept { return means_.size(); }
  std::size_t feature_dim() const noexcept { return precision_.rows(); }

 private:
  std::vector<Vector> means_;
  Matrix precision_;
  double ridge_ = 0.0;
};

double mahalanobis_score(const MahalanobisEstimator& est, std::span<const double> features);

// "MAHA" | u32 C | u32 m | f64 ridge | C*m f64 means | m*m f64 precision.
void save_estimator(const std::filesystem::path& path, const MahalanobisEstimator& est);
MahalanobisEstimator load_estimator(const std::filesystem::path& path);

}  // namespace gradnorm
