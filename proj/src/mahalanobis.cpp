// Copyright 2026 The gradnorm-ood Authors
// SPDX-License-Identifier: Apache-2.0

#include "gradnorm/mahalanobis.hpp"

#include <cmath>
#include <limits>
#include <string>

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "binary_io.hpp"
#include "gradnorm/errors.hpp"

namespace gradnorm {
namespace {

constexpr std::string_view kEstimatorMagic = "MAHA";

}  // namespace

MahalanobisEstimator::MahalanobisEstimator(std::vector<Vector> class_means, Matrix precision,
                                           double ridge)
    : means_(std::move(class_means)), precision_(std::move(precision)), ridge_(ridge) {
  if (means_.empty()) throw InvalidArgument("estimator needs at least one class mean");
  if (precision_.rows() != precision_.cols() || precision_.rows() == 0) {
    throw ShapeError("precision must be square and non-empty, got " + precision_.shape_string());
  }
  for (const auto& mu : means_) {
    if (mu.size() != precision_.rows()) {
      throw ShapeError("class mean of length " + std::to_string(mu.size()) +
                       " does not match precision " + precision_.shape_string());
    }
  }
}

MahalanobisEstimator MahalanobisEstimator::fit(const Matrix& features,
                                               std::span<const std::uint32_t> labels,
                                               std::size_t classes, double lambda) {
  const std::size_t n = features.rows();
  const std::size_t m = features.cols();
  if (labels.size() != n) {
    throw ShapeError("fit: " + std::to_string(n) + " feature rows but " +
                     std::to_string(labels.size()) + " labels");
  }
  if (m == 0) throw InvalidArgument("fit: features are empty");
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
    throw InvalidArgument("fit: lambda must be >= 0, got " + std::to_string(lambda));
  }
  if (classes < 1) throw InvalidArgument("fit: need at least one class");
  if (n < classes + 1) {
    throw InvalidArgument("fit: need at least " + std::to_string(classes + 1) +
                          " samples, got " + std::to_string(n));
  }
  if (!all_finite(features.data())) throw NumericError("fit: non-finite features");

  std::vector<Vector> means(classes, Vector(m, 0.0));
  std::vector<std::size_t> counts(classes, 0);
  for (std::size_t i = 0; i < n; ++i) {
    const auto y = labels[i];
    if (y >= classes) {
      throw InvalidArgument("fit: label " + std::to_string(y) + " out of range for " +
                            std::to_string(classes) + " classes");
    }
    const auto row = features.row(i);
    for (std::size_t j = 0; j < m; ++j) means[y][j] += row[j];
    ++counts[y];
  }
  std::string missing;
  for (std::size_t c = 0; c < classes; ++c) {
    if (counts[c] == 0) missing += (missing.empty() ? "" : ", ") + std::to_string(c);
  }
  if (!missing.empty()) throw InvalidArgument("fit: no samples for class(es) " + missing);
  for (std::size_t c = 0; c < classes; ++c) {
    for (double& v : means[c]) v /= static_cast<double>(counts[c]);
  }

  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(m, m);
  Eigen::VectorXd d(m);
  for (std::size_t i = 0; i < n; ++i) {
    const auto row = features.row(i);
    const auto& mu = means[labels[i]];
    for (std::size_t j = 0; j < m; ++j) d[j] = row[j] - mu[j];
    cov.noalias() += d * d.transpose();
  }
  cov /= static_cast<double>(n);

  const double ridge = lambda * cov.trace() / static_cast<double>(m);
  cov.diagonal().array() += ridge;

  Eigen::LLT<Eigen::MatrixXd> llt(cov);
  if (llt.info() != Eigen::Success) {
    throw NumericError("fit: covariance is not positive definite after regularization "
                       "(lambda = " + std::to_string(lambda) + "); try a larger lambda");
  }
  const Eigen::MatrixXd inv = llt.solve(Eigen::MatrixXd::Identity(m, m));
  Matrix precision(m, m);
  for (std::size_t r = 0; r < m; ++r) {
    for (std::size_t c = 0; c < m; ++c) {
      // Symmetrize away solve round-off.
      precision(r, c) = 0.5 * (inv(r, c) + inv(c, r));
    }
  }
  if (!all_finite(precision.data())) {
    throw NumericError("fit: precision is not finite; try a larger lambda");
  }
  return MahalanobisEstimator(std::move(means), std::move(precision), ridge);
}

double MahalanobisEstimator::distance(std::span<const double> x, std::size_t cls) const {
  const std::size_t m = feature_dim();
  if (x.size() != m) {
    throw ShapeError("mahalanobis: estimator has dim " + std::to_string(m) +
                     ", features have length " + std::to_string(x.size()));
  }
  if (cls >= means_.size()) throw InvalidArgument("mahalanobis: class index out of range");
  const auto& mu = means_[cls];
  Vector d(m);
  for (std::size_t j = 0; j < m; ++j) d[j] = x[j] - mu[j];
  double q = 0.0;
  for (std::size_t r = 0; r < m; ++r) {
    const auto row = precision_.row(r);
    double s = 0.0;
    for (std::size_t c = 0; c < m; ++c) s += row[c] * d[c];
    q += d[r] * s;
  }
  return std::max(0.0, q);
}

double MahalanobisEstimator::score(std::span<const double> x) const {
  if (!all_finite(x)) throw NumericError("mahalanobis: non-finite features");
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < means_.size(); ++c) best = std::min(best, distance(x, c));
  return -best;
}

double mahalanobis_score(const MahalanobisEstimator& est, std::span<const double> features) {
  return est.score(features);
}

void save_estimator(const std::filesystem::path& path, const MahalanobisEstimator& est) {
  io::Writer w;
  w.magic(kEstimatorMagic);
  w.u32(est.class_count(), "C");
  w.u32(est.feature_dim(), "m");
  w.put(est.ridge());
  for (const auto& mu : est.class_means()) {
    for (double v : mu) w.put(v);
  }
  for (double v : est.precision().data()) w.put(v);
  w.commit(path);
}

MahalanobisEstimator load_estimator(const std::filesystem::path& path) {
  io::Reader r(path);
  r.expect_magic(kEstimatorMagic);
  const auto classes = r.get<std::uint32_t>();
  const auto m = r.get<std::uint32_t>();
  const auto ridge = r.get<double>();
  if (classes == 0 || m == 0) {
    throw IoError(IoError::Kind::kCorrupt, r.name() + ": empty estimator");
  }
  r.require_elements(std::uint64_t{classes} * m + std::uint64_t{m} * m, sizeof(double));
  std::vector<Vector> means(classes, Vector(m));
  for (auto& mu : means) {
    for (double& v : mu) v = r.get<double>();
  }
  std::vector<double> p(std::size_t{m} * m);
  for (double& v : p) v = r.get<double>();
  if (r.remaining() != 0) {
    throw IoError(IoError::Kind::kCorrupt, r.name() + ": trailing bytes after estimator");
  }
  return MahalanobisEstimator(std::move(means), Matrix(m, m, std::move(p)), ridge);
}

}  // namespace gradnorm
