// Copyright 2026 The gradnorm-ood Authors
// SPDX-License-Identifier: Apache-2.0

#include "gradnorm/dataset.hpp"

#include <cmath>
#include <string>

#include "binary_io.hpp"
#include "gradnorm/errors.hpp"
#include "gradnorm/rng.hpp"

namespace gradnorm {
namespace {

constexpr std::string_view kFlogMagic = "FLOG";
constexpr std::uint32_t kFlogVersion = 1;
constexpr std::uint32_t kHasFeatures = 1u << 0;
constexpr std::uint32_t kHasLogits = 1u << 1;
constexpr std::uint32_t kHasLabels = 1u << 2;

Vector random_direction(Rng& rng, std::size_t dim) {
  Vector v(dim);
  double norm = 0.0;
  do {
    for (double& x : v) x = rng.normal();
    norm = 0.0;
    for (double x : v) norm += x * x;
    norm = std::sqrt(norm);
  } while (norm == 0.0);
  for (double& x : v) x /= norm;
  return v;
}

std::vector<Vector> sphere_centers(Rng& rng, std::size_t count, std::size_t dim, double radius) {
  std::vector<Vector> centers;
  for (std::size_t c = 0; c < count; ++c) {
    Vector v = random_direction(rng, dim);
    for (double& x : v) x *= radius;
    centers.push_back(std::move(v));
  }
  return centers;
}

Matrix stack_rows(const std::vector<Vector>& rows, std::size_t dim) {
  Matrix m(rows.size(), dim);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    std::copy(rows[i].begin(), rows[i].end(), m.row(i).begin());
  }
  return m;
}

}  // namespace

void FeatureLogitDataset::validate() const {
  if (!has_features() && !has_logits()) {
    throw InvalidArgument("dataset has neither features nor logits");
  }
  if (has_features() && has_logits() && features.rows() != logits.rows()) {
    throw InvalidArgument("dataset has " + std::to_string(features.rows()) + " feature rows but " +
                          std::to_string(logits.rows()) + " logit rows");
  }
  if (labels) {
    if (labels->size() != size()) {
      throw InvalidArgument("dataset has " + std::to_string(size()) + " rows but " +
                            std::to_string(labels->size()) + " labels");
    }
    if (has_logits()) {
      for (auto y : *labels) {
        if (y >= class_count()) {
          throw InvalidArgument("label " + std::to_string(y) + " out of range for " +
                                std::to_string(class_count()) + " classes");
        }
      }
    }
  }
}

void write_flog(const std::filesystem::path& path, const FeatureLogitDataset& ds) {
  ds.validate();
  std::uint32_t flags = 0;
  if (ds.has_features()) flags |= kHasFeatures;
  if (ds.has_logits()) flags |= kHasLogits;
  if (ds.has_labels()) flags |= kHasLabels;

  io::Writer w;
  w.magic(kFlogMagic);
  w.put(kFlogVersion);
  w.put(flags);
  w.u32(ds.size(), "n");
  w.u32(ds.feature_dim(), "m");
  w.u32(ds.class_count(), "c");
  for (double v : ds.features.data()) w.put(static_cast<float>(v));
  for (double v : ds.logits.data()) w.put(static_cast<float>(v));
  if (ds.labels) {
    for (auto y : *ds.labels) w.put(y);
  }
  w.commit(path);
}

FeatureLogitDataset read_flog(const std::filesystem::path& path) {
  io::Reader r(path);
  r.expect_magic(kFlogMagic);
  const auto version = r.get<std::uint32_t>();
  if (version != kFlogVersion) {
    throw IoError(IoError::Kind::kBadVersion,
                  r.name() + ": unsupported FLOG version " + std::to_string(version));
  }
  const auto flags = r.get<std::uint32_t>();
  const auto n = r.get<std::uint32_t>();
  const auto m = r.get<std::uint32_t>();
  const auto c = r.get<std::uint32_t>();

  if ((flags & ~(kHasFeatures | kHasLogits | kHasLabels)) != 0) {
    throw IoError(IoError::Kind::kCorrupt, r.name() + ": unknown flag bits");
  }
  if (((flags & kHasFeatures) != 0) != (m > 0) || ((flags & kHasLogits) != 0) != (c > 0)) {
    throw IoError(IoError::Kind::kCorrupt, r.name() + ": flags disagree with m/c");
  }
  if ((flags & (kHasFeatures | kHasLogits)) == 0) {
    throw IoError(IoError::Kind::kCorrupt, r.name() + ": neither features nor logits present");
  }

  const std::uint64_t n_features = std::uint64_t{n} * m;
  const std::uint64_t n_logits = std::uint64_t{n} * c;
  const std::uint64_t n_labels = (flags & kHasLabels) != 0 ? n : 0;
  if (n_features > UINT64_MAX - n_logits || n_features + n_logits > UINT64_MAX - n_labels) {
    throw IoError(IoError::Kind::kDimOverflow, r.name() + ": declared size overflows");
  }
  r.require_elements(n_features + n_logits + n_labels, 4);

  FeatureLogitDataset ds;
  // Keep the declared width even when n == 0 so presence survives a round trip.
  std::vector<double> feats(n_features);
  for (double& v : feats) v = r.get<float>();
  ds.features = Matrix(m > 0 ? n : 0, m, std::move(feats));
  std::vector<double> logits(n_logits);
  for (double& v : logits) v = r.get<float>();
  ds.logits = Matrix(c > 0 ? n : 0, c, std::move(logits));
  if ((flags & kHasLabels) != 0) {
    std::vector<std::uint32_t> labels(n);
    for (auto& y : labels) y = r.get<std::uint32_t>();
    ds.labels = std::move(labels);
  }
  if (r.remaining() != 0) {
    throw IoError(IoError::Kind::kCorrupt, r.name() + ": " + std::to_string(r.remaining()) +
                                               " trailing bytes");
  }
  try {
    ds.validate();
  } catch (const InvalidArgument& e) {
    throw IoError(IoError::Kind::kCorrupt, r.name() + ": " + e.what());
  }
  return ds;
}

void SyntheticSpec::validate() const {
  if (dim < 2) throw InvalidArgument("dim must be >= 2, got " + std::to_string(dim));
  if (classes < 2) throw InvalidArgument("classes must be >= 2, got " + std::to_string(classes));
  if (samples_per_class < 1) throw InvalidArgument("samples_per_class must be >= 1");
  if (!(noise_sigma > 0.0) || !std::isfinite(noise_sigma)) {
    throw InvalidArgument("noise_sigma must be > 0, got " + std::to_string(noise_sigma));
  }
  if (!(class_center_scale > 0.0) || !std::isfinite(class_center_scale)) {
    throw InvalidArgument("class_center_scale must be > 0, got " +
                          std::to_string(class_center_scale));
  }
  if (!(ood_shift > 0.0) || !std::isfinite(ood_shift)) {
    throw InvalidArgument("ood_shift must be > 0, got " + std::to_string(ood_shift));
  }
}

SyntheticData generate(const SyntheticSpec& spec) {
  spec.validate();
  Rng rng(spec.seed);
  SyntheticData out;
  out.class_centers = sphere_centers(rng, spec.classes, spec.dim, spec.class_center_scale);

  std::vector<Vector> train_rows, test_rows;
  std::vector<std::uint32_t> train_labels, test_labels;
  const std::size_t total = spec.classes * spec.samples_per_class;
  for (std::size_t i = 0; i < total; ++i) {
    const auto label = static_cast<std::uint32_t>(i % spec.classes);
    Vector x = out.class_centers[label];
    for (double& v : x) v += spec.noise_sigma * rng.normal();
    if (i % 5 == 4) {
      test_rows.push_back(std::move(x));
      test_labels.push_back(label);
    } else {
      train_rows.push_back(std::move(x));
      train_labels.push_back(label);
    }
  }

  const double radius = spec.ood_shift * spec.class_center_scale;
  const std::size_t n_ood = test_rows.size();
  std::vector<Vector> ood_rows;
  ood_rows.reserve(n_ood);
  switch (spec.kind) {
    case OodKind::kRing:
      for (std::size_t i = 0; i < n_ood; ++i) {
        Vector v = random_direction(rng, spec.dim);
        for (double& x : v) x *= radius;
        ood_rows.push_back(std::move(v));
      }
      break;
    case OodKind::kUniformBox:
      for (std::size_t i = 0; i < n_ood; ++i) {
        Vector v(spec.dim);
        for (double& x : v) x = rng.uniform(-radius, radius);
        ood_rows.push_back(std::move(v));
      }
      break;
    case OodKind::kGaussianBlobs: {
      const auto novel = sphere_centers(rng, spec.classes, spec.dim, radius);
      for (std::size_t i = 0; i < n_ood; ++i) {
        Vector v = novel[i % spec.classes];
        for (double& x : v) x += spec.noise_sigma * rng.normal();
        ood_rows.push_back(std::move(v));
      }
      break;
    }
  }

  out.id_train.features = stack_rows(train_rows, spec.dim);
  out.id_train.labels = std::move(train_labels);
  out.id_test.features = stack_rows(test_rows, spec.dim);
  out.id_test.labels = std::move(test_labels);
  out.ood_test.features = stack_rows(ood_rows, spec.dim);
  return out;
}

const char* ood_kind_name(OodKind kind) noexcept {
  switch (kind) {
    case OodKind::kGaussianBlobs: return "blobs";
    case OodKind::kRing: return "ring";
    case OodKind::kUniformBox: return "box";
  }
  return "?";
}

OodKind parse_ood_kind(std::string_view name) {
  if (name == "blobs") return OodKind::kGaussianBlobs;
  if (name == "ring") return OodKind::kRing;
  if (name == "box") return OodKind::kUniformBox;
  throw InvalidArgument("ood kind must be one of blobs, ring, box; got \"" + std::string(name) +
                        "\"");
}

}  // namespace gradnorm
