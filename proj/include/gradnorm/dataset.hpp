// Copyright 2026 The gradnorm-ood Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string_view>
#include <vector>

#include "gradnorm/linalg.hpp"

namespace gradnorm {

// N samples of features and/or logits with optional labels. Raw model inputs
// travel in the `features` slot. A block is absent when its width is 0.
struct FeatureLogitDataset {
  Matrix features;  // n x m
  Matrix logits;    // n x c
  std::optional<std::vector<std::uint32_t>> labels;

  std::size_t size() const noexcept { return std::max(features.rows(), logits.rows()); }
  std::size_t feature_dim() const noexcept { return features.cols(); }
  std::size_t class_count() const noexcept { return logits.cols(); }
  bool has_features() const noexcept { return features.cols() > 0; }
  bool has_logits() const noexcept { return logits.cols() > 0; }
  bool has_labels() const noexcept { return labels.has_value(); }

  // Throws InvalidArgument on inconsistent row counts, out-of-range labels,
  // or when neither features nor logits are present.
  void validate() const;

  friend bool operator==(const FeatureLogitDataset&, const FeatureLogitDataset&) = default;
};

// FLOG v1, little-endian:
//   "FLOG" | u32 version=1 | u32 flags (bit0 features, bit1 logits, bit2 labels)
//   | u32 n | u32 m | u32 c | n*m f32 | n*c f32 | n u32
// Values are narrowed to f32 on write and widened back to f64 on read.
void write_flog(const std::filesystem::path& path, const FeatureLogitDataset& ds);
FeatureLogitDataset read_flog(const std::filesystem::path& path);

enum class OodKind {
  kGaussianBlobs,  // unseen blobs on a sphere of radius shift * center_scale
  kRing,           // isotropic directions at radius shift * center_scale
  kUniformBox,     // uniform in [-h, h]^dim with h = shift * center_scale
};

struct SyntheticSpec {
  OodKind kind = OodKind::kRing;
  std::size_t dim = 8;
  std::size_t classes = 4;
  std::size_t samples_per_class = 500;
  double class_center_scale = 4.0;
  double noise_sigma = 0.5;
  double ood_shift = 3.0;
  std::uint64_t seed = 0;

  // Throws InvalidArgument naming the offending field.
  void validate() const;
};

struct SyntheticData {
  FeatureLogitDataset id_train;
  FeatureLogitDataset id_test;
  FeatureLogitDataset ood_test;
  std::vector<Vector> class_centers;
};

// ID samples are Gaussian blobs with labels assigned round-robin (sample i has
// label i % classes); every 5th sample goes to the test split. The OOD set is
// as large as the ID test set and carries no labels.
SyntheticData generate(const SyntheticSpec& spec);

const char* ood_kind_name(OodKind kind) noexcept;
OodKind parse_ood_kind(std::string_view name);

}  // namespace gradnorm
