// Copyright 2026 The gradnorm-ood Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>

#include "gradnorm/dataset.hpp"
#include "gradnorm/linalg.hpp"
#include "gradnorm/losses.hpp"
#include "gradnorm/nn.hpp"

namespace gradnorm {

class MahalanobisEstimator;

// Every score follows one sign convention: higher means more in-distribution.
enum class ScoreMethod {
  kGradNorm,            // Lp norm of the KL-to-uniform gradient, by backprop
  kGradNormClosedForm,  // U * V / (C T); last-layer weights, L1 only
  kOneHotGradNorm,      // negated norm of the CE gradient at the predicted label
  kDirectKL,            // KL(u || softmax) itself
  kUFeature,            // L1 norm of penultimate features
  kVOutput,             // sum_j |1 - C softmax_j|
  kMSP,
  kODIN,
  kEnergy,              // log-sum-exp of the logits
  kMahalanobis,
};

// CLI spelling: gradnorm, gradnorm-closed, onehot, kl, u, v, msp, odin,
// energy, mahalanobis.
std::string_view method_name(ScoreMethod method) noexcept;
ScoreMethod parse_method(std::string_view name);

struct ScoreConfig {
  ScoreMethod method = ScoreMethod::kGradNorm;
  Temperature temperature{1.0};
  NormOrder norm = NormOrder::l1();
  ParamSelection selection = ParamSelection::last_layer_weight();
  double epsilon = 0.0;  // ODIN input perturbation

  // Rejects negative or non-finite epsilon and closed form outside
  // (L1, last-layer weights).
  void validate() const;
  // True when the method can be computed from stored features/logits alone.
  bool works_on_features() const noexcept;
  std::string describe() const;
};

double gradnorm_backprop(const MlpModel& model, std::span<const double> x, const ScoreConfig& cfg);
double gradnorm_closed_form(std::span<const double> features, std::span<const double> logits,
                            Temperature t = Temperature{});
double u_score(std::span<const double> features);
double v_score(std::span<const double> logits, Temperature t = Temperature{});
double onehot_gradnorm(const MlpModel& model, std::span<const double> x, const ScoreConfig& cfg);
double direct_kl_score(std::span<const double> logits, Temperature t = Temperature{});
double msp_score(std::span<const double> logits);
double energy_score(std::span<const double> logits);
// With epsilon > 0 the input moves by -epsilon * sign(grad_x CE(predicted))
// before the temperature-scaled max softmax is taken.
double odin_score(const MlpModel& model, std::span<const double> x, const ScoreConfig& cfg);

// Scores a feature/logit dataset. Methods that need the network
// (gradnorm, onehot, odin with epsilon > 0) are rejected.
Vector score_dataset(const FeatureLogitDataset& data, const ScoreConfig& cfg,
                     const MahalanobisEstimator* estimator = nullptr, std::size_t workers = 1);

// Scores raw inputs (one per row) through the model. Any method works; the
// Mahalanobis estimator must have been fitted on this model's penultimate
// features.
Vector score_dataset(const MlpModel& model, const Matrix& inputs, const ScoreConfig& cfg,
                     const MahalanobisEstimator* estimator = nullptr, std::size_t workers = 1);

}  // namespace gradnorm
