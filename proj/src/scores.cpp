// Copyright 2026 The gradnorm-ood Authors
// SPDX-License-Identifier: Apache-2.0

#include "gradnorm/scores.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <exception>
#include <functional>
#include <sstream>
#include <thread>
#include <utility>

#include "gradnorm/errors.hpp"
#include "gradnorm/mahalanobis.hpp"

namespace gradnorm {
namespace {

constexpr std::array<std::pair<ScoreMethod, std::string_view>, 10> kMethodNames{{
    {ScoreMethod::kGradNorm, "gradnorm"},
    {ScoreMethod::kGradNormClosedForm, "gradnorm-closed"},
    {ScoreMethod::kOneHotGradNorm, "onehot"},
    {ScoreMethod::kDirectKL, "kl"},
    {ScoreMethod::kUFeature, "u"},
    {ScoreMethod::kVOutput, "v"},
    {ScoreMethod::kMSP, "msp"},
    {ScoreMethod::kODIN, "odin"},
    {ScoreMethod::kEnergy, "energy"},
    {ScoreMethod::kMahalanobis, "mahalanobis"},
}};

bool needs_features(ScoreMethod method) {
  return method == ScoreMethod::kGradNormClosedForm || method == ScoreMethod::kUFeature ||
         method == ScoreMethod::kMahalanobis;
}

bool needs_logits(ScoreMethod method) {
  return method != ScoreMethod::kUFeature && method != ScoreMethod::kMahalanobis;
}

// Scores from stored penultimate features and logits; either span may be
// empty when the method does not read it.
double score_from_representation(std::span<const double> features, std::span<const double> logits,
                                 const ScoreConfig& cfg, const MahalanobisEstimator* estimator) {
  switch (cfg.method) {
    case ScoreMethod::kGradNormClosedForm:
      return gradnorm_closed_form(features, logits, cfg.temperature);
    case ScoreMethod::kDirectKL:
      return direct_kl_score(logits, cfg.temperature);
    case ScoreMethod::kUFeature:
      return u_score(features);
    case ScoreMethod::kVOutput:
      return v_score(logits, cfg.temperature);
    case ScoreMethod::kMSP:
      return msp_score(logits);
    case ScoreMethod::kODIN: {
      const Vector p = softmax(logits, cfg.temperature);
      return *std::max_element(p.begin(), p.end());
    }
    case ScoreMethod::kEnergy:
      return energy_score(logits);
    case ScoreMethod::kMahalanobis:
      return mahalanobis_score(*estimator, features);
    case ScoreMethod::kGradNorm:
    case ScoreMethod::kOneHotGradNorm:
      break;
  }
  throw InvalidArgument("method " + std::string(method_name(cfg.method)) +
                        " needs the model, not stored features/logits");
}

// Runs fn(i) for i in [0, n) over up to `workers` threads. Each index writes
// only its own slot, so results match sequential order.
void parallel_for(std::size_t n, std::size_t workers, const std::function<void(std::size_t)>& fn) {
  workers = std::clamp<std::size_t>(workers, 1, std::max<std::size_t>(n, 1));
  if (workers == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::exception_ptr> errors(workers);
  std::vector<std::thread> threads;
  threads.reserve(workers);
  const std::size_t chunk = (n + workers - 1) / workers;
  for (std::size_t w = 0; w < workers; ++w) {
    threads.emplace_back([&, w] {
      try {
        const std::size_t end = std::min(n, (w + 1) * chunk);
        for (std::size_t i = w * chunk; i < end; ++i) fn(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : threads) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

void require_estimator(const ScoreConfig& cfg, const MahalanobisEstimator* estimator) {
  if (cfg.method == ScoreMethod::kMahalanobis && estimator == nullptr) {
    throw InvalidArgument("method mahalanobis needs a fitted estimator");
  }
}

}  // namespace

std::string_view method_name(ScoreMethod method) noexcept {
  for (const auto& [m, name] : kMethodNames) {
    if (m == method) return name;
  }
  return "?";
}

ScoreMethod parse_method(std::string_view name) {
  for (const auto& [m, n] : kMethodNames) {
    if (n == name) return m;
  }
  std::string known;
  for (const auto& [m, n] : kMethodNames) known += (known.empty() ? "" : ", ") + std::string(n);
  throw InvalidArgument("unknown method \"" + std::string(name) + "\" (expected one of " + known +
                        ")");
}

void ScoreConfig::validate() const {
  if (!(epsilon >= 0.0) || !std::isfinite(epsilon)) {
    throw InvalidArgument("epsilon must be finite and >= 0, got " + std::to_string(epsilon));
  }
  if (method == ScoreMethod::kGradNormClosedForm &&
      (norm != NormOrder::l1() || selection != ParamSelection::last_layer_weight())) {
    throw InvalidArgument("gradnorm-closed only exists for norm 1 and selection last (got norm " +
                          norm.to_string() + ", selection " + selection.to_string() + ")");
  }
}

bool ScoreConfig::works_on_features() const noexcept {
  switch (method) {
    case ScoreMethod::kGradNorm:
    case ScoreMethod::kOneHotGradNorm:
      return false;
    case ScoreMethod::kODIN:
      return epsilon == 0.0;
    default:
      return true;
  }
}

std::string ScoreConfig::describe() const {
  std::string s(method_name(method));
  std::ostringstream t;
  t << temperature.value();
  s += " T=" + t.str();
  switch (method) {
    case ScoreMethod::kGradNorm:
    case ScoreMethod::kOneHotGradNorm:
      s += " p=" + norm.to_string() + " sel=" + selection.to_string();
      break;
    case ScoreMethod::kODIN: {
      std::ostringstream e;
      e << epsilon;
      s += " eps=" + e.str();
      break;
    }
    default:
      break;
  }
  return s;
}

double gradnorm_backprop(const MlpModel& model, std::span<const double> x, const ScoreConfig& cfg) {
  const auto fwd = forward(model, x);
  const Vector upstream = kl_to_uniform_grad(fwd.logits, cfg.temperature);
  const Gradients grads = backward(model, fwd.trace, upstream);
  return lp_norm(select_gradients(grads, cfg.selection), cfg.norm);
}

double u_score(std::span<const double> features) {
  if (!all_finite(features)) throw NumericError("u_score: non-finite features");
  double sum = 0.0;
  for (double x : features) sum += std::abs(x);
  return sum;
}

double v_score(std::span<const double> logits, Temperature t) {
  const Vector p = softmax(logits, t);
  const auto c = static_cast<double>(p.size());
  double sum = 0.0;
  for (double pj : p) sum += std::abs(1.0 - c * pj);
  return sum;
}

double gradnorm_closed_form(std::span<const double> features, std::span<const double> logits,
                            Temperature t) {
  if (logits.size() < 2) {
    throw InvalidArgument("gradnorm_closed_form: needs at least 2 classes, got " +
                          std::to_string(logits.size()));
  }
  const auto c = static_cast<double>(logits.size());
  return u_score(features) * v_score(logits, t) / (c * t.value());
}

double onehot_gradnorm(const MlpModel& model, std::span<const double> x, const ScoreConfig& cfg) {
  const auto fwd = forward(model, x);
  const Vector upstream = cross_entropy_grad(fwd.logits, argmax(fwd.logits), cfg.temperature);
  const Gradients grads = backward(model, fwd.trace, upstream);
  return -lp_norm(select_gradients(grads, cfg.selection), cfg.norm);
}

double direct_kl_score(std::span<const double> logits, Temperature t) {
  return kl_to_uniform(logits, t);
}

double msp_score(std::span<const double> logits) {
  const Vector p = softmax(logits);
  return *std::max_element(p.begin(), p.end());
}

double energy_score(std::span<const double> logits) {
  return log_sum_exp(logits);
}

double odin_score(const MlpModel& model, std::span<const double> x, const ScoreConfig& cfg) {
  if (!(cfg.epsilon >= 0.0) || !std::isfinite(cfg.epsilon)) {
    throw InvalidArgument("epsilon must be finite and >= 0");
  }
  Vector logits;
  if (cfg.epsilon > 0.0) {
    const auto fwd = forward(model, x);
    const Vector upstream = cross_entropy_grad(fwd.logits, argmax(fwd.logits), cfg.temperature);
    const Gradients grads = backward(model, fwd.trace, upstream);
    Vector perturbed(x.begin(), x.end());
    for (std::size_t i = 0; i < perturbed.size(); ++i) {
      const double g = grads.input[i];
      const double sign = g > 0.0 ? 1.0 : (g < 0.0 ? -1.0 : 0.0);
      perturbed[i] -= cfg.epsilon * sign;
    }
    logits = predict(model, perturbed);
  } else {
    logits = predict(model, x);
  }
  const Vector p = softmax(logits, cfg.temperature);
  return *std::max_element(p.begin(), p.end());
}

Vector score_dataset(const FeatureLogitDataset& data, const ScoreConfig& cfg,
                     const MahalanobisEstimator* estimator, std::size_t workers) {
  cfg.validate();
  data.validate();
  const std::string name(method_name(cfg.method));
  if (!cfg.works_on_features()) {
    throw InvalidArgument("method " + cfg.describe() +
                          " needs a model; a feature/logit dataset cannot provide gradients");
  }
  if (needs_features(cfg.method) && !data.has_features()) {
    throw InvalidArgument("method " + name + " requires features, but the dataset has none");
  }
  if (needs_logits(cfg.method) && !data.has_logits()) {
    throw InvalidArgument("method " + name + " requires logits, but the dataset has none");
  }
  require_estimator(cfg, estimator);

  const std::size_t n = data.size();
  Vector scores(n);
  parallel_for(n, workers, [&](std::size_t i) {
    const auto f = data.has_features() ? data.features.row(i) : std::span<const double>{};
    const auto l = data.has_logits() ? data.logits.row(i) : std::span<const double>{};
    scores[i] = score_from_representation(f, l, cfg, estimator);
  });
  return scores;
}

Vector score_dataset(const MlpModel& model, const Matrix& inputs, const ScoreConfig& cfg,
                     const MahalanobisEstimator* estimator, std::size_t workers) {
  cfg.validate();
  require_estimator(cfg, estimator);
  if (inputs.rows() > 0 && inputs.cols() != model.input_dim()) {
    throw ShapeError("model expects inputs of width " + std::to_string(model.input_dim()) +
                     ", data has width " + std::to_string(inputs.cols()));
  }
  const std::size_t n = inputs.rows();
  Vector scores(n);
  parallel_for(n, workers, [&](std::size_t i) {
    const auto x = inputs.row(i);
    switch (cfg.method) {
      case ScoreMethod::kGradNorm:
        scores[i] = gradnorm_backprop(model, x, cfg);
        return;
      case ScoreMethod::kOneHotGradNorm:
        scores[i] = onehot_gradnorm(model, x, cfg);
        return;
      case ScoreMethod::kODIN:
        scores[i] = odin_score(model, x, cfg);
        return;
      default: {
        const auto fwd = forward(model, x);
        scores[i] = score_from_representation(fwd.trace.penultimate(), fwd.logits, cfg, estimator);
        return;
      }
    }
  });
  return scores;
}

}  // namespace gradnorm
