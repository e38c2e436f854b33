// Copyright 2026 The gradnorm-ood Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

namespace gradnorm {

struct Fpr95 {
  double fpr = 0.0;
  double gamma = 0.0;
};

// gamma = ascending ID scores at index floor(0.05 * N_id), so at least 95% of
// ID scores satisfy s >= gamma; fpr is the fraction of OOD scores >= gamma.
Fpr95 fpr_at_95_tpr(std::span<const double> id_scores, std::span<const double> ood_scores);

// P(id > ood) + 0.5 P(id == ood), computed from mid-ranks.
double auroc(std::span<const double> id_scores, std::span<const double> ood_scores);

// Left-closed bins over [lo, hi); the last bin also takes hi. Values outside
// the range land in the end bins.
std::vector<std::size_t> histogram(std::span<const double> scores, std::size_t bins, double lo,
                                   double hi);

struct ScoreStats {
  double min = 0.0;
  double max = 0.0;
  double mean = 0.0;
  double stddev = 0.0;  // population
};

ScoreStats summarize(std::span<const double> scores);

struct EvalReport {
  std::string method;
  double fpr95 = 0.0;
  double auroc = 0.0;
  double gamma = 0.0;
  std::size_t id_count = 0;
  std::size_t ood_count = 0;
  ScoreStats id_stats;
  ScoreStats ood_stats;
  std::vector<std::string> warnings;

  // One line of key=value pairs, doubles at 17 significant digits.
  std::string to_text() const;
  nlohmann::json to_json() const;
};

EvalReport evaluate(const std::string& method, std::span<const double> id_scores,
                    std::span<const double> ood_scores);

}  // namespace gradnorm
