// Copyright 2026 The gradnorm-ood Authors
// SPDX-License-Identifier: Apache-2.0

#include "gradnorm/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <numeric>
#include <utility>

#include "gradnorm/errors.hpp"

namespace gradnorm {
namespace {

void check_scores(std::span<const double> scores, const char* which) {
  if (scores.empty()) throw InvalidArgument(std::string(which) + " scores are empty");
  for (double s : scores) {
    if (std::isnan(s)) throw NumericError(std::string(which) + " scores contain NaN");
  }
}

std::string fmt17(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

Fpr95 fpr_at_95_tpr(std::span<const double> id_scores, std::span<const double> ood_scores) {
  check_scores(id_scores, "ID");
  check_scores(ood_scores, "OOD");
  std::vector<double> sorted(id_scores.begin(), id_scores.end());
  std::sort(sorted.begin(), sorted.end());
  // floor(0.05 * N) without floating-point rounding.
  const double gamma = sorted[sorted.size() / 20];
  const auto accepted = std::count_if(ood_scores.begin(), ood_scores.end(),
                                      [gamma](double s) { return s >= gamma; });
  return {static_cast<double>(accepted) / static_cast<double>(ood_scores.size()), gamma};
}

double auroc(std::span<const double> id_scores, std::span<const double> ood_scores) {
  check_scores(id_scores, "ID");
  check_scores(ood_scores, "OOD");
  const std::size_t n_id = id_scores.size();
  const std::size_t n_ood = ood_scores.size();

  std::vector<std::pair<double, bool>> pooled;
  pooled.reserve(n_id + n_ood);
  for (double s : id_scores) pooled.emplace_back(s, true);
  for (double s : ood_scores) pooled.emplace_back(s, false);
  std::sort(pooled.begin(), pooled.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });

  // Twice the mid-rank sum of the ID sample keeps everything integral.
  std::uint64_t doubled_rank_sum = 0;
  for (std::size_t a = 0; a < pooled.size();) {
    std::size_t b = a;
    std::uint64_t id_in_group = 0;
    while (b < pooled.size() && pooled[b].first == pooled[a].first) {
      id_in_group += pooled[b].second ? 1 : 0;
      ++b;
    }
    doubled_rank_sum += id_in_group * (a + 1 + b);
    a = b;
  }
  const std::uint64_t u_doubled = doubled_rank_sum - std::uint64_t{n_id} * (n_id + 1);
  return static_cast<double>(u_doubled) / (2.0 * static_cast<double>(n_id) * static_cast<double>(n_ood));
}

std::vector<std::size_t> histogram(std::span<const double> scores, std::size_t bins, double lo,
                                   double hi) {
  if (bins < 1) throw InvalidArgument("histogram needs at least one bin");
  if (!(lo < hi) || !std::isfinite(lo) || !std::isfinite(hi)) {
    throw InvalidArgument("histogram range must satisfy lo < hi, got (" + fmt17(lo) + ", " +
                          fmt17(hi) + ")");
  }
  std::vector<std::size_t> counts(bins, 0);
  const double width = hi - lo;
  for (double s : scores) {
    if (std::isnan(s)) throw NumericError("histogram input contains NaN");
    const double pos = (s - lo) / width * static_cast<double>(bins);
    std::size_t idx = 0;
    if (pos >= static_cast<double>(bins)) {
      idx = bins - 1;
    } else if (pos > 0.0) {
      idx = static_cast<std::size_t>(pos);
    }
    ++counts[idx];
  }
  return counts;
}

ScoreStats summarize(std::span<const double> scores) {
  if (scores.empty()) return {};
  ScoreStats st;
  const auto [mn, mx] = std::minmax_element(scores.begin(), scores.end());
  st.min = *mn;
  st.max = *mx;
  st.mean = std::accumulate(scores.begin(), scores.end(), 0.0) / static_cast<double>(scores.size());
  double ss = 0.0;
  for (double s : scores) ss += (s - st.mean) * (s - st.mean);
  st.stddev = std::sqrt(ss / static_cast<double>(scores.size()));
  return st;
}

EvalReport evaluate(const std::string& method, std::span<const double> id_scores,
                    std::span<const double> ood_scores) {
  EvalReport r;
  r.method = method;
  const auto fpr = fpr_at_95_tpr(id_scores, ood_scores);
  r.fpr95 = fpr.fpr;
  r.gamma = fpr.gamma;
  r.auroc = auroc(id_scores, ood_scores);
  r.id_count = id_scores.size();
  r.ood_count = ood_scores.size();
  r.id_stats = summarize(id_scores);
  r.ood_stats = summarize(ood_scores);
  if (r.id_count < 20) {
    r.warnings.push_back("fewer than 20 ID scores; the 95% threshold is the minimum ID score");
  }
  return r;
}

std::string EvalReport::to_text() const {
  std::string s = "method=" + method + " fpr95=" + fmt17(fpr95) + " auroc=" + fmt17(auroc) +
                  " gamma=" + fmt17(gamma) + " id_count=" + std::to_string(id_count) +
                  " ood_count=" + std::to_string(ood_count);
  auto stats = [&s](const char* prefix, const ScoreStats& st) {
    s += std::string(" ") + prefix + "_min=" + fmt17(st.min) + " " + prefix + "_max=" + fmt17(st.max) +
         " " + prefix + "_mean=" + fmt17(st.mean) + " " + prefix + "_std=" + fmt17(st.stddev);
  };
  stats("id", id_stats);
  stats("ood", ood_stats);
  for (const auto& w : warnings) s += "\nwarning: " + w;
  return s;
}

nlohmann::json EvalReport::to_json() const {
  auto stats = [](const ScoreStats& st) {
    return nlohmann::json{{"min", st.min}, {"max", st.max}, {"mean", st.mean}, {"stddev", st.stddev}};
  };
  return nlohmann::json{
      {"method", method},         {"fpr95", fpr95},
      {"auroc", auroc},           {"gamma", gamma},
      {"id_count", id_count},     {"ood_count", ood_count},
      {"id_stats", stats(id_stats)}, {"ood_stats", stats(ood_stats)},
      {"warnings", warnings},
  };
}

}  // namespace gradnorm
