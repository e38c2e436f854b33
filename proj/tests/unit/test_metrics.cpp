// Copyright 2026 The gradnorm-ood Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>
#include <sstream>

#include "doctest.h"
#include "gradnorm/errors.hpp"
#include "gradnorm/metrics.hpp"
#include "support.hpp"

namespace gradnorm {
namespace {

Vector random_scores(Rng& rng, std::size_t n, double shift, bool coarse) {
  Vector v(n);
  for (double& x : v) {
    x = rng.normal() + shift;
    if (coarse) x = std::round(x * 2.0) / 2.0;  // forces ties
  }
  return v;
}

TEST_CASE("FPR95 worked value") {
  const Vector id{1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 14, 15, 16, 17, 18, 19, 20,
                  21, 22, 23, 24, 25, 26, 27, 28, 29, 30, 31, 32, 33, 34, 35, 36, 37, 38, 39, 40};
  // N = 40, index 2 of the sorted ID scores.
  const Vector ood{1.0, 2.0, 3.0, 4.0};
  const Fpr95 r = fpr_at_95_tpr(id, ood);
  CHECK(r.gamma == 3.0);
  CHECK(r.fpr == 0.5);

  Vector id100(100);
  for (std::size_t i = 0; i < 100; ++i) id100[i] = static_cast<double>(i + 1);
  const Fpr95 r100 = fpr_at_95_tpr(id100, Vector{5.0, 7.0});
  CHECK(r100.gamma == 6.0);
  CHECK(r100.fpr == 0.5);
  CHECK(fpr_at_95_tpr(id100, Vector{-1.0, 0.5}).fpr == 0.0);
  CHECK(fpr_at_95_tpr(id100, id100).fpr >= 0.95 - 1.0 / 100.0);
}

TEST_CASE("AUROC worked values") {
  CHECK(auroc(Vector{1.0, 3.0}, Vector{2.0, 4.0}) == 0.25);
  CHECK(auroc(Vector{5.0, 6.0}, Vector{1.0, 2.0}) == 1.0);
  CHECK(auroc(Vector{1.0}, Vector{1.0}) == 0.5);
  CHECK(auroc(Vector{3.0, 4.0, 5.0}, Vector{1.0, 2.0}) == 1.0);
  CHECK(auroc(Vector{1.0, 2.0, 2.0, 7.0}, Vector{1.0, 2.0, 2.0, 7.0}) == 0.5);
}

TEST_CASE("metric input validation") {
  CHECK_THROWS_AS(auroc(Vector{}, Vector{1.0}), InvalidArgument);
  CHECK_THROWS_AS(fpr_at_95_tpr(Vector{1.0}, Vector{}), InvalidArgument);
  CHECK_THROWS_AS(auroc(Vector{std::nan("")}, Vector{1.0}), NumericError);
}

TEST_CASE("AUROC equals the pairwise count") {
  Rng rng(51);
  for (int trial = 0; trial < 500; ++trial) {
    const bool coarse = trial % 2 == 0;
    const Vector id = random_scores(rng, 1 + rng.below(60), rng.uniform(-1.0, 2.0), coarse);
    const Vector ood = random_scores(rng, 1 + rng.below(60), 0.0, coarse);
    CHECK(std::abs(auroc(id, ood) - testing::brute_force_auroc(id, ood)) < 1e-12);
  }
}

TEST_CASE("metric invariants") {
  Rng rng(52);
  for (int trial = 0; trial < 200; ++trial) {
    const Vector id = random_scores(rng, 20 + rng.below(80), 1.0, trial % 3 == 0);
    const Vector ood = random_scores(rng, 1 + rng.below(80), 0.0, trial % 3 == 0);
    const double a = auroc(id, ood);
    const Fpr95 f = fpr_at_95_tpr(id, ood);

    // Strictly increasing transforms change nothing.
    auto transform = [](Vector v) {
      for (double& x : v) x = std::exp(0.5 * x) + 3.0;
      return v;
    };
    CHECK(auroc(transform(id), transform(ood)) == doctest::Approx(a).epsilon(1e-12));
    CHECK(fpr_at_95_tpr(transform(id), transform(ood)).fpr == f.fpr);

    // Swapping the roles mirrors AUROC.
    CHECK(auroc(ood, id) == doctest::Approx(1.0 - a).epsilon(1e-12));

    // At least 95% of ID scores clear the threshold.
    const auto kept = std::count_if(id.begin(), id.end(), [&](double s) { return s >= f.gamma; });
    CHECK(static_cast<double>(kept) >= 0.95 * static_cast<double>(id.size()));
    CHECK(f.fpr >= 0.0);
    CHECK(f.fpr <= 1.0);

    std::size_t total = 0;
    for (auto count : histogram(id, 7, -1.0, 2.0)) total += count;
    CHECK(total == id.size());
  }
}

TEST_CASE("histogram binning") {
  CHECK(histogram(Vector{0.0, 0.5, 1.0}, 2, 0.0, 1.0) == std::vector<std::size_t>{1, 2});
  CHECK(histogram(Vector{-5.0, 0.25, 9.0}, 2, 0.0, 1.0) == std::vector<std::size_t>{2, 1});
  CHECK(histogram(Vector{0.5}, 1, 0.0, 1.0) == std::vector<std::size_t>{1});
  CHECK(histogram(Vector{}, 3, 0.0, 1.0) == std::vector<std::size_t>{0, 0, 0});
  CHECK_THROWS_AS(histogram(Vector{1.0}, 0, 0.0, 1.0), InvalidArgument);
  CHECK_THROWS_AS(histogram(Vector{1.0}, 2, 1.0, 1.0), InvalidArgument);
}

TEST_CASE("summary statistics") {
  const ScoreStats s = summarize(Vector{1.0, 2.0, 3.0, 4.0});
  CHECK(s.min == 1.0);
  CHECK(s.max == 4.0);
  CHECK(s.mean == 2.5);
  CHECK(s.stddev == doctest::Approx(std::sqrt(1.25)));
}

TEST_CASE("text and JSON reports agree") {
  Rng rng(53);
  const Vector id = random_scores(rng, 50, 1.0, false);
  const Vector ood = random_scores(rng, 40, 0.0, false);
  const EvalReport r = evaluate("gradnorm", id, ood);
  const auto j = r.to_json();
  const std::string text = r.to_text();
  auto field = [&](const std::string& key) {
    const auto pos = text.find(key + "=");
    REQUIRE(pos != std::string::npos);
    std::istringstream in(text.substr(pos + key.size() + 1));
    double v = 0.0;
    in >> v;
    return v;
  };
  CHECK(std::abs(field("fpr95") - j["fpr95"].get<double>()) < 1e-12);
  CHECK(std::abs(field("auroc") - j["auroc"].get<double>()) < 1e-12);
  CHECK(std::abs(field("gamma") - j["gamma"].get<double>()) < 1e-12);
  CHECK(j["id_count"] == 50);
  CHECK(j["method"] == "gradnorm");
  CHECK(r.warnings.empty());
  CHECK_FALSE(evaluate("x", Vector{1.0, 2.0}, Vector{0.0}).warnings.empty());
}

}  // namespace
}  // namespace gradnorm
