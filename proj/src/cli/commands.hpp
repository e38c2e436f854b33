// Copyright 2026 The gradnorm-ood Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "gradnorm/dataset.hpp"
#include "gradnorm/train.hpp"

namespace gradnorm::cli {

namespace fs = std::filesystem;

struct GenOptions {
  SyntheticSpec spec;
  std::string kind = "ring";
  fs::path out_dir;
};

struct TrainOptions {
  fs::path data;
  fs::path out;
  fs::path log_csv;
  std::vector<std::size_t> hidden{32};
  std::uint64_t init_seed = 0;
  TrainConfig config;
};

struct ExtractOptions {
  fs::path model;
  fs::path data;
  fs::path out;
};

// Shared by score, sweep and surface.
struct MethodOptions {
  std::string method = "gradnorm";
  std::string norm = "1";
  double temperature = 1.0;
  std::string selection = "last";
  double epsilon = 0.0;
};

struct ScoreOptions {
  fs::path data;
  fs::path model;
  fs::path estimator;
  fs::path out;
  MethodOptions method;
};

struct FitOptions {
  fs::path data;
  fs::path model;
  fs::path out;
  double lambda = 1e-3;
};

struct EvalOptions {
  fs::path id_scores;
  fs::path ood_scores;
  std::string method = "unknown";
  fs::path json_out;
  fs::path text_out;
  std::size_t hist_bins = 0;
  fs::path hist_csv;
};

struct SweepOptions {
  std::string axis;
  std::vector<std::string> values;
  fs::path model;
  fs::path id_data;
  std::vector<fs::path> ood_data;
  fs::path estimator;
  fs::path out;
  MethodOptions base;
};

struct SurfaceOptions {
  fs::path model;
  std::vector<double> grid;  // lo, hi, steps
  fs::path out;
  MethodOptions method;
};

int cmd_gen(const GenOptions& opt, std::ostream& out);
int cmd_train(const TrainOptions& opt, std::ostream& out);
int cmd_extract(const ExtractOptions& opt, std::ostream& out);
int cmd_score(const ScoreOptions& opt, std::ostream& out);
int cmd_fit_mahalanobis(const FitOptions& opt, std::ostream& out);
int cmd_eval(const EvalOptions& opt, std::ostream& out);
int cmd_sweep(const SweepOptions& opt, std::ostream& out);
int cmd_surface(const SurfaceOptions& opt, std::ostream& out);

}  // namespace gradnorm::cli
