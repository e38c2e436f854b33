// Copyright 2026 The gradnorm-ood Authors
// SPDX-License-Identifier: Apache-2.0

#include "commands.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <optional>
#include <ostream>

#include "gradnorm/cli.hpp"
#include "gradnorm/errors.hpp"
#include "gradnorm/mahalanobis.hpp"
#include "gradnorm/metrics.hpp"
#include "gradnorm/nn.hpp"
#include "gradnorm/rng.hpp"
#include "gradnorm/scores.hpp"
#include "json.hpp"

namespace gradnorm::cli {
namespace {

using nlohmann::json;

std::string fmt17(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::ofstream open_text(const fs::path& path) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError(IoError::Kind::kOpen, "cannot open " + path.string() + " for writing");
  return f;
}

void finish_text(std::ofstream& f, const fs::path& path) {
  f.flush();
  if (!f) throw IoError(IoError::Kind::kOpen, "write failed: " + path.string());
}

// One JSON line per output file. Keys are sorted and nothing time-dependent
// goes in, so identical runs print identical manifests.
void manifest(std::ostream& out, const std::string& command, const json& config,
              const std::vector<fs::path>& inputs, const fs::path& output) {
  json inputs_json = json::array();
  for (const auto& p : inputs) inputs_json.push_back(p.string());
  const json line{{"command", command},
                  {"config", config},
                  {"inputs", inputs_json},
                  {"output", output.string()},
                  {"version", kVersion}};
  out << "manifest " << line.dump() << '\n';
}

ScoreConfig to_config(const MethodOptions& m) {
  ScoreConfig cfg;
  cfg.method = parse_method(m.method);
  cfg.temperature = Temperature(m.temperature);
  cfg.norm = NormOrder::parse(m.norm);
  cfg.selection = ParamSelection::parse(m.selection);
  cfg.epsilon = m.epsilon;
  cfg.validate();
  return cfg;
}

json config_json(const ScoreConfig& cfg) {
  return json{{"method", std::string(method_name(cfg.method))},
              {"temperature", cfg.temperature.value()},
              {"norm", cfg.norm.to_string()},
              {"selection", cfg.selection.to_string()},
              {"epsilon", cfg.epsilon}};
}

const std::vector<std::uint32_t>& require_labels(const FeatureLogitDataset& ds,
                                                 const fs::path& path) {
  if (!ds.labels) throw InvalidArgument(path.string() + " has no labels");
  return *ds.labels;
}

const Matrix& require_inputs(const FeatureLogitDataset& ds, const fs::path& path) {
  if (!ds.has_features()) {
    throw InvalidArgument(path.string() + " has no feature block to use as model input");
  }
  return ds.features;
}

std::size_t label_classes(const std::vector<std::uint32_t>& labels) {
  std::uint32_t mx = 0;
  for (auto y : labels) mx = std::max(mx, y);
  return labels.empty() ? 0 : std::size_t{mx} + 1;
}

void check_model_fits(const MlpModel& model, const Matrix& inputs, const fs::path& path) {
  if (inputs.rows() > 0 && inputs.cols() != model.input_dim()) {
    throw InvalidArgument(path.string() + " has width " + std::to_string(inputs.cols()) +
                          " but the model expects inputs of width " +
                          std::to_string(model.input_dim()));
  }
}

std::vector<std::string> default_sweep_values(const std::string& axis, const MlpModel& model,
                                              bool have_estimator) {
  if (axis == "norm") return {"0.3", "0.5", "0.8", "1", "2", "3", "4", "5", "6", "inf"};
  if (axis == "temperature") {
    return {"0.0625", "0.125", "0.25", "0.5", "1", "2", "4", "8",
            "16", "32", "64", "128", "256", "512", "1024"};
  }
  if (axis == "selection") {
    std::vector<std::string> v;
    for (std::size_t k = 0; k < model.layer_count(); ++k) v.push_back("layer:" + std::to_string(k));
    v.push_back("all");
    v.push_back("last");
    return v;
  }
  if (axis == "method") {
    std::vector<std::string> v{"gradnorm", "gradnorm-closed", "onehot", "kl", "u",
                               "v",        "msp",             "odin",   "energy"};
    if (have_estimator) v.push_back("mahalanobis");
    return v;
  }
  throw InvalidArgument("unknown sweep axis \"" + axis +
                        "\" (expected norm, temperature, selection or method)");
}

MethodOptions apply_axis(MethodOptions base, const std::string& axis, const std::string& value) {
  if (axis == "norm") {
    base.norm = value;
  } else if (axis == "temperature") {
    std::size_t used = 0;
    double t = 0.0;
    try {
      t = std::stod(value, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != value.size()) throw InvalidArgument("invalid temperature \"" + value + "\"");
    base.temperature = t;
  } else if (axis == "selection") {
    base.selection = value;
  } else if (axis == "method") {
    base.method = value;
    // Closed form is only defined at its own operating point.
    if (value == "gradnorm-closed") {
      base.norm = "1";
      base.selection = "last";
    }
  }
  return base;
}

}  // namespace

int cmd_gen(const GenOptions& opt, std::ostream& out) {
  SyntheticSpec spec = opt.spec;
  spec.kind = parse_ood_kind(opt.kind);
  const SyntheticData data = generate(spec);
  fs::create_directories(opt.out_dir);

  const json config{{"kind", opt.kind},
                    {"dim", spec.dim},
                    {"classes", spec.classes},
                    {"samples_per_class", spec.samples_per_class},
                    {"center_scale", spec.class_center_scale},
                    {"sigma", spec.noise_sigma},
                    {"shift", spec.ood_shift},
                    {"seed", spec.seed}};
  const std::pair<const char*, const FeatureLogitDataset*> files[] = {
      {"id_train.flog", &data.id_train},
      {"id_test.flog", &data.id_test},
      {"ood_test.flog", &data.ood_test},
  };
  for (const auto& [name, ds] : files) {
    const fs::path path = opt.out_dir / name;
    write_flog(path, *ds);
    manifest(out, "gen", config, {}, path);
  }
  return kOk;
}

int cmd_train(const TrainOptions& opt, std::ostream& out) {
  const FeatureLogitDataset ds = read_flog(opt.data);
  const Matrix& inputs = require_inputs(ds, opt.data);
  const auto& labels = require_labels(ds, opt.data);
  const std::size_t classes = label_classes(labels);
  if (classes < 2) throw InvalidArgument("training data must contain at least 2 classes");

  std::vector<std::size_t> dims{inputs.cols()};
  dims.insert(dims.end(), opt.hidden.begin(), opt.hidden.end());
  dims.push_back(classes);
  Rng init(opt.init_seed);
  MlpModel model = MlpModel::glorot(dims, init);

  const auto log = train(model, inputs, labels, opt.config);
  save_model(opt.out, model);

  json config{{"dims", dims},
              {"epochs", opt.config.epochs},
              {"batch_size", opt.config.batch_size},
              {"learning_rate", opt.config.learning_rate},
              {"lr_decay_factor", opt.config.lr_decay_factor},
              {"decay_epochs", opt.config.decay_epochs},
              {"init_seed", opt.init_seed},
              {"seed", opt.config.seed}};
  manifest(out, "train", config, {opt.data}, opt.out);

  if (!opt.log_csv.empty()) {
    auto f = open_text(opt.log_csv);
    f << "epoch,learning_rate,mean_loss,accuracy\n";
    for (const auto& e : log) {
      f << e.epoch << ',' << fmt17(e.learning_rate) << ',' << fmt17(e.mean_loss) << ','
        << fmt17(e.accuracy) << '\n';
    }
    finish_text(f, opt.log_csv);
    manifest(out, "train", config, {opt.data}, opt.log_csv);
  }
  out << "train_accuracy " << fmt17(accuracy(model, inputs, labels)) << '\n';
  return kOk;
}

int cmd_extract(const ExtractOptions& opt, std::ostream& out) {
  const MlpModel model = load_model(opt.model);
  const FeatureLogitDataset ds = read_flog(opt.data);
  const Matrix& inputs = require_inputs(ds, opt.data);
  check_model_fits(model, inputs, opt.data);
  write_flog(opt.out, extract(model, inputs, ds.labels));
  manifest(out, "extract", json::object(), {opt.model, opt.data}, opt.out);
  return kOk;
}

int cmd_score(const ScoreOptions& opt, std::ostream& out) {
  const ScoreConfig cfg = to_config(opt.method);
  const FeatureLogitDataset ds = read_flog(opt.data);
  std::optional<MahalanobisEstimator> est;
  if (!opt.estimator.empty()) est = load_estimator(opt.estimator);
  const MahalanobisEstimator* est_ptr = est ? &*est : nullptr;

  std::vector<fs::path> inputs{opt.data};
  Vector scores;
  if (!opt.model.empty()) {
    const MlpModel model = load_model(opt.model);
    const Matrix& x = require_inputs(ds, opt.data);
    check_model_fits(model, x, opt.data);
    scores = score_dataset(model, x, cfg, est_ptr, worker_count());
    inputs.push_back(opt.model);
  } else {
    if (!cfg.works_on_features()) {
      throw InvalidArgument("method " + cfg.describe() +
                            " backpropagates through the network; pass --model with raw inputs "
                            "(gradnorm-closed works on an extracted features+logits file)");
    }
    scores = score_dataset(ds, cfg, est_ptr, worker_count());
  }
  if (est_ptr != nullptr) inputs.push_back(opt.estimator);
  write_scores(opt.out, scores);
  manifest(out, "score", config_json(cfg), inputs, opt.out);
  return kOk;
}

int cmd_fit_mahalanobis(const FitOptions& opt, std::ostream& out) {
  const FeatureLogitDataset ds = read_flog(opt.data);
  const auto& labels = require_labels(ds, opt.data);
  std::vector<fs::path> inputs{opt.data};
  Matrix features;
  std::size_t classes = 0;
  if (!opt.model.empty()) {
    const MlpModel model = load_model(opt.model);
    const Matrix& x = require_inputs(ds, opt.data);
    check_model_fits(model, x, opt.data);
    features = extract(model, x).features;
    classes = model.output_dim();
    inputs.push_back(opt.model);
  } else {
    features = require_inputs(ds, opt.data);
    classes = ds.has_logits() ? ds.class_count() : label_classes(labels);
  }
  const auto est = MahalanobisEstimator::fit(features, labels, classes, opt.lambda);
  save_estimator(opt.out, est);
  manifest(out, "fit-mahalanobis", json{{"lambda", opt.lambda}, {"classes", classes}}, inputs,
           opt.out);
  return kOk;
}

int cmd_eval(const EvalOptions& opt, std::ostream& out) {
  const Vector id = read_scores(opt.id_scores);
  const Vector ood = read_scores(opt.ood_scores);
  const EvalReport report = evaluate(opt.method, id, ood);
  out << report.to_text() << '\n';

  const json config{{"method", opt.method}};
  if (!opt.text_out.empty()) {
    auto f = open_text(opt.text_out);
    f << report.to_text() << '\n';
    finish_text(f, opt.text_out);
    manifest(out, "eval", config, {opt.id_scores, opt.ood_scores}, opt.text_out);
  }
  if (!opt.json_out.empty()) {
    auto f = open_text(opt.json_out);
    f << report.to_json().dump(2) << '\n';
    finish_text(f, opt.json_out);
    manifest(out, "eval", config, {opt.id_scores, opt.ood_scores}, opt.json_out);
  }
  if (!opt.hist_csv.empty()) {
    if (opt.hist_bins == 0) throw InvalidArgument("--hist-bins must be positive");
    double lo = std::min(report.id_stats.min, report.ood_stats.min);
    double hi = std::max(report.id_stats.max, report.ood_stats.max);
    if (!(lo < hi)) hi = lo + 1.0;
    const auto id_h = histogram(id, opt.hist_bins, lo, hi);
    const auto ood_h = histogram(ood, opt.hist_bins, lo, hi);
    auto f = open_text(opt.hist_csv);
    f << "bin_lo,bin_hi,id_count,ood_count\n";
    const double width = (hi - lo) / static_cast<double>(opt.hist_bins);
    for (std::size_t b = 0; b < opt.hist_bins; ++b) {
      f << fmt17(lo + width * static_cast<double>(b)) << ','
        << fmt17(b + 1 == opt.hist_bins ? hi : lo + width * static_cast<double>(b + 1)) << ','
        << id_h[b] << ',' << ood_h[b] << '\n';
    }
    finish_text(f, opt.hist_csv);
    manifest(out, "eval", json{{"method", opt.method}, {"bins", opt.hist_bins}},
             {opt.id_scores, opt.ood_scores}, opt.hist_csv);
  }
  return kOk;
}

int cmd_sweep(const SweepOptions& opt, std::ostream& out) {
  if (opt.ood_data.empty()) throw InvalidArgument("sweep needs at least one --ood file");
  const MlpModel model = load_model(opt.model);
  std::optional<MahalanobisEstimator> est;
  if (!opt.estimator.empty()) est = load_estimator(opt.estimator);
  const MahalanobisEstimator* est_ptr = est ? &*est : nullptr;

  const std::vector<std::string> values =
      opt.values.empty() ? default_sweep_values(opt.axis, model, est_ptr != nullptr) : opt.values;
  // Validates the axis name even when values were given explicitly.
  default_sweep_values(opt.axis, model, true);

  std::vector<ScoreConfig> configs;
  for (const auto& v : values) configs.push_back(to_config(apply_axis(opt.base, opt.axis, v)));

  const FeatureLogitDataset id_ds = read_flog(opt.id_data);
  const Matrix& id_x = require_inputs(id_ds, opt.id_data);
  check_model_fits(model, id_x, opt.id_data);
  const std::size_t workers = worker_count();
  std::vector<Vector> id_scores;
  for (const auto& cfg : configs) id_scores.push_back(score_dataset(model, id_x, cfg, est_ptr, workers));

  auto f = open_text(opt.out);
  f << "ood_set,value,fpr95,auroc\n";
  for (const auto& ood_path : opt.ood_data) {
    const FeatureLogitDataset ood_ds = read_flog(ood_path);
    const Matrix& ood_x = require_inputs(ood_ds, ood_path);
    check_model_fits(model, ood_x, ood_path);
    const std::string set_name = ood_path.stem().string();
    for (std::size_t k = 0; k < configs.size(); ++k) {
      const Vector ood_scores = score_dataset(model, ood_x, configs[k], est_ptr, workers);
      const auto fpr = fpr_at_95_tpr(id_scores[k], ood_scores);
      f << set_name << ',' << values[k] << ',' << fmt17(fpr.fpr) << ','
        << fmt17(auroc(id_scores[k], ood_scores)) << '\n';
    }
  }
  finish_text(f, opt.out);

  std::vector<fs::path> inputs{opt.model, opt.id_data};
  inputs.insert(inputs.end(), opt.ood_data.begin(), opt.ood_data.end());
  manifest(out, "sweep",
           json{{"axis", opt.axis}, {"values", values}, {"base", config_json(to_config(opt.base))}},
           inputs, opt.out);
  return kOk;
}

int cmd_surface(const SurfaceOptions& opt, std::ostream& out) {
  if (opt.grid.size() != 3) throw InvalidArgument("--grid takes exactly: lo hi steps");
  const double lo = opt.grid[0];
  const double hi = opt.grid[1];
  const double steps_d = opt.grid[2];
  if (!(steps_d >= 1.0) || steps_d != static_cast<double>(static_cast<std::size_t>(steps_d))) {
    throw InvalidArgument("--grid steps must be a positive integer");
  }
  if (!(lo <= hi)) throw InvalidArgument("--grid requires lo <= hi");
  const auto steps = static_cast<std::size_t>(steps_d);

  MethodOptions m = opt.method;
  m.method = "gradnorm";
  const ScoreConfig cfg = to_config(m);
  const MlpModel model = load_model(opt.model);
  if (model.input_dim() != 2) {
    throw InvalidArgument("surface needs a model with 2 inputs, got " +
                          std::to_string(model.input_dim()));
  }
  auto coord = [&](std::size_t i) {
    return steps == 1 ? lo : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(steps - 1);
  };
  Matrix points(steps * steps, 2);
  for (std::size_t r = 0; r < steps; ++r) {
    for (std::size_t c = 0; c < steps; ++c) {
      points(r * steps + c, 0) = coord(c);
      points(r * steps + c, 1) = coord(r);
    }
  }
  const Vector scores = score_dataset(model, points, cfg, nullptr, worker_count());

  auto f = open_text(opt.out);
  f << "x1,x2,score\n";
  for (std::size_t i = 0; i < points.rows(); ++i) {
    f << fmt17(points(i, 0)) << ',' << fmt17(points(i, 1)) << ',' << fmt17(scores[i]) << '\n';
  }
  finish_text(f, opt.out);
  manifest(out, "surface", json{{"grid", opt.grid}, {"score", config_json(cfg)}}, {opt.model},
           opt.out);
  return kOk;
}

}  // namespace gradnorm::cli
