// Copyright 2026 The gradnorm-ood Authors
// SPDX-License-Identifier: Apache-2.0

#include "gradnorm/cli.hpp"

#include <charconv>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <ostream>
#include <thread>

#include "CLI11.hpp"
#include "commands.hpp"
#include "gradnorm/errors.hpp"

namespace gradnorm::cli {
namespace {

void add_method_flags(CLI::App* cmd, MethodOptions& m, bool with_method) {
  if (with_method) {
    cmd->add_option("--method", m.method,
                    "gradnorm|gradnorm-closed|onehot|kl|u|v|msp|odin|energy|mahalanobis")
        ->capture_default_str();
  }
  cmd->add_option("--norm", m.norm, "Lp order: positive number or inf")->capture_default_str();
  cmd->add_option("--temperature,-T", m.temperature, "softmax temperature")->capture_default_str();
  cmd->add_option("--selection", m.selection, "last | all | layer:K")->capture_default_str();
  if (with_method) {
    cmd->add_option("--epsilon", m.epsilon, "ODIN input perturbation")->capture_default_str();
  }
}

}  // namespace

std::size_t worker_count() {
  if (const char* env = std::getenv("GRADNORM_OOD_THREADS")) {
    std::size_t n = 0;
    const std::string_view s(env);
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), n);
    if (ec == std::errc{} && ptr == s.data() + s.size() && n > 0) return n;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : hw;
}

void write_scores(const std::filesystem::path& path, std::span<const double> scores) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError(IoError::Kind::kOpen, "cannot open " + path.string() + " for writing");
  char buf[32];
  for (double s : scores) {
    std::snprintf(buf, sizeof(buf), "%.17g\n", s);
    f << buf;
  }
  f.flush();
  if (!f) throw IoError(IoError::Kind::kOpen, "write failed: " + path.string());
}

Vector read_scores(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError(IoError::Kind::kOpen, "cannot open " + path.string());
  Vector scores;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(f, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(line, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != line.size()) {
      throw IoError(IoError::Kind::kCorrupt,
                    path.string() + ":" + std::to_string(line_no) + ": not a number: " + line);
    }
    scores.push_back(v);
  }
  return scores;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Gradient-norm OOD scoring toolkit", "gradnorm-ood"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  GenOptions gen;
  auto* gen_cmd = app.add_subcommand("gen", "generate synthetic ID/OOD datasets");
  gen_cmd->add_option("--out", gen.out_dir, "output directory")->required();
  gen_cmd->add_option("--kind", gen.kind, "OOD kind: ring | box | blobs")->capture_default_str();
  gen_cmd->add_option("--dim", gen.spec.dim)->capture_default_str();
  gen_cmd->add_option("--classes", gen.spec.classes)->capture_default_str();
  gen_cmd->add_option("--samples-per-class", gen.spec.samples_per_class)->capture_default_str();
  gen_cmd->add_option("--center-scale", gen.spec.class_center_scale)->capture_default_str();
  gen_cmd->add_option("--sigma", gen.spec.noise_sigma)->capture_default_str();
  gen_cmd->add_option("--shift", gen.spec.ood_shift)->capture_default_str();
  gen_cmd->add_option("--seed", gen.spec.seed)->capture_default_str();

  TrainOptions tr;
  auto* train_cmd = app.add_subcommand("train", "train an MLP classifier on labeled inputs");
  train_cmd->add_option("--data", tr.data, "labeled FLOG with raw inputs")->required();
  train_cmd->add_option("--out", tr.out, "model file (MLP1)")->required();
  train_cmd->add_option("--hidden", tr.hidden, "hidden widths, e.g. --hidden 32 32")
      ->capture_default_str();
  train_cmd->add_flag("--linear", "no hidden layers (overrides --hidden)");
  train_cmd->add_option("--epochs", tr.config.epochs)->capture_default_str();
  train_cmd->add_option("--batch-size", tr.config.batch_size)->capture_default_str();
  train_cmd->add_option("--lr", tr.config.learning_rate)->capture_default_str();
  train_cmd->add_option("--lr-decay", tr.config.lr_decay_factor)->capture_default_str();
  train_cmd->add_option("--decay-epochs", tr.config.decay_epochs);
  train_cmd->add_option("--init-seed", tr.init_seed)->capture_default_str();
  train_cmd->add_option("--seed", tr.config.seed, "shuffling seed")->capture_default_str();
  train_cmd->add_option("--log", tr.log_csv, "per-epoch CSV log");

  ExtractOptions ex;
  auto* extract_cmd = app.add_subcommand("extract", "dump penultimate features and logits");
  extract_cmd->add_option("--model", ex.model)->required();
  extract_cmd->add_option("--data", ex.data)->required();
  extract_cmd->add_option("--out", ex.out)->required();

  ScoreOptions sc;
  auto* score_cmd = app.add_subcommand("score", "score every sample in a FLOG file");
  score_cmd->add_option("--data", sc.data, "raw inputs (with --model) or features/logits")
      ->required();
  score_cmd->add_option("--model", sc.model);
  score_cmd->add_option("--estimator", sc.estimator, "MAHA file for --method mahalanobis");
  score_cmd->add_option("--out", sc.out, "score file")->required();
  add_method_flags(score_cmd, sc.method, true);

  FitOptions fit;
  auto* fit_cmd = app.add_subcommand("fit-mahalanobis", "fit the class-conditional Gaussian");
  fit_cmd->add_option("--data", fit.data, "labeled FLOG")->required();
  fit_cmd->add_option("--model", fit.model, "extract penultimate features through this model");
  fit_cmd->add_option("--lambda", fit.lambda)->capture_default_str();
  fit_cmd->add_option("--out", fit.out)->required();

  EvalOptions ev;
  auto* eval_cmd = app.add_subcommand("eval", "FPR95 and AUROC for ID vs OOD score files");
  eval_cmd->add_option("--id", ev.id_scores)->required();
  eval_cmd->add_option("--ood", ev.ood_scores)->required();
  eval_cmd->add_option("--method", ev.method, "label recorded in the report")->capture_default_str();
  eval_cmd->add_option("--json", ev.json_out);
  eval_cmd->add_option("--text", ev.text_out);
  eval_cmd->add_option("--hist-bins", ev.hist_bins);
  eval_cmd->add_option("--hist-csv", ev.hist_csv);

  SweepOptions sw;
  auto* sweep_cmd = app.add_subcommand("sweep", "ablation table over one configuration axis");
  sweep_cmd->add_option("--axis", sw.axis, "norm | temperature | selection | method")->required();
  sweep_cmd->add_option("--values", sw.values, "values to sweep (default: the standard grid)")
      ->delimiter(',');
  sweep_cmd->add_option("--model", sw.model)->required();
  sweep_cmd->add_option("--id", sw.id_data, "ID raw inputs")->required();
  sweep_cmd->add_option("--ood", sw.ood_data, "OOD raw inputs (repeatable)")->required();
  sweep_cmd->add_option("--estimator", sw.estimator);
  sweep_cmd->add_option("--out", sw.out, "CSV")->required();
  add_method_flags(sweep_cmd, sw.base, true);

  SurfaceOptions sf;
  auto* surface_cmd = app.add_subcommand("surface", "GradNorm over a 2D input grid");
  surface_cmd->add_option("--model", sf.model)->required();
  surface_cmd->add_option("--grid", sf.grid, "lo hi steps")->expected(3)->required();
  surface_cmd->add_option("--out", sf.out, "CSV")->required();
  add_method_flags(surface_cmd, sf.method, false);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kConfigError;
  }

  try {
    if (*gen_cmd) return cmd_gen(gen, out);
    if (*train_cmd) {
      if (train_cmd->count("--linear") > 0) tr.hidden.clear();
      return cmd_train(tr, out);
    }
    if (*extract_cmd) return cmd_extract(ex, out);
    if (*score_cmd) return cmd_score(sc, out);
    if (*fit_cmd) return cmd_fit_mahalanobis(fit, out);
    if (*eval_cmd) return cmd_eval(ev, out);
    if (*sweep_cmd) return cmd_sweep(sw, out);
    if (*surface_cmd) return cmd_surface(sf, out);
  } catch (const IoError& e) {
    err << "error: " << e.what() << '\n';
    return kIoFailure;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kConfigError;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return kIoFailure;
  }
  return kConfigError;
}

}  // namespace gradnorm::cli
