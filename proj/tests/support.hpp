// Copyright 2026 The gradnorm-ood Authors
// SPDX-License-Identifier: Apache-2.0

// Test-only helpers: random instance generators and oracles that do not go
// through the code paths they check (no backward(), no rank-sum, no Cholesky).

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <unistd.h>
#include <string>
#include <vector>

#include "gradnorm/linalg.hpp"
#include "gradnorm/losses.hpp"
#include "gradnorm/nn.hpp"
#include "gradnorm/rng.hpp"

namespace gradnorm::testing {

inline bool close_rel(double a, double b, double rel, double abs_floor = 0.0) {
  const double diff = std::abs(a - b);
  return diff <= abs_floor || diff <= rel * std::max(std::abs(a), std::abs(b));
}

inline Vector random_vector(Rng& rng, std::size_t n, double scale = 1.0) {
  Vector v(n);
  for (double& x : v) x = scale * rng.normal();
  return v;
}

// Random model with 1..max_layers layers, widths in [1, max_dim] and
// 2..max_classes outputs. Biases are random too so logits are not centred.
inline MlpModel random_model(Rng& rng, std::size_t max_layers = 3, std::size_t max_dim = 8,
                             std::size_t max_classes = 8) {
  const std::size_t layers = 1 + rng.below(max_layers);
  std::vector<std::size_t> dims;
  for (std::size_t k = 0; k < layers; ++k) dims.push_back(1 + rng.below(max_dim));
  dims.push_back(2 + rng.below(max_classes - 1));
  MlpModel model = MlpModel::glorot(dims, rng);
  for (auto& layer : model.mutable_layers()) {
    for (double& b : layer.bias) b = 0.3 * rng.normal();
  }
  return model;
}

// True when every hidden pre-activation is at least `margin` from the ReLU kink.
inline bool away_from_kinks(const MlpModel& model, std::span<const double> x, double margin) {
  const auto fwd = forward(model, x);
  for (std::size_t k = 0; k + 1 < fwd.trace.pre_activations.size(); ++k) {
    for (double z : fwd.trace.pre_activations[k]) {
      if (std::abs(z) < margin) return false;
    }
  }
  return true;
}

inline Vector kink_free_input(Rng& rng, const MlpModel& model, double margin = 1e-3) {
  for (;;) {
    Vector x = random_vector(rng, model.input_dim());
    if (away_from_kinks(model, x, margin)) return x;
  }
}

using LogitLoss = std::function<double(std::span<const double>)>;

// Central differences of loss(predict(model, x)) with respect to every
// parameter, flattened layer-major as weight row-major then bias.
inline Vector fd_param_gradient(const MlpModel& model, std::span<const double> x,
                                const LogitLoss& loss, double h = 1e-5) {
  Vector out;
  MlpModel probe = model;
  auto eval = [&] { return loss(predict(probe, x)); };
  for (std::size_t k = 0; k < probe.layer_count(); ++k) {
    auto& layer = probe.mutable_layers()[k];
    auto perturb = [&](double& p) {
      const double saved = p;
      p = saved + h;
      const double up = eval();
      p = saved - h;
      const double down = eval();
      p = saved;
      out.push_back((up - down) / (2.0 * h));
    };
    for (double& w : layer.weight.data()) perturb(w);
    for (double& b : layer.bias) perturb(b);
  }
  return out;
}

inline Vector fd_input_gradient(const MlpModel& model, std::span<const double> x,
                                const LogitLoss& loss, double h = 1e-5) {
  Vector probe(x.begin(), x.end());
  Vector out;
  for (double& xi : probe) {
    const double saved = xi;
    xi = saved + h;
    const double up = loss(predict(model, probe));
    xi = saved - h;
    const double down = loss(predict(model, probe));
    xi = saved;
    out.push_back((up - down) / (2.0 * h));
  }
  return out;
}

// Flattens a Gradients struct in the same order as fd_param_gradient.
inline Vector flatten_params(const Gradients& g) {
  return select_gradients(g, ParamSelection::all());
}

// O(N_id * N_ood) pairwise AUROC with 0.5 tie credit.
inline double brute_force_auroc(std::span<const double> id, std::span<const double> ood) {
  double credit = 0.0;
  for (double i : id) {
    for (double o : ood) credit += i > o ? 1.0 : (i == o ? 0.5 : 0.0);
  }
  return credit / (static_cast<double>(id.size()) * static_cast<double>(ood.size()));
}

// Gauss-Jordan inverse with partial pivoting.
inline Matrix gauss_jordan_inverse(const Matrix& a) {
  const std::size_t n = a.rows();
  Matrix work = a;
  Matrix inv = Matrix::identity(n);
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t pivot = col;
    for (std::size_t r = col + 1; r < n; ++r) {
      if (std::abs(work(r, col)) > std::abs(work(pivot, col))) pivot = r;
    }
    for (std::size_t c = 0; c < n; ++c) {
      std::swap(work(col, c), work(pivot, c));
      std::swap(inv(col, c), inv(pivot, c));
    }
    const double d = work(col, col);
    for (std::size_t c = 0; c < n; ++c) {
      work(col, c) /= d;
      inv(col, c) /= d;
    }
    for (std::size_t r = 0; r < n; ++r) {
      if (r == col) continue;
      const double f = work(r, col);
      for (std::size_t c = 0; c < n; ++c) {
        work(r, c) -= f * work(col, c);
        inv(r, c) -= f * inv(col, c);
      }
    }
  }
  return inv;
}

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("gradnorm_test_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

}  // namespace gradnorm::testing
