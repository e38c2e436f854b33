// Copyright 2026 The gradnorm-ood Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <fstream>

#include "doctest.h"
#include "gradnorm/errors.hpp"
#include "gradnorm/losses.hpp"
#include "gradnorm/nn.hpp"
#include "gradnorm/rng.hpp"
#include "support.hpp"

namespace gradnorm {
namespace {

using testing::close_rel;

MlpModel two_two_two() {
  // Hidden layer computes relu(x0 - x1), relu(x0 + x1); output mixes them.
  LinearLayer hidden{Matrix(2, 2, {1.0, 1.0, -1.0, 1.0}), Vector{0.0, 0.0}};
  LinearLayer out{Matrix(2, 2, {1.0, 0.0, 0.0, 2.0}), Vector{0.5, -0.5}};
  return MlpModel({hidden, out});
}

TEST_CASE("model construction validates shapes") {
  LinearLayer a{Matrix(3, 4), Vector(4)};
  LinearLayer b{Matrix(5, 2), Vector(2)};
  CHECK_THROWS_AS(MlpModel({a, b}), ShapeError);
  LinearLayer one{Matrix(3, 1), Vector(1)};
  CHECK_THROWS_AS(MlpModel({one}), ShapeError);
  LinearLayer bad_bias{Matrix(3, 2), Vector(3)};
  CHECK_THROWS_AS(MlpModel({bad_bias}), ShapeError);
  CHECK_THROWS(MlpModel(std::vector<LinearLayer>{}));
}

TEST_CASE("parameter counts") {
  const std::size_t dims[] = {2, 3, 2};
  const MlpModel m = MlpModel::zeros(dims);
  CHECK(m.parameter_count() == 17);
  CHECK(m.dims() == std::vector<std::size_t>{2, 3, 2});
}

TEST_CASE("forward worked values") {
  const MlpModel m = two_two_two();
  const auto r = forward(m, Vector{1.0, 2.0});
  CHECK(r.trace.pre_activations[0] == Vector{-1.0, 3.0});
  CHECK(r.trace.post_activations[0] == Vector{0.0, 3.0});
  CHECK(r.logits == Vector{0.5, 5.5});
  CHECK(predict(m, Vector{1.0, 2.0}) == r.logits);
  CHECK(Vector(r.trace.penultimate().begin(), r.trace.penultimate().end()) == Vector{0.0, 3.0});

  const std::size_t dims[] = {3, 4, 2};
  const MlpModel z = MlpModel::zeros(dims);
  CHECK(predict(z, Vector{1.0, -2.0, 3.0}) == Vector{0.0, 0.0});

  // Single layer with identity weights passes input through plus bias.
  const MlpModel id({LinearLayer{Matrix::identity(2), Vector{1.0, -1.0}}});
  CHECK(predict(id, Vector{3.0, 4.0}) == Vector{4.0, 3.0});
  CHECK_THROWS_AS(forward(m, Vector{1.0}), ShapeError);
}

TEST_CASE("backward worked values") {
  const MlpModel m = two_two_two();
  const auto r = forward(m, Vector{1.0, 2.0});
  const Gradients g = backward(m, r.trace, Vector{1.0, -1.0});
  // Output layer: dW = a outer delta.
  CHECK(g.layers[1].weight == Matrix(2, 2, {0.0, 0.0, 3.0, -3.0}));
  CHECK(g.layers[1].bias == Vector{1.0, -1.0});
  // Hidden: delta = W2 * d = (1, -2), masked by relu'(-1, 3) = (0, 1).
  CHECK(g.layers[0].bias == Vector{0.0, -2.0});
  CHECK(g.layers[0].weight == Matrix(2, 2, {0.0, -2.0, 0.0, -4.0}));
  CHECK(g.input == Vector{-2.0, -2.0});
}

TEST_CASE("backward with zero upstream gives zero gradients") {
  Rng rng(1);
  const MlpModel m = testing::random_model(rng);
  const auto r = forward(m, testing::random_vector(rng, m.input_dim()));
  const Gradients g = backward(m, r.trace, Vector(m.output_dim(), 0.0));
  for (double v : testing::flatten_params(g)) CHECK(v == 0.0);
}

TEST_CASE("single layer gradient of a logit is the input") {
  const MlpModel m({LinearLayer{Matrix(3, 2, {1, 2, 3, 4, 5, 6}), Vector{0.0, 0.0}}});
  const Vector x{1.0, -2.0, 0.5};
  const auto r = forward(m, x);
  const Gradients g = backward(m, r.trace, Vector{0.0, 1.0});
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(g.layers[0].weight(i, 0) == 0.0);
    CHECK(g.layers[0].weight(i, 1) == x[i]);
  }
}

TEST_CASE("backward rejects a stale trace") {
  Rng rng(2);
  const std::size_t dims_a[] = {3, 4, 2};
  const std::size_t dims_b[] = {3, 5, 2};
  const MlpModel a = MlpModel::glorot(dims_a, rng);
  const MlpModel b = MlpModel::glorot(dims_b, rng);
  const auto r = forward(a, Vector{1.0, 1.0, 1.0});
  CHECK_THROWS_AS(backward(b, r.trace, Vector{1.0, 0.0}), ShapeError);
  CHECK_THROWS_AS(backward(a, r.trace, Vector{1.0, 0.0, 0.0}), ShapeError);
}

TEST_CASE("backward matches central differences on random models") {
  Rng rng(3);
  for (int trial = 0; trial < 60; ++trial) {
    const MlpModel m = testing::random_model(rng);
    const Vector x = testing::kink_free_input(rng, m);
    const Temperature t(std::exp(rng.uniform(-0.5, 1.0)));
    const auto r = forward(m, x);
    const Gradients g = backward(m, r.trace, kl_to_uniform_grad(r.logits, t));
    const Vector analytic = testing::flatten_params(g);
    const Vector fd =
        testing::fd_param_gradient(m, x, [&](auto z) { return kl_to_uniform(z, t); });
    REQUIRE(analytic.size() == fd.size());
    for (std::size_t i = 0; i < fd.size(); ++i) CHECK(close_rel(analytic[i], fd[i], 1e-4, 1e-7));
    const Vector fdx =
        testing::fd_input_gradient(m, x, [&](auto z) { return kl_to_uniform(z, t); });
    for (std::size_t i = 0; i < fdx.size(); ++i) CHECK(close_rel(g.input[i], fdx[i], 1e-4, 1e-7));
  }
}

TEST_CASE("backward is linear in the upstream gradient") {
  Rng rng(4);
  for (int trial = 0; trial < 50; ++trial) {
    const MlpModel m = testing::random_model(rng);
    const auto r = forward(m, testing::random_vector(rng, m.input_dim()));
    const Vector u = testing::random_vector(rng, m.output_dim());
    const Vector v = testing::random_vector(rng, m.output_dim());
    const double a = rng.normal();
    const double b = rng.normal();
    Vector mix(u.size());
    for (std::size_t i = 0; i < u.size(); ++i) mix[i] = a * u[i] + b * v[i];
    const Vector gu = testing::flatten_params(backward(m, r.trace, u));
    const Vector gv = testing::flatten_params(backward(m, r.trace, v));
    const Vector gm = testing::flatten_params(backward(m, r.trace, mix));
    for (std::size_t i = 0; i < gm.size(); ++i) {
      CHECK(std::abs(gm[i] - (a * gu[i] + b * gv[i])) <= 1e-12 * (1.0 + std::abs(gm[i])));
    }
  }
}

TEST_CASE("select_gradients ordering") {
  const std::size_t dims[] = {2, 3, 2};
  const MlpModel m = MlpModel::zeros(dims);
  const auto r = forward(m, Vector{0.0, 0.0});
  Gradients g = backward(m, r.trace, Vector{0.0, 0.0});

  g.layers[0].weight(0, 0) = 1.0;
  const Vector all = select_gradients(g, ParamSelection::all());
  CHECK(all.size() == 17);
  CHECK(all[0] == 1.0);
  for (std::size_t i = 1; i < all.size(); ++i) CHECK(all[i] == 0.0);

  // Label every slot with a distinct value to pin the layout.
  double next = 1.0;
  for (auto& layer : g.layers) {
    for (double& w : layer.weight.data()) w = next++;
    for (double& b : layer.bias) b = next++;
  }
  const Vector ordered = select_gradients(g, ParamSelection::all());
  for (std::size_t i = 0; i < ordered.size(); ++i) CHECK(ordered[i] == static_cast<double>(i + 1));
  CHECK(select_gradients(g, ParamSelection::last_layer_weight()) ==
        Vector{10.0, 11.0, 12.0, 13.0, 14.0, 15.0});
  CHECK(select_gradients(g, ParamSelection::layer(0)).size() == 9);
  CHECK(select_gradients(g, ParamSelection::layer(1)).size() == 8);
  CHECK_THROWS_AS(select_gradients(g, ParamSelection::layer(2)), InvalidArgument);
}

TEST_CASE("ParamSelection parse") {
  CHECK(ParamSelection::parse("last") == ParamSelection::last_layer_weight());
  CHECK(ParamSelection::parse("all") == ParamSelection::all());
  CHECK(ParamSelection::parse("layer:1") == ParamSelection::layer(1));
  CHECK(ParamSelection::parse(ParamSelection::layer(3).to_string()) == ParamSelection::layer(3));
  CHECK_THROWS_AS(ParamSelection::parse("layer:"), InvalidArgument);
  CHECK_THROWS_AS(ParamSelection::parse("bias"), InvalidArgument);
}

TEST_CASE("glorot init is deterministic and bounded") {
  const std::size_t dims[] = {8, 32, 4};
  Rng a(9);
  Rng b(9);
  const MlpModel ma = MlpModel::glorot(dims, a);
  CHECK(ma == MlpModel::glorot(dims, b));
  const double limit = std::sqrt(6.0 / 40.0);
  for (double w : ma.layers()[0].weight.data()) CHECK(std::abs(w) <= limit);
  for (double v : ma.layers()[0].bias) CHECK(v == 0.0);
}

TEST_CASE("model files round trip bit-exactly") {
  testing::TempDir dir("nn");
  Rng rng(10);
  for (int trial = 0; trial < 20; ++trial) {
    const MlpModel m = testing::random_model(rng, 4, 12, 10);
    save_model(dir / "m.mlp", m);
    CHECK(load_model(dir / "m.mlp") == m);
  }
}

TEST_CASE("model loader rejects bad files") {
  testing::TempDir dir("nnbad");
  {
    std::ofstream f(dir / "bad.mlp", std::ios::binary);
    f << "NOPE1234";
  }
  try {
    load_model(dir / "bad.mlp");
    FAIL("expected IoError");
  } catch (const IoError& e) {
    CHECK(e.kind() == IoError::Kind::kBadMagic);
  }

  const std::size_t dims[] = {3, 4, 2};
  save_model(dir / "ok.mlp", MlpModel::zeros(dims));
  const auto size = std::filesystem::file_size(dir / "ok.mlp");
  std::filesystem::resize_file(dir / "ok.mlp", size - 3);
  try {
    load_model(dir / "ok.mlp");
    FAIL("expected IoError");
  } catch (const IoError& e) {
    CHECK(e.kind() == IoError::Kind::kTruncated);
  }
  CHECK_THROWS_AS(load_model(dir / "missing.mlp"), IoError);
}

}  // namespace
}  // namespace gradnorm
