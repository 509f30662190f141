// Copyright 2026 The XMoCo Engine Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "xmoco/training.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "oracles.hpp"
#include "xmoco/checkpoint.hpp"

using namespace xmoco;

namespace {

TrainConfig tiny_config() {
  TrainConfig config;
  config.d_in = 6;
  config.feat_dim = 5;
  config.hidden = 8;
  config.mlp_layers = 2;
  config.batch_size = 4;
  config.bank_size = 8;
  config.classes = 3;
  config.per_class = 8;
  config.separation = 6.0;
  config.epochs = 2;
  config.seed = 7;
  config.resolve_and_validate();
  return config;
}

Mat first_batch(const Dataset& ds, std::size_t n) {
  Mat batch(ds.dim(), n);
  for (std::size_t c = 0; c < n; ++c)
    for (std::size_t r = 0; r < ds.dim(); ++r)
      batch.at(r, c) = ds.samples.at(r, c);
  return batch;
}

}  // namespace

TEST_CASE("cosine_lr endpoints and midpoint") {
  CHECK(cosine_lr(0, 100, 1.0) == doctest::Approx(1.1).epsilon(1e-15));
  CHECK(cosine_lr(100, 100, 1.0) == doctest::Approx(0.1).epsilon(1e-15));
  CHECK(cosine_lr(50, 100, 1.0) == doctest::Approx(0.6).epsilon(1e-14));
  CHECK(cosine_lr(0, 100, 0.5) == doctest::Approx(0.55).epsilon(1e-15));
  CHECK_THROWS_AS(cosine_lr(101, 100, 1.0), std::invalid_argument);
}

TEST_CASE("cosine_lr is non-increasing") {
  double prev = cosine_lr(0, 57, 2.0);
  for (std::size_t s = 1; s <= 57; ++s) {
    const double cur = cosine_lr(s, 57, 2.0);
    CHECK(cur <= prev);
    prev = cur;
  }
}

TEST_CASE("sgd_update hand examples") {
  EncoderParams p = make_encoder(1, 1, 1, 1, 0);
  p.layers[0].weight.at(0, 0) = 1.0;
  EncoderParams g = zeros_like(p);
  g.layers[0].weight.at(0, 0) = 1.0;
  EncoderParams v = zeros_like(p);

  SUBCASE("zero grad, zero wd, zero velocity leaves params alone") {
    EncoderParams zero_g = zeros_like(p);
    sgd_update(p, zero_g, v, 0.1, 0.9, 0.0);
    CHECK(p.layers[0].weight.at(0, 0) == 1.0);
  }
  SUBCASE("no momentum, no decay reduces to plain descent") {
    sgd_update(p, g, v, 0.1, 0.0, 0.0);
    CHECK(p.layers[0].weight.at(0, 0) == doctest::Approx(0.9).epsilon(1e-15));
  }
  SUBCASE("two momentum steps accumulate the velocity") {
    sgd_update(p, g, v, 0.1, 0.9, 0.0);
    CHECK(p.layers[0].weight.at(0, 0) == doctest::Approx(0.9).epsilon(1e-15));
    sgd_update(p, g, v, 0.1, 0.9, 0.0);
    CHECK(p.layers[0].weight.at(0, 0) == doctest::Approx(0.71).epsilon(1e-15));
  }
}

TEST_CASE("train_step with lr=0 leaves f fixed while g relaxes toward it") {
  const TrainConfig config = tiny_config();
  const Dataset ds = make_blobs(config.classes, config.per_class, config.d_in,
                                config.separation, config.seed);
  TrainState state = init_train_state(config);
  const EncoderParams f_before = state.pair.f;
  MomentumPair ema_only = make_momentum_pair(f_before, config.ema_m);
  train_step(state, first_batch(ds, config.batch_size), config, 0.0);
  CHECK(param_max_abs_diff(state.pair.f, f_before) == 0.0);
  // g moved by the EMA recursion only
  momentum_update(ema_only);
  CHECK(param_max_abs_diff(state.pair.g, ema_only.g) == 0.0);
}

TEST_CASE("g moves only through the EMA recursion") {
  const TrainConfig config = tiny_config();
  const Dataset ds = make_blobs(config.classes, config.per_class, config.d_in,
                                config.separation, config.seed);
  TrainState state = init_train_state(config);
  // desynchronize g so the EMA is observable
  for (auto& layer : state.pair.g.layers)
    for (std::size_t i = 0; i < layer.weight.size(); ++i)
      layer.weight.data()[i] += 0.01;
  const EncoderParams g_before = state.pair.g;

  train_step(state, first_batch(ds, config.batch_size), config, 0.05);

  EncoderParams expected = g_before;
  for (std::size_t li = 0; li < expected.layers.size(); ++li) {
    auto& gl = expected.layers[li];
    const auto& fl = state.pair.f.layers[li];  // f after the SGD step
    for (std::size_t i = 0; i < gl.weight.size(); ++i)
      gl.weight.data()[i] =
          config.ema_m * gl.weight.data()[i] + (1 - config.ema_m) * fl.weight.data()[i];
    for (std::size_t i = 0; i < gl.bias.size(); ++i)
      gl.bias[i] = config.ema_m * gl.bias[i] + (1 - config.ema_m) * fl.bias[i];
  }
  CHECK(param_max_abs_diff(state.pair.g, expected) == 0.0);
}

TEST_CASE("xi=1 with regularization off equals the classical loss per step") {
  TrainConfig config = tiny_config();
  config.xi = 1.0;
  config.xsim_reg = false;
  const Dataset ds = make_blobs(config.classes, config.per_class, config.d_in,
                                config.separation, config.seed);

  // evaluate both losses on the same probability matrices
  TrainState state = init_train_state(config);
  const Mat batch = first_batch(ds, config.batch_size);
  Mat views_s(config.d_in, config.batch_size), views_t(config.d_in, config.batch_size);
  Rng probe_rng = state.rng;  // copy, so the trainer stream is untouched
  for (std::size_t c = 0; c < config.batch_size; ++c) {
    auto [vs, vt] = two_views(batch.column(c), config.transform, probe_rng);
    views_s.set_column(c, vs);
    views_t.set_column(c, vt);
  }
  const Mat qs = encoder_forward(state.pair.f, views_s);
  const Mat qt = encoder_forward(state.pair.f, views_t);
  const Mat ks = encoder_forward(state.pair.g, views_s);
  const Mat kt = encoder_forward(state.pair.g, views_t);
  const ProbMatrix ps = get_prob(qs, kt, state.bank_t.snapshot(), config.tau);
  const ProbMatrix pt = get_prob(qt, ks, state.bank_s.snapshot(), config.tau);
  const double classical = classical_loss(ps, pt);

  const StepMetrics metrics = train_step(state, batch, config, 0.01);
  CHECK(std::fabs(metrics.loss - classical) < 1e-12);
  CHECK(metrics.term_xsim_s_on_pt == 0.0);
  CHECK(metrics.term_xsim_t_on_ps == 0.0);
}

TEST_CASE("two independent runs produce identical metric streams") {
  const TrainConfig config = tiny_config();
  const Dataset ds = make_blobs(config.classes, config.per_class, config.d_in,
                                config.separation, config.seed);
  std::vector<StepMetrics> a, b;
  RunHooks hooks_a, hooks_b;
  hooks_a.on_step = [&](const StepMetrics& m) { a.push_back(m); };
  hooks_b.on_step = [&](const StepMetrics& m) { b.push_back(m); };
  const TrainState sa = run(config, ds, hooks_a);
  const TrainState sb = run(config, ds, hooks_b);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].loss == b[i].loss);
    CHECK(a[i].grad_norm == b[i].grad_norm);
    CHECK(a[i].lr == b[i].lr);
  }
  CHECK(param_max_abs_diff(sa.pair.f, sb.pair.f) == 0.0);
}

TEST_CASE("loss decreases on a frozen batch") {
  TrainConfig config = tiny_config();
  const Dataset ds = make_blobs(config.classes, config.per_class, config.d_in,
                                config.separation, config.seed);
  TrainState state = init_train_state(config);
  const Mat batch = first_batch(ds, config.batch_size);

  // freeze the views by an identity transform so only the parameters move
  config.transform.noise_sigma = 0.0;
  config.transform.scale_min = 1.0;
  config.transform.scale_max = 1.0;
  config.transform.mask_fraction = 0.0;

  double prev = std::numeric_limits<double>::infinity();
  int non_monotone = 0;
  for (int i = 0; i < 50; ++i) {
    const StepMetrics m = train_step(state, batch, config, 0.02);
    if (m.loss > prev) ++non_monotone;
    prev = m.loss;
  }
  CHECK(non_monotone <= 5);
}

TEST_CASE("EMA lag bound holds along a run") {
  TrainConfig config = tiny_config();
  const Dataset ds = make_blobs(config.classes, config.per_class, config.d_in,
                                config.separation, config.seed);
  TrainState state = init_train_state(config);
  const Mat batch = first_batch(ds, config.batch_size);
  for (int i = 0; i < 10; ++i) {
    const double gap_before = param_norm([&] {
      EncoderParams diff = state.pair.g;
      for (std::size_t li = 0; li < diff.layers.size(); ++li) {
        diff.layers[li].weight -= state.pair.f.layers[li].weight;
        for (std::size_t k = 0; k < diff.layers[li].bias.size(); ++k)
          diff.layers[li].bias[k] -= state.pair.f.layers[li].bias[k];
      }
      return diff;
    }());
    const double lr = 0.05;
    train_step(state, batch, config, lr);
    const double vnorm = param_norm(state.velocity);
    EncoderParams diff = state.pair.g;
    for (std::size_t li = 0; li < diff.layers.size(); ++li) {
      diff.layers[li].weight -= state.pair.f.layers[li].weight;
      for (std::size_t k = 0; k < diff.layers[li].bias.size(); ++k)
        diff.layers[li].bias[k] -= state.pair.f.layers[li].bias[k];
    }
    CHECK(param_norm(diff) <= gap_before + lr * vnorm + 1e-12);
  }
}

TEST_CASE("divergence aborts with a probability dump") {
  TrainConfig config = tiny_config();
  config.uniform_labels = false;
  config.tau = 1e-4;  // cosine gaps of ~1e4 in the logits force underflow
  config.resolve_and_validate();
  const Dataset ds = make_blobs(config.classes, config.per_class, config.d_in,
                                config.separation, config.seed);
  TrainState state = init_train_state(config);
  CHECK_THROWS_AS(
      train_step(state, first_batch(ds, config.batch_size), config, 0.01),
      DivergenceError);
  try {
    TrainState again = init_train_state(config);
    train_step(again, first_batch(ds, config.batch_size), config, 0.01);
  } catch (const DivergenceError& e) {
    const std::string what = e.what();
    CHECK(what.find("divergence") != std::string::npos);
    CHECK(what.find("column") != std::string::npos);
  }
}

TEST_CASE("checkpoint round trip resumes bit-identically") {
  TrainConfig config = tiny_config();
  config.epochs = 4;
  const Dataset ds = make_blobs(config.classes, config.per_class, config.d_in,
                                config.separation, config.seed);

  // One uninterrupted run; a checkpoint is captured mid-flight so the
  // cosine schedule horizon is shared with the resumed continuation.
  const std::string path =
      (std::filesystem::temp_directory_path() / "xmoco_ckpt_test.xmckpt").string();
  std::vector<StepMetrics> full;
  RunHooks hooks;
  hooks.on_step = [&](const StepMetrics& m) { full.push_back(m); };
  hooks.on_epoch_end = [&](std::size_t epoch, const TrainState& state) {
    if (epoch == 2) save_checkpoint(path, config, state);
  };
  const TrainState final_full = run(config, ds, hooks);

  Checkpoint loaded = load_checkpoint(path);
  CHECK(loaded.state.epoch == 2);

  // save -> load -> save is a byte-level fixpoint
  const std::string path2 = path + ".2";
  save_checkpoint(path2, loaded.config, loaded.state);
  {
    std::ifstream a(path, std::ios::binary), b(path2, std::ios::binary);
    std::stringstream sa, sb;
    sa << a.rdbuf();
    sb << b.rdbuf();
    CHECK(sa.str() == sb.str());
  }
  std::remove(path2.c_str());

  std::vector<StepMetrics> tail;
  RunHooks tail_hooks;
  tail_hooks.on_step = [&](const StepMetrics& m) { tail.push_back(m); };
  resume_from(loaded.state, loaded.config, ds, tail_hooks);

  REQUIRE(full.size() == 2 * tail.size());
  for (std::size_t i = 0; i < tail.size(); ++i) {
    const StepMetrics& expect = full[full.size() - tail.size() + i];
    CHECK(tail[i].step == expect.step);
    CHECK(tail[i].loss == expect.loss);
    CHECK(tail[i].grad_norm == expect.grad_norm);
    CHECK(tail[i].lr == expect.lr);
  }
  CHECK(param_max_abs_diff(loaded.state.pair.f, final_full.pair.f) == 0.0);
  std::remove(path.c_str());
}

TEST_CASE("epochs=0 run returns the initial state") {
  TrainConfig config = tiny_config();
  config.epochs = 0;
  const Dataset ds = make_blobs(config.classes, config.per_class, config.d_in,
                                config.separation, config.seed);
  const TrainState fresh = init_train_state(config);
  const TrainState out = run(config, ds);
  CHECK(param_max_abs_diff(out.pair.f, fresh.pair.f) == 0.0);
  CHECK(out.step == 0);
}

TEST_CASE("config validation catches bad ranges") {
  TrainConfig config = tiny_config();
  SUBCASE("tau") {
    config.tau = 0.0;
    CHECK_THROWS_AS(config.resolve_and_validate(), std::invalid_argument);
  }
  SUBCASE("xi") {
    config.xi = 1.5;
    CHECK_THROWS_AS(config.resolve_and_validate(), std::invalid_argument);
  }
  SUBCASE("batch over bank") {
    config.batch_size = config.bank_size + 1;
    CHECK_THROWS_AS(config.resolve_and_validate(), std::invalid_argument);
  }
  SUBCASE("unknown key") {
    CHECK_THROWS_AS(config.set_key("no_such_key", "1"), std::invalid_argument);
  }
  SUBCASE("lr rule") {
    TrainConfig c;
    c.batch_size = 64;
    c.bank_size = 256;
    c.base_lr = 0.0;
    c.resolve_and_validate();
    CHECK(c.base_lr == doctest::Approx(0.0675 * 64.0 / 256.0).epsilon(1e-15));
  }
}
