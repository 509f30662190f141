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

#include "xmoco/encoder.hpp"

#include <cmath>

#include "doctest.h"
#include "oracles.hpp"
#include "xmoco/rng.hpp"

using namespace xmoco;

namespace {

EncoderParams identity_encoder(std::size_t d) {
  EncoderParams p = make_encoder(d, d, d, 1, 0);
  p.layers[0].weight = Mat::identity(d);
  p.layers[0].bias.assign(d, 0.0);
  return p;
}

}  // namespace

TEST_CASE("identity layer reduces forward to normalization") {
  const EncoderParams enc = identity_encoder(2);
  const Mat x = Mat::from_rows({{3.0}, {4.0}});
  const Mat y = encoder_forward(enc, x);
  CHECK(y.at(0, 0) == doctest::Approx(0.6).epsilon(1e-12));
  CHECK(y.at(1, 0) == doctest::Approx(0.8).epsilon(1e-12));
}

TEST_CASE("outputs are unit-norm and deterministic") {
  const EncoderParams enc = make_encoder(6, 8, 4, 3, 123);
  Rng rng(41);
  Mat x(6, 5);
  for (std::size_t i = 0; i < x.size(); ++i) x.data()[i] = rng.normal();
  const Mat y1 = encoder_forward(enc, x);
  const Mat y2 = encoder_forward(enc, x);
  CHECK(y1 == y2);
  for (std::size_t c = 0; c < y1.cols(); ++c)
    CHECK(norm2(y1.column(c)) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("same seed same weights, different seed different weights") {
  const EncoderParams a = make_encoder(4, 8, 3, 2, 7);
  const EncoderParams b = make_encoder(4, 8, 3, 2, 7);
  const EncoderParams c = make_encoder(4, 8, 3, 2, 8);
  CHECK(param_max_abs_diff(a, b) == 0.0);
  CHECK(param_max_abs_diff(a, c) > 0.0);
}

TEST_CASE("degenerate embedding is rejected") {
  EncoderParams enc = identity_encoder(2);
  enc.layers[0].weight = Mat(2, 2);  // all zeros
  const Mat x = Mat::from_rows({{1.0}, {1.0}});
  CHECK_THROWS_WITH_AS((void)encoder_forward(enc, x), "degenerate embedding",
                       std::runtime_error);
}

TEST_CASE("zero upstream gradient gives zero parameter gradient") {
  const EncoderParams enc = make_encoder(4, 6, 3, 2, 9);
  Rng rng(42);
  Mat x(4, 3);
  for (std::size_t i = 0; i < x.size(); ++i) x.data()[i] = rng.normal();
  ForwardTape tape;
  encoder_forward(enc, x, &tape);
  const BackwardResult bw = encoder_backward(enc, tape, Mat(3, 3));
  CHECK(param_norm(bw.grads) == 0.0);
  CHECK(max_abs(bw.grad_input) == 0.0);
}

TEST_CASE("gradient along the output direction is projected out") {
  const EncoderParams enc = make_encoder(4, 6, 3, 2, 10);
  Rng rng(43);
  Mat x(4, 2);
  for (std::size_t i = 0; i < x.size(); ++i) x.data()[i] = rng.normal();
  ForwardTape tape;
  const Mat y = encoder_forward(enc, x, &tape);
  // upstream gradient parallel to the features themselves
  const BackwardResult bw = encoder_backward(enc, tape, y);
  CHECK(param_norm(bw.grads) < 1e-14);
}

TEST_CASE("backward matches finite differences") {
  Rng rng(44);
  for (int layers = 1; layers <= 3; ++layers) {
    EncoderParams enc = make_encoder(4, 5, 3, static_cast<std::size_t>(layers),
                                     100 + static_cast<std::uint64_t>(layers));
    // shift biases so some rectifiers are active and some are not
    for (auto& layer : enc.layers)
      for (auto& b : layer.bias) b = rng.uniform(-0.3, 0.3);

    Mat x(4, 3);
    for (std::size_t i = 0; i < x.size(); ++i) x.data()[i] = rng.normal();
    Mat weights(3, 3);
    for (std::size_t i = 0; i < weights.size(); ++i) weights.data()[i] = rng.normal();

    ForwardTape tape;
    encoder_forward(enc, x, &tape);
    const BackwardResult bw = encoder_backward(enc, tape, weights);

    const auto value = [&]() {
      const Mat y = encoder_forward(enc, x);
      double acc = 0.0;
      for (std::size_t i = 0; i < y.size(); ++i)
        acc += weights.data()[i] * y.data()[i];
      return acc;
    };
    for (std::size_t li = 0; li < enc.layers.size(); ++li) {
      auto& w = enc.layers[li].weight;
      const auto fd_w = xmoco::testing::central_differences(
          {w.data(), w.size()}, value, 1e-6);
      for (std::size_t i = 0; i < w.size(); ++i) {
        const double a = bw.grads.layers[li].weight.data()[i];
        CHECK(std::fabs(a - fd_w[i]) <=
              1e-5 * std::max({std::fabs(a), std::fabs(fd_w[i]), 1e-4}));
      }
      auto& b = enc.layers[li].bias;
      const auto fd_b =
          xmoco::testing::central_differences({b.data(), b.size()}, value, 1e-6);
      for (std::size_t i = 0; i < b.size(); ++i) {
        const double a = bw.grads.layers[li].bias[i];
        CHECK(std::fabs(a - fd_b[i]) <=
              1e-5 * std::max({std::fabs(a), std::fabs(fd_b[i]), 1e-4}));
      }
    }
    // input gradient too
    const auto fd_x =
        xmoco::testing::central_differences({x.data(), x.size()}, value, 1e-6);
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double a = bw.grad_input.data()[i];
      CHECK(std::fabs(a - fd_x[i]) <=
            1e-5 * std::max({std::fabs(a), std::fabs(fd_x[i]), 1e-4}));
    }
  }
}

TEST_CASE("momentum update law") {
  EncoderParams f = make_encoder(3, 4, 2, 2, 11);

  SUBCASE("m = 0 snaps g to f") {
    MomentumPair pair = make_momentum_pair(f, 0.0);
    pair.g.layers[0].weight.at(0, 0) += 5.0;
    momentum_update(pair);
    CHECK(param_max_abs_diff(pair.f, pair.g) == 0.0);
  }
  SUBCASE("m = 1 freezes g") {
    MomentumPair pair = make_momentum_pair(f, 1.0);
    const EncoderParams g_before = pair.g;
    pair.f.layers[0].weight.at(0, 0) += 5.0;
    momentum_update(pair);
    CHECK(param_max_abs_diff(pair.g, g_before) == 0.0);
  }
  SUBCASE("scalar example: g=2, f=4, m=0.5 gives 3") {
    EncoderParams one = make_encoder(1, 1, 1, 1, 0);
    one.layers[0].weight.at(0, 0) = 4.0;
    MomentumPair pair = make_momentum_pair(one, 0.5);
    pair.g.layers[0].weight.at(0, 0) = 2.0;
    momentum_update(pair);
    CHECK(pair.g.layers[0].weight.at(0, 0) == 3.0);
    CHECK(pair.f.layers[0].weight.at(0, 0) == 4.0);
  }
}

TEST_CASE("repeated EMA updates contract geometrically") {
  const EncoderParams f = make_encoder(3, 5, 2, 2, 12);
  MomentumPair pair = make_momentum_pair(f, 0.75);
  // push g away from f
  for (auto& layer : pair.g.layers)
    for (std::size_t i = 0; i < layer.weight.size(); ++i)
      layer.weight.data()[i] += 1.0;
  double prev = param_max_abs_diff(pair.g, pair.f);
  for (int i = 0; i < 6; ++i) {
    momentum_update(pair);
    const double cur = param_max_abs_diff(pair.g, pair.f);
    CHECK(cur == doctest::Approx(0.75 * prev).epsilon(1e-12));
    prev = cur;
  }
}

TEST_CASE("initialization at g = f exactly") {
  const EncoderParams f = make_encoder(5, 6, 4, 3, 13);
  const MomentumPair pair = make_momentum_pair(f, 0.99);
  CHECK(param_max_abs_diff(pair.f, pair.g) == 0.0);
}
