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

#include "xmoco/eval.hpp"

#include "doctest.h"
#include "oracles.hpp"
#include "xmoco/data.hpp"
#include "xmoco/rng.hpp"

using namespace xmoco;
using xmoco::testing::brute_knn_classify;
using xmoco::testing::random_rotation;
using xmoco::testing::random_unit_columns;

TEST_CASE("self-evaluation with k=1 is perfect") {
  Rng rng(71);
  const Mat feats = random_unit_columns(4, 12, rng);
  std::vector<int> labels(12);
  for (std::size_t i = 0; i < 12; ++i) labels[i] = static_cast<int>(i % 3);
  CHECK(knn_eval(feats, labels, feats, labels, 1) == 1.0);
}

TEST_CASE("orthogonal singleton classes") {
  const Mat train = Mat::from_rows({{1.0, 0.0}, {0.0, 1.0}});
  const std::vector<int> labels{0, 1};
  const Mat test = Mat::from_rows({{1.0}, {0.0}});
  CHECK(knn_eval(train, labels, test, {0}, 1) == 1.0);
  CHECK(knn_eval(train, labels, test, {1}, 1) == 0.0);
}

TEST_CASE("knn matches the exhaustive reference on random instances") {
  Rng rng(72);
  const Mat train = random_unit_columns(6, 50, rng);
  std::vector<int> labels(50);
  for (auto& l : labels) l = static_cast<int>(rng.below(4));
  const Mat test = random_unit_columns(6, 30, rng);
  for (std::size_t k : {1, 3, 5, 7}) {
    std::size_t agree_lib = 0;
    std::vector<int> expected(test.cols());
    for (std::size_t j = 0; j < test.cols(); ++j)
      expected[j] = brute_knn_classify(train, labels, test.column(j), k);
    // compare library accuracy against reference predictions
    std::vector<int> fake_truth = expected;
    const double acc = knn_eval(train, labels, test, fake_truth, k);
    CHECK(acc == 1.0);
    (void)agree_lib;
  }
}

TEST_CASE("knn is invariant under a common rotation") {
  Rng rng(73);
  const Mat train = random_unit_columns(5, 40, rng);
  const Mat test = random_unit_columns(5, 20, rng);
  std::vector<int> tr_labels(40), te_labels(20);
  for (auto& l : tr_labels) l = static_cast<int>(rng.below(3));
  for (auto& l : te_labels) l = static_cast<int>(rng.below(3));
  const double base = knn_eval(train, tr_labels, test, te_labels, 5);
  const Mat rot = random_rotation(5, rng);
  const double rotated =
      knn_eval(matmul(rot, train), tr_labels, matmul(rot, test), te_labels, 5);
  CHECK(base == rotated);
}

TEST_CASE("knn validates arguments") {
  Rng rng(74);
  const Mat feats = random_unit_columns(3, 5, rng);
  const std::vector<int> labels{0, 1, 0, 1, 0};
  CHECK_THROWS_AS((void)knn_eval(feats, labels, feats, labels, 0),
                  std::invalid_argument);
  CHECK_THROWS_AS((void)knn_eval(feats, labels, feats, labels, 6),
                  std::invalid_argument);
  CHECK_THROWS_AS((void)knn_eval(Mat(3, 0), {}, feats, labels, 1),
                  std::invalid_argument);
}

TEST_CASE("linear probe separates well-separated blobs") {
  const Dataset ds = make_blobs(3, 60, 8, 10.0, 31);
  const Mat feats = l2_normalize_columns(ds.samples);
  // split: first 2/3 train, rest test (blocks are class-ordered, so
  // stride the split)
  Mat tr(feats.rows(), 120), te(feats.rows(), 60);
  std::vector<int> trl(120), tel(60);
  std::size_t a = 0, b = 0;
  for (std::size_t i = 0; i < 180; ++i) {
    if (i % 3 != 2) {
      tr.set_column(a, feats.column(i));
      trl[a++] = ds.labels[i];
    } else {
      te.set_column(b, feats.column(i));
      tel[b++] = ds.labels[i];
    }
  }
  CHECK(linear_probe(tr, trl, te, tel, 400, 0.5) >= 0.99);

  SUBCASE("shuffled labels collapse to chance") {
    Rng rng(75);
    std::vector<int> shuffled = trl;
    for (std::size_t i = shuffled.size(); i > 1; --i)
      std::swap(shuffled[i - 1], shuffled[rng.below(i)]);
    std::vector<int> te_shuffled = tel;
    for (std::size_t i = te_shuffled.size(); i > 1; --i)
      std::swap(te_shuffled[i - 1], te_shuffled[rng.below(i)]);
    const double acc = linear_probe(tr, shuffled, te, te_shuffled, 300, 0.5);
    CHECK(acc >= 1.0 / 3.0 - 0.1);
    CHECK(acc <= 1.0 / 3.0 + 0.1);
  }

  SUBCASE("zero steps stays at chance") {
    const double acc = linear_probe(tr, trl, te, tel, 0, 0.5);
    // untrained head predicts class 0 everywhere: balanced classes give 1/3
    CHECK(acc == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
  }
}

TEST_CASE("probe training loss is non-increasing at small lr") {
  const Dataset ds = make_blobs(3, 40, 6, 8.0, 32);
  const Mat feats = l2_normalize_columns(ds.samples);
  const auto losses = linear_probe_losses(feats, ds.labels, 200, 1e-2);
  for (std::size_t i = 1; i < losses.size(); ++i)
    CHECK(losses[i] <= losses[i - 1] + 1e-12);
}

TEST_CASE("single-class probe input is rejected") {
  Rng rng(76);
  const Mat feats = random_unit_columns(3, 6, rng);
  const std::vector<int> labels(6, 0);
  CHECK_THROWS_AS((void)linear_probe(feats, labels, feats, labels, 10, 0.1),
                  std::invalid_argument);
}
