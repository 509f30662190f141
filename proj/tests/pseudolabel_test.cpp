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

#include "xmoco/pseudolabel.hpp"

#include <cmath>

#include "doctest.h"
#include "oracles.hpp"
#include "xmoco/rng.hpp"

using namespace xmoco;
using xmoco::testing::random_prob_columns;

namespace {

ProbMatrix wrap(Mat probs) {
  ProbMatrix p;
  p.probs = std::move(probs);
  p.temperature = 1.0;
  return p;
}

Mat body_of(const PseudoLabelMatrix& labels) {
  const double scale =
      static_cast<double>(labels.y.cols()) * (1.0 - labels.xi);
  Mat body(labels.y.rows() - 1, labels.y.cols());
  for (std::size_t r = 0; r < body.rows(); ++r)
    for (std::size_t c = 0; c < body.cols(); ++c)
      body.at(r, c) = labels.y.at(r + 1, c) / scale;
  return body;
}

double kl(const Mat& a, const Mat& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double x = std::max(a.data()[i], 1e-300);
    const double y = std::max(b.data()[i], 1e-300);
    s += a.data()[i] * std::log(x / y);
  }
  return s;
}

}  // namespace

TEST_CASE("K=1 is forced by the marginals") {
  Rng rng(21);
  const ProbMatrix p = wrap(random_prob_columns(2, 5, rng));
  const PseudoLabelMatrix labels = sinkhorn_labels(p, 0.7, 2.0, 3);
  for (std::size_t c = 0; c < 5; ++c) {
    CHECK(labels.y.at(0, c) == 0.7);
    CHECK(labels.y.at(1, c) == doctest::Approx(0.3).epsilon(1e-12));
  }
}

TEST_CASE("uniform kernel is a fixed point") {
  Mat probs(4, 3);
  for (std::size_t c = 0; c < 3; ++c) {
    probs.at(0, c) = 0.4;
    for (std::size_t r = 1; r < 4; ++r) probs.at(r, c) = 0.2;
  }
  const PseudoLabelMatrix labels = sinkhorn_labels(wrap(probs), 0.9, 2.0, 7);
  for (std::size_t c = 0; c < 3; ++c)
    for (std::size_t r = 1; r < 4; ++r)
      CHECK(labels.y.at(r, c) ==
            doctest::Approx((1.0 - 0.9) / 3.0).epsilon(1e-12));
}

TEST_CASE("2x2 instance matches the closed form and the 1-D oracle") {
  // Kernel ratios are powers of 4, so the symmetric solution has the
  // closed form diag = 8/17, off-diag = 1/34 before assembly.
  const Mat probs = Mat::from_rows({{0.5, 0.5}, {0.4, 0.1}, {0.1, 0.4}});
  const ProbMatrix p = wrap(probs);
  const PseudoLabelMatrix sk = sinkhorn_labels(p, 0.9, 2.0, 200);
  const PseudoLabelMatrix oracle = oracle_labels(p, 0.9, 2.0);

  const double diag = 0.09411764705882353;   // 1.6/17
  const double off = 0.0058823529411764705;  // 0.2/34
  for (std::size_t c = 0; c < 2; ++c) CHECK(sk.y.at(0, c) == 0.9);
  CHECK(sk.y.at(1, 0) == doctest::Approx(diag).epsilon(1e-9));
  CHECK(sk.y.at(2, 0) == doctest::Approx(off).epsilon(1e-7));
  CHECK(sk.y.at(1, 1) == doctest::Approx(off).epsilon(1e-7));
  CHECK(sk.y.at(2, 1) == doctest::Approx(diag).epsilon(1e-9));
  CHECK(max_abs_diff(sk.y, oracle.y) < 1e-6);
}

TEST_CASE("oracle agrees with converged sinkhorn on random tiny instances") {
  Rng rng(22);
  SUBCASE("2x3 body via the dual-scaling oracle") {
    for (int trial = 0; trial < 10; ++trial) {
      const ProbMatrix p = wrap(random_prob_columns(3, 3, rng, 0.1));
      const PseudoLabelMatrix sk = sinkhorn_labels(p, 0.8, 2.0, 500);
      const PseudoLabelMatrix oracle = oracle_labels(p, 0.8, 2.0);
      CHECK(max_abs_diff(sk.y, oracle.y) < 1e-6);
    }
  }
  SUBCASE("4x4 body via the dual-scaling oracle") {
    for (int trial = 0; trial < 10; ++trial) {
      const ProbMatrix p = wrap(random_prob_columns(5, 4, rng, 0.1));
      const PseudoLabelMatrix sk = sinkhorn_labels(p, 0.9, 2.0, 500);
      const PseudoLabelMatrix oracle = oracle_labels(p, 0.9, 2.0);
      CHECK(max_abs_diff(sk.y, oracle.y) < 1e-6);
    }
  }
}

TEST_CASE("oracle rejects large instances") {
  Rng rng(23);
  const ProbMatrix p = wrap(random_prob_columns(6, 5, rng));
  CHECK_THROWS_WITH_AS((void)oracle_labels(p, 0.9, 2.0), "oracle scale exceeded",
                       std::invalid_argument);
}

TEST_CASE("marginal residuals after 50 sweeps on 8x8 instances") {
  Rng rng(24);
  for (int trial = 0; trial < 20; ++trial) {
    const ProbMatrix p = wrap(random_prob_columns(9, 8, rng));
    const PseudoLabelMatrix labels = sinkhorn_labels(p, 0.9, 2.0, 50);
    const Mat body = body_of(labels);
    for (double s : row_sums(body))
      CHECK(std::fabs(s - 1.0 / 8.0) < 1e-6);
    for (double s : col_sums(body))
      CHECK(std::fabs(s - 1.0 / 8.0) < 1e-12);
    for (double s : col_sums(labels.y))
      CHECK(std::fabs(s - 1.0) < 1e-12);
  }
}

TEST_CASE("permutation equivariance in columns and negative rows") {
  Rng rng(25);
  const ProbMatrix p = wrap(random_prob_columns(5, 4, rng));
  const PseudoLabelMatrix base = sinkhorn_labels(p, 0.85, 2.0, 40);

  const auto cperm = Rng(1).permutation(4);
  Mat shuffled_cols(5, 4);
  for (std::size_t c = 0; c < 4; ++c)
    shuffled_cols.set_column(c, p.probs.column(cperm[c]));
  const PseudoLabelMatrix by_cols = sinkhorn_labels(wrap(shuffled_cols), 0.85, 2.0, 40);
  for (std::size_t c = 0; c < 4; ++c)
    for (std::size_t r = 0; r < 5; ++r)
      CHECK(by_cols.y.at(r, c) == doctest::Approx(base.y.at(r, cperm[c])).epsilon(1e-12));

  const auto rperm = Rng(2).permutation(4);
  Mat shuffled_rows(5, 4);
  for (std::size_t c = 0; c < 4; ++c) {
    shuffled_rows.at(0, c) = p.probs.at(0, c);
    for (std::size_t r = 0; r < 4; ++r)
      shuffled_rows.at(r + 1, c) = p.probs.at(rperm[r] + 1, c);
  }
  const PseudoLabelMatrix by_rows = sinkhorn_labels(wrap(shuffled_rows), 0.85, 2.0, 40);
  for (std::size_t c = 0; c < 4; ++c)
    for (std::size_t r = 0; r < 4; ++r)
      CHECK(by_rows.y.at(r + 1, c) ==
            doctest::Approx(base.y.at(rperm[r] + 1, c)).epsilon(1e-12));
}

// The truncated solver starts from the normalized kernel, which is the
// unconstrained minimizer of the entropic objective over mass-1 plans, so
// the objective itself cannot decrease below that starting value and is
// not monotone along the sweeps. What does decrease monotonically is the
// KL divergence from the converged plan to the iterate, and the
// row-marginal residual.
TEST_CASE("sinkhorn sweeps contract toward the solution") {
  Rng rng(26);
  for (int trial = 0; trial < 5; ++trial) {
    const ProbMatrix p = wrap(random_prob_columns(9, 8, rng));
    const Mat star = body_of(sinkhorn_labels(p, 0.9, 2.0, 5000));

    // objective at the normalized kernel, the unconstrained floor
    Mat kernel(8, 8);
    for (std::size_t r = 0; r < 8; ++r)
      for (std::size_t c = 0; c < 8; ++c)
        kernel.at(r, c) = std::pow(p.probs.at(r + 1, c) / 8.0, 2.0);
    kernel *= 1.0 / total_sum(kernel);
    const double floor_obj = transport_objective(kernel, p, 2.0);

    double prev_kl = std::numeric_limits<double>::infinity();
    double prev_res = std::numeric_limits<double>::infinity();
    for (std::size_t iters = 1; iters <= 30; ++iters) {
      const Mat body = body_of(sinkhorn_labels(p, 0.9, 2.0, iters));
      const double div = kl(star, body);
      CHECK(div <= prev_kl + 1e-10);
      prev_kl = div;
      double res = 0.0;
      for (double s : row_sums(body)) res = std::max(res, std::fabs(s - 1.0 / 8.0));
      CHECK(res <= prev_res + 1e-12);
      prev_res = res;
      CHECK(transport_objective(body, p, 2.0) >= floor_obj - 1e-12);
    }
  }
}

TEST_CASE("converged plan beats random feasible points") {
  Rng rng(27);
  const ProbMatrix p = wrap(random_prob_columns(4, 3, rng, 0.1));
  const PseudoLabelMatrix solved = sinkhorn_labels(p, 0.9, 2.0, 2000);
  const double best = transport_objective(body_of(solved), p, 2.0);
  for (int i = 0; i < 100; ++i) {
    // Random feasible point: scale a random positive matrix to the
    // marginals with a long independent scaling loop.
    Mat plan(3, 3);
    for (std::size_t k = 0; k < plan.size(); ++k)
      plan.data()[k] = rng.uniform(0.05, 1.0);
    for (int sweep = 0; sweep < 4000; ++sweep) {
      auto rs = row_sums(plan);
      for (std::size_t r = 0; r < 3; ++r)
        for (std::size_t c = 0; c < 3; ++c)
          plan.at(r, c) *= (1.0 / 3.0) / rs[r];
      auto cs = col_sums(plan);
      for (std::size_t c = 0; c < 3; ++c)
        for (std::size_t r = 0; r < 3; ++r)
          plan.at(r, c) *= (1.0 / 3.0) / cs[c];
    }
    CHECK(transport_objective(plan, p, 2.0) >= best - 1e-9);
  }
}

TEST_CASE("xi=1 degenerates to one-hot labels exactly") {
  Rng rng(28);
  const ProbMatrix p = wrap(random_prob_columns(5, 3, rng));
  const PseudoLabelMatrix sk = sinkhorn_labels(p, 1.0, 2.0, 3);
  const PseudoLabelMatrix oh = one_hot_labels(5, 3);
  CHECK(max_abs_diff(sk.y, oh.y) == 0.0);
  for (double s : col_sums(oh.y)) CHECK(s == 1.0);
}

TEST_CASE("one_hot_labels shape example") {
  const PseudoLabelMatrix oh = one_hot_labels(3, 2);
  CHECK(oh.y == Mat::from_rows({{1.0, 1.0}, {0.0, 0.0}, {0.0, 0.0}}));
}

TEST_CASE("input validation") {
  Rng rng(29);
  const ProbMatrix p = wrap(random_prob_columns(3, 2, rng));
  CHECK_THROWS_AS((void)sinkhorn_labels(p, 0.2, 2.0, 3), std::invalid_argument);
  CHECK_THROWS_AS((void)sinkhorn_labels(p, 1.2, 2.0, 3), std::invalid_argument);
  CHECK_THROWS_AS((void)sinkhorn_labels(p, 0.9, -1.0, 3), std::invalid_argument);
  CHECK_THROWS_AS((void)sinkhorn_labels(p, 0.9, 2.0, 0), std::invalid_argument);

  ProbMatrix bad = p;
  bad.probs.at(1, 0) = 0.0;
  bad.probs.at(0, 0) += p.probs.at(1, 0);
  CHECK_THROWS_WITH_AS((void)sinkhorn_labels(bad, 0.9, 2.0, 3),
                       "log-domain violation: nonpositive probability",
                       std::invalid_argument);
}

TEST_CASE("positive-row dominance violations are flagged, not clamped") {
  // Peaked 2x2 kernel with xi = 0.4: the diagonal body entries scale to
  // about 0.6 > xi.
  const Mat probs = Mat::from_rows({{0.2, 0.2}, {0.79, 0.01}, {0.01, 0.79}});
  const PseudoLabelMatrix labels = sinkhorn_labels(wrap(probs), 0.4, 2.0, 300);
  CHECK(labels.positivity_violated);
  double max_neg = 0.0;
  for (std::size_t c = 0; c < 2; ++c)
    for (std::size_t r = 1; r < 3; ++r)
      max_neg = std::max(max_neg, labels.y.at(r, c));
  CHECK(max_neg > 0.4);  // left as computed
  for (double s : col_sums(labels.y))
    CHECK(s == doctest::Approx(1.0).epsilon(1e-12));
}
