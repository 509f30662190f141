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
#include <iostream>
#include <limits>
#include <stdexcept>

namespace xmoco {

namespace {

constexpr double kKernelFloor = 1e-300;

void validate_inputs(const ProbMatrix& p, double xi, double lambda) {
  const std::size_t kp1 = p.peers();
  if (kp1 < 2) throw std::invalid_argument("need at least one negative peer");
  if (p.batch() == 0) throw std::invalid_argument("empty matrix");
  if (lambda <= 0.0) throw std::invalid_argument("lambda must be > 0");
  const double lo = 1.0 / static_cast<double>(kp1);
  if (xi < lo - 1e-12 || xi > 1.0 + 1e-12)
    throw std::invalid_argument("xi outside [1/(K+1), 1]");
  for (std::size_t i = 0; i < p.probs.size(); ++i) {
    if (!(p.probs.data()[i] > 0.0))
      throw std::invalid_argument("log-domain violation: nonpositive probability");
  }
  for (double s : col_sums(p.probs)) {
    if (std::fabs(s - 1.0) > 1e-6)
      throw std::invalid_argument("probability matrix is not column-stochastic");
  }
}

// Stripped kernel (p without the positive row, divided by N) raised to
// the given power, floored away from exact zero.
Mat powered_kernel(const ProbMatrix& p, double lambda) {
  const std::size_t k = p.negatives();
  const std::size_t n = p.batch();
  Mat body(k, n);
  const double inv_n = 1.0 / static_cast<double>(n);
  for (std::size_t j = 0; j < k; ++j)
    for (std::size_t c = 0; c < n; ++c)
      body.at(j, c) = std::max(std::pow(p.probs.at(j + 1, c) * inv_n, lambda),
                               kKernelFloor);
  return body;
}

PseudoLabelMatrix assemble(const Mat& body, double xi, double lambda,
                           std::size_t iters) {
  const std::size_t k = body.rows();
  const std::size_t n = body.cols();
  PseudoLabelMatrix out;
  out.y = Mat(k + 1, n);
  out.xi = xi;
  out.lambda = lambda;
  out.iters = iters;
  const double scale = static_cast<double>(n) * (1.0 - xi);
  for (std::size_t c = 0; c < n; ++c) out.y.at(0, c) = xi;
  for (std::size_t j = 0; j < k; ++j) {
    for (std::size_t c = 0; c < n; ++c) {
      const double v = scale * body.at(j, c);
      out.y.at(j + 1, c) = v;
      if (v > xi) out.positivity_violated = true;
    }
  }
  if (out.positivity_violated) {
    std::cerr << "xmoco: warning: a negative pseudo-label entry exceeds xi="
              << xi << "; the relaxed assignment only bounds the positive row "
              << "on average, leaving values as computed\n";
  }
  return out;
}

}  // namespace

PseudoLabelMatrix sinkhorn_labels(const ProbMatrix& p, double xi, double lambda,
                                  std::size_t iters) {
  validate_inputs(p, xi, lambda);
  if (iters < 1) throw std::invalid_argument("iters must be >= 1");

  const std::size_t k = p.negatives();
  const std::size_t n = p.batch();
  Mat body = powered_kernel(p, lambda);
  const double total = total_sum(body);
  body *= 1.0 / total;

  const double row_target = static_cast<double>(k);
  const double col_target = static_cast<double>(n);
  std::vector<double> sums;
  for (std::size_t it = 0; it < iters; ++it) {
    sums = row_sums(body);
    for (std::size_t j = 0; j < k; ++j) {
      const double s = 1.0 / (sums[j] * row_target);
      for (std::size_t c = 0; c < n; ++c) body.at(j, c) *= s;
    }
    sums = col_sums(body);
    for (std::size_t c = 0; c < n; ++c) {
      const double s = 1.0 / (sums[c] * col_target);
      for (std::size_t j = 0; j < k; ++j) body.at(j, c) *= s;
    }
  }
  return assemble(body, xi, lambda, iters);
}

double transport_objective(const Mat& y_hat, const ProbMatrix& p, double lambda) {
  if (y_hat.rows() != p.negatives() || y_hat.cols() != p.batch())
    throw std::invalid_argument("body shape mismatch in transport_objective");
  const double inv_n = 1.0 / static_cast<double>(p.batch());
  double cost = 0.0;
  double neg_entropy = 0.0;
  for (std::size_t j = 0; j < y_hat.rows(); ++j) {
    for (std::size_t c = 0; c < y_hat.cols(); ++c) {
      const double y = y_hat.at(j, c);
      if (y < 0.0) throw std::invalid_argument("negative entry in transport plan");
      const double phat = p.probs.at(j + 1, c) * inv_n;
      cost += y * -std::log(phat);
      if (y > 0.0) neg_entropy += y * std::log(y);
    }
  }
  return cost + neg_entropy / lambda;
}

namespace {

// Golden-section refinement of a unimodal scalar function.
double golden_minimize(double lo, double hi, const auto& fn) {
  const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo, b = hi;
  double c = b - gr * (b - a);
  double d = a + gr * (b - a);
  double fc = fn(c), fd = fn(d);
  while (b - a > 1e-14) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - gr * (b - a);
      fc = fn(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + gr * (b - a);
      fd = fn(d);
    }
  }
  return 0.5 * (a + b);
}

PseudoLabelMatrix oracle_1d(const ProbMatrix& p, double xi, double lambda) {
  // 2x2 body with row sums 1/2 and column sums 1/2: one free parameter.
  const auto objective_at = [&](double t) {
    Mat body = Mat::from_rows({{t, 0.5 - t}, {0.5 - t, t}});
    return transport_objective(body, p, lambda);
  };
  // Coarse grid to bracket, then golden section. The entropic objective
  // is strictly convex on the segment, so any bracketing works.
  const int grid = 1024;
  double best_t = 0.0, best_f = std::numeric_limits<double>::infinity();
  for (int i = 0; i <= grid; ++i) {
    const double t = 0.5 * static_cast<double>(i) / grid;
    const double f = objective_at(t);
    if (f < best_f) {
      best_f = f;
      best_t = t;
    }
  }
  const double lo = std::max(0.0, best_t - 1.0 / grid);
  const double hi = std::min(0.5, best_t + 1.0 / grid);
  const double t = golden_minimize(lo, hi, objective_at);
  Mat body = Mat::from_rows({{t, 0.5 - t}, {0.5 - t, t}});
  return assemble(body, xi, lambda, 0);
}

PseudoLabelMatrix oracle_dual_sinkhorn(const ProbMatrix& p, double xi,
                                       double lambda) {
  const std::size_t k = p.negatives();
  const std::size_t n = p.batch();
  const Mat kernel = powered_kernel(p, lambda);
  const double r = 1.0 / static_cast<double>(k);
  const double c = 1.0 / static_cast<double>(n);

  std::vector<double> u(k, 1.0), v(n, 1.0);
  constexpr double kTol = 1e-12;
  constexpr std::size_t kMaxSweeps = 1000000;
  std::size_t sweeps = 0;
  for (; sweeps < kMaxSweeps; ++sweeps) {
    for (std::size_t j = 0; j < k; ++j) {
      double s = 0.0;
      for (std::size_t cc = 0; cc < n; ++cc) s += kernel.at(j, cc) * v[cc];
      u[j] = r / s;
    }
    for (std::size_t cc = 0; cc < n; ++cc) {
      double s = 0.0;
      for (std::size_t j = 0; j < k; ++j) s += kernel.at(j, cc) * u[j];
      v[cc] = c / s;
    }
    double worst = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      double s = 0.0;
      for (std::size_t cc = 0; cc < n; ++cc) s += u[j] * kernel.at(j, cc) * v[cc];
      worst = std::max(worst, std::fabs(s - r));
    }
    for (std::size_t cc = 0; cc < n; ++cc) {
      double s = 0.0;
      for (std::size_t j = 0; j < k; ++j) s += u[j] * kernel.at(j, cc) * v[cc];
      worst = std::max(worst, std::fabs(s - c));
    }
    if (worst < kTol) break;
  }
  if (sweeps == kMaxSweeps)
    throw std::runtime_error("oracle dual scaling did not reach tolerance");

  Mat body(k, n);
  for (std::size_t j = 0; j < k; ++j)
    for (std::size_t cc = 0; cc < n; ++cc)
      body.at(j, cc) = u[j] * kernel.at(j, cc) * v[cc];
  return assemble(body, xi, lambda, sweeps + 1);
}

}  // namespace

PseudoLabelMatrix oracle_labels(const ProbMatrix& p, double xi, double lambda) {
  validate_inputs(p, xi, lambda);
  const std::size_t k = p.negatives();
  const std::size_t n = p.batch();

  if (k == 1) {
    // With a single negative row both marginal sets intersect in a point.
    Mat body(1, n);
    for (std::size_t c = 0; c < n; ++c) body.at(0, c) = 1.0 / static_cast<double>(n);
    return assemble(body, xi, lambda, 0);
  }
  if (k == 2 && n == 2) return oracle_1d(p, xi, lambda);
  if (k <= 2 || k * n <= 16) return oracle_dual_sinkhorn(p, xi, lambda);
  throw std::invalid_argument("oracle scale exceeded");
}

PseudoLabelMatrix one_hot_labels(std::size_t k_plus_one, std::size_t n) {
  if (k_plus_one < 1 || n < 1) throw std::invalid_argument("dims must be >= 1");
  PseudoLabelMatrix out;
  out.y = Mat(k_plus_one, n);
  out.xi = 1.0;
  for (std::size_t c = 0; c < n; ++c) out.y.at(0, c) = 1.0;
  return out;
}

}  // namespace xmoco
