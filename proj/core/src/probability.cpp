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

#include "xmoco/probability.hpp"

#include <cmath>
#include <stdexcept>

namespace xmoco {

namespace {

void require_unit_columns(const Mat& m, const char* what) {
  for (std::size_t c = 0; c < m.cols(); ++c) {
    double ss = 0.0;
    for (std::size_t r = 0; r < m.rows(); ++r) ss += m.at(r, c) * m.at(r, c);
    if (std::fabs(std::sqrt(ss) - 1.0) > 1e-6) {
      throw std::invalid_argument(std::string("unnormalized feature in ") + what);
    }
  }
}

}  // namespace

ProbMatrix get_prob(const Mat& queries, const Mat& current_keys, const Mat& bank,
                    double temperature) {
  if (temperature <= 0.0) throw std::invalid_argument("temperature must be > 0");
  if (queries.rows() != current_keys.rows() || queries.cols() != current_keys.cols())
    throw std::invalid_argument("queries/keys shape mismatch");
  if (bank.rows() != queries.rows())
    throw std::invalid_argument("bank feature dimension mismatch");
  require_unit_columns(queries, "queries");
  require_unit_columns(current_keys, "keys");
  require_unit_columns(bank, "bank");

  const std::size_t n = queries.cols();
  const std::size_t k = bank.cols();

  Mat logits(k + 1, n);
  for (std::size_t c = 0; c < n; ++c) {
    double pos = 0.0;
    for (std::size_t r = 0; r < queries.rows(); ++r)
      pos += queries.at(r, c) * current_keys.at(r, c);
    logits.at(0, c) = pos / temperature;
  }
  // negative logits: bank^T * queries, scaled by 1/tau
  for (std::size_t j = 0; j < k; ++j) {
    for (std::size_t c = 0; c < n; ++c) {
      double s = 0.0;
      for (std::size_t r = 0; r < queries.rows(); ++r)
        s += bank.at(r, j) * queries.at(r, c);
      logits.at(j + 1, c) = s / temperature;
    }
  }

  ProbMatrix out;
  out.probs = softmax_columns(logits);
  out.logits = std::move(logits);
  out.temperature = temperature;
  return out;
}

Mat grad_logits_to_queries(const Mat& grad_logits, const Mat& current_keys,
                           const Mat& bank, double temperature) {
  if (temperature <= 0.0) throw std::invalid_argument("temperature must be > 0");
  const std::size_t n = grad_logits.cols();
  const std::size_t k = bank.cols();
  if (grad_logits.rows() != k + 1)
    throw std::invalid_argument("grad_logits rows must be bank cols + 1");
  if (current_keys.cols() != n || current_keys.rows() != bank.rows())
    throw std::invalid_argument("keys shape mismatch");

  const std::size_t d = bank.rows();
  Mat grad_q(d, n);
  for (std::size_t c = 0; c < n; ++c) {
    const double g0 = grad_logits.at(0, c);
    for (std::size_t r = 0; r < d; ++r) grad_q.at(r, c) = current_keys.at(r, c) * g0;
  }
  for (std::size_t j = 0; j < k; ++j) {
    for (std::size_t c = 0; c < n; ++c) {
      const double g = grad_logits.at(j + 1, c);
      for (std::size_t r = 0; r < d; ++r) grad_q.at(r, c) += bank.at(r, j) * g;
    }
  }
  const double inv_tau = 1.0 / temperature;
  grad_q *= inv_tau;
  return grad_q;
}

}  // namespace xmoco
