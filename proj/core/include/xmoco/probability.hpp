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

#ifndef XMOCO_PROBABILITY_HPP_
#define XMOCO_PROBABILITY_HPP_

#include "xmoco/matrix.hpp"

namespace xmoco {

// Column-stochastic similarity probabilities over K+1 peers for a batch
// of N queries. Row 0 is the positive peer; rows 1..K follow the bank's
// column order. Logits (similarities already scaled by 1/tau) are kept
// because the loss gradients are taken with respect to them.
struct ProbMatrix {
  Mat probs;    // (K+1) x N
  Mat logits;   // (K+1) x N
  double temperature = 0.0;

  std::size_t peers() const { return probs.rows(); }     // K + 1
  std::size_t negatives() const { return probs.rows() - 1; }
  std::size_t batch() const { return probs.cols(); }
};

// Builds the probability matrix from unit-norm features. Column n gets
// the positive logit S(q_n, k_n)/tau in row 0 and S(q_n, bank_j)/tau in
// row j+1. Keys and bank columns are constants: no gradient flows back
// into them. Throws "unnormalized feature" if any input column deviates
// from unit norm by more than 1e-6, and on tau <= 0.
ProbMatrix get_prob(const Mat& queries, const Mat& current_keys, const Mat& bank,
                    double temperature);

// Chain rule from logits back to the query features:
//   grad_q_n = (1/tau) * (k_n * g[0][n] + sum_j bank_j * g[j+1][n]).
Mat grad_logits_to_queries(const Mat& grad_logits, const Mat& current_keys,
                           const Mat& bank, double temperature);

}  // namespace xmoco

#endif  // XMOCO_PROBABILITY_HPP_
