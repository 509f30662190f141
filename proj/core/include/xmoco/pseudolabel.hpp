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

#ifndef XMOCO_PSEUDOLABEL_HPP_
#define XMOCO_PSEUDOLABEL_HPP_

#include <cstddef>

#include "xmoco/matrix.hpp"
#include "xmoco/probability.hpp"

namespace xmoco {

// Soft pseudo-label matrix over K+1 peers for N samples. Row 0 is pinned
// at xi; the negative body is the entropically regularized transport plan
// scaled by N(1-xi). Columns sum to 1.
struct PseudoLabelMatrix {
  Mat y;                 // (K+1) x N
  double xi = 1.0;
  double lambda = 0.0;
  std::size_t iters = 0;
  // True when some assembled negative entry exceeds xi. The relaxation
  // guarantees the positive-row dominance only on average, so this is
  // reported (and printed to stderr) rather than clamped.
  bool positivity_violated = false;
};

// Truncated Sinkhorn-Knopp assignment. Strips the positive row of p,
// divides by N, raises entrywise to power lambda, normalizes by the total
// sum, then sweeps `iters` times (rows to 1/K, then columns to 1/N) and
// assembles [xi ; N(1-xi) * body]. The final column pass makes column
// sums of the result exactly 1. Entries of the powered kernel are floored
// at 1e-300 so a fully underflowed row cannot collapse the scaling.
PseudoLabelMatrix sinkhorn_labels(const ProbMatrix& p, double xi, double lambda,
                                  std::size_t iters);

// Independent check of the transport solution on tiny instances:
//   K=1           -> closed form (marginals force every body entry to 1/N)
//   K=2, N=2      -> 1-D minimization over the polytope's free parameter
//   K*N<=16, K<=2 -> dual-vector Sinkhorn run to marginal residual <1e-12
// Throws "oracle scale exceeded" beyond these sizes.
PseudoLabelMatrix oracle_labels(const ProbMatrix& p, double xi, double lambda);

// Entropic transport objective <Yhat, -log Phat> - (1/lambda) H(Yhat)
// evaluated on a body matrix (K x N) against the stripped kernel of p.
double transport_objective(const Mat& y_hat, const ProbMatrix& p, double lambda);

// Classical one-hot labels: row 0 all ones. Equals sinkhorn_labels in the
// xi = 1 limit.
PseudoLabelMatrix one_hot_labels(std::size_t k_plus_one, std::size_t n);

}  // namespace xmoco

#endif  // XMOCO_PSEUDOLABEL_HPP_
