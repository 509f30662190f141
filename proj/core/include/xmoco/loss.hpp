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

#ifndef XMOCO_LOSS_HPP_
#define XMOCO_LOSS_HPP_

#include "xmoco/matrix.hpp"
#include "xmoco/probability.hpp"
#include "xmoco/pseudolabel.hpp"

namespace xmoco {

// Full swapped-label loss with cross-similarity regularization:
//
//   total = CE(ys -> pt) + CE(yt -> ps) + CE(ps# -> pt) + CE(pt# -> ps)
//
// where CE(a -> b) = -(1/N) sum a .* log b, labels supervise the OTHER
// side, and # marks a stop-gradient copy. Gradients are with respect to
// the pre-softmax logits; every target column sums to 1, which is what
// makes the (pred - target)/N form exact.
struct LossReport {
  double total = 0.0;
  double term_label_s_on_pt = 0.0;  // CE(ys -> pt)
  double term_label_t_on_ps = 0.0;  // CE(yt -> ps)
  double term_xsim_s_on_pt = 0.0;   // CE(ps# -> pt)
  double term_xsim_t_on_ps = 0.0;   // CE(pt# -> ps)
  Mat grad_logits_s;                // (K+1) x N
  Mat grad_logits_t;                // (K+1) x N
};

// Training-time loss configuration. `uniform_labels` off replaces the
// transport pseudo-labels with one-hot labels; `xsim_reg` off drops the
// two probability-consistency terms. Both off is classical contrastive
// training.
struct LossSwitches {
  bool uniform_labels = true;
  bool xsim_reg = true;
};

// -(1/N) sum_n sum_k target[k][n] * log pred[k][n]; the target is a
// constant. Throws on shape mismatch and on a nonpositive prediction.
double cross_entropy_term(const Mat& target, const ProbMatrix& pred);

// Symmetric contrastive loss: -(1/N) sum_n (log ps[0][n] + log pt[0][n]).
double classical_loss(const ProbMatrix& ps, const ProbMatrix& pt);

LossReport xmoco_loss(const ProbMatrix& ps, const ProbMatrix& pt,
                      const PseudoLabelMatrix& ys, const PseudoLabelMatrix& yt,
                      bool xsim_reg = true);

}  // namespace xmoco

#endif  // XMOCO_LOSS_HPP_
