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

#include "xmoco/loss.hpp"

#include <cmath>
#include <stdexcept>

namespace xmoco {

namespace {

void require_stochastic_labels(const Mat& y) {
  for (double s : col_sums(y))
    if (std::fabs(s - 1.0) > 1e-6)
      throw std::invalid_argument("label column sums deviate from 1");
}

// 0 * log 0 counts as 0, so exactly one-hot predictions (a softmax output
// can underflow to one) score a clean zero against matching targets. A
// zero prediction under positive target mass is a real error.
double ce(const Mat& target, const Mat& pred) {
  double acc = 0.0;
  for (std::size_t c = 0; c < target.cols(); ++c) {
    for (std::size_t r = 0; r < target.rows(); ++r) {
      const double t = target.at(r, c);
      if (t == 0.0) continue;
      const double p = pred.at(r, c);
      if (!(p > 0.0))
        throw std::invalid_argument("nonpositive prediction entry");
      acc += t * std::log(p);
    }
  }
  return -acc / static_cast<double>(target.cols());
}

// grad = (pred - target)/N, plus (pred - other#)/N when the consistency
// terms are on. Summed per entry before the single division so the
// xi=1 reduction is bit-exact against the classical path.
Mat grad_logits(const Mat& pred, const Mat& label, const Mat* other,
                std::size_t n) {
  Mat g(pred.rows(), pred.cols());
  const double inv_n = 1.0 / static_cast<double>(n);
  for (std::size_t i = 0; i < pred.size(); ++i) {
    double acc = pred.data()[i] - label.data()[i];
    if (other != nullptr) acc += pred.data()[i] - other->data()[i];
    g.data()[i] = acc * inv_n;
  }
  return g;
}

}  // namespace

double cross_entropy_term(const Mat& target, const ProbMatrix& pred) {
  if (!target.same_shape(pred.probs))
    throw std::invalid_argument("shape mismatch in cross_entropy_term");
  for (std::size_t i = 0; i < target.size(); ++i)
    if (target.data()[i] < 0.0)
      throw std::invalid_argument("negative target entry");
  return ce(target, pred.probs);
}

double classical_loss(const ProbMatrix& ps, const ProbMatrix& pt) {
  if (!ps.probs.same_shape(pt.probs))
    throw std::invalid_argument("shape mismatch in classical_loss");
  const std::size_t n = ps.batch();
  double acc = 0.0;
  for (std::size_t c = 0; c < n; ++c) {
    if (!(ps.probs.at(0, c) > 0.0) || !(pt.probs.at(0, c) > 0.0))
      throw std::invalid_argument("nonpositive prediction entry");
    acc += std::log(ps.probs.at(0, c)) + std::log(pt.probs.at(0, c));
  }
  return -acc / static_cast<double>(n);
}

LossReport xmoco_loss(const ProbMatrix& ps, const ProbMatrix& pt,
                      const PseudoLabelMatrix& ys, const PseudoLabelMatrix& yt,
                      bool xsim_reg) {
  if (!ps.probs.same_shape(pt.probs) || !ps.probs.same_shape(ys.y) ||
      !ps.probs.same_shape(yt.y))
    throw std::invalid_argument("shape mismatch in xmoco_loss");
  require_stochastic_labels(ys.y);
  require_stochastic_labels(yt.y);

  const std::size_t n = ps.batch();
  LossReport report;
  report.term_label_s_on_pt = ce(ys.y, pt.probs);
  report.term_label_t_on_ps = ce(yt.y, ps.probs);
  if (xsim_reg) {
    report.term_xsim_s_on_pt = ce(ps.probs, pt.probs);
    report.term_xsim_t_on_ps = ce(pt.probs, ps.probs);
  }
  report.total = report.term_label_s_on_pt + report.term_label_t_on_ps +
                 report.term_xsim_s_on_pt + report.term_xsim_t_on_ps;

  const Mat* pt_const = xsim_reg ? &pt.probs : nullptr;
  const Mat* ps_const = xsim_reg ? &ps.probs : nullptr;
  report.grad_logits_s = grad_logits(ps.probs, yt.y, pt_const, n);
  report.grad_logits_t = grad_logits(pt.probs, ys.y, ps_const, n);
  return report;
}

}  // namespace xmoco
