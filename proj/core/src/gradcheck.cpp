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

#include "xmoco/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "xmoco/encoder.hpp"
#include "xmoco/loss.hpp"
#include "xmoco/probability.hpp"
#include "xmoco/pseudolabel.hpp"
#include "xmoco/rng.hpp"

namespace xmoco {

namespace {

Mat random_unit_features(std::size_t d, std::size_t n, Rng& rng) {
  Mat m(d, n);
  for (std::size_t i = 0; i < m.size(); ++i) m.data()[i] = rng.normal();
  return l2_normalize_columns(m);
}

double norm_rel_error(const Mat& a, const Mat& b) {
  const double scale = std::max({max_abs(a), max_abs(b), 1e-12});
  return max_abs_diff(a, b) / scale;
}

struct Instance {
  std::size_t k, n, d;
  double tau, xi, lambda;
  bool xsim;
};

Instance make_instance(std::size_t index, Rng& rng) {
  Instance inst;
  inst.k = 1 + index % 6;
  inst.n = 1 + index % 4;
  inst.d = 3 + index % 3;
  inst.tau = rng.uniform(0.1, 1.0);
  // xi >= 1/2 keeps every assembled negative entry at most 1-xi <= xi,
  // so instances stay clear of the dominance diagnostic.
  inst.xi = rng.uniform(0.5, 0.99);
  inst.lambda = 2.0;
  inst.xsim = (index % 3) != 2;  // exercise both switch settings
  return inst;
}

// Loss evaluated as the optimizer sees it: predictions recomputed from
// logits, every target held constant.
double loss_given_logits(const Mat& logits_s, const Mat& logits_t, const Mat& ys,
                         const Mat& yt, const Mat& ps_const, const Mat& pt_const,
                         bool xsim) {
  const Mat ps = softmax_columns(logits_s);
  const Mat pt = softmax_columns(logits_t);
  const std::size_t n = ps.cols();
  double acc = 0.0;
  for (std::size_t c = 0; c < n; ++c) {
    for (std::size_t r = 0; r < ps.rows(); ++r) {
      acc -= ys.at(r, c) * std::log(pt.at(r, c));
      acc -= yt.at(r, c) * std::log(ps.at(r, c));
      if (xsim) {
        acc -= ps_const.at(r, c) * std::log(pt.at(r, c));
        acc -= pt_const.at(r, c) * std::log(ps.at(r, c));
      }
    }
  }
  return acc / static_cast<double>(n);
}

double loss_suite_instance(const Instance& inst, Rng& rng,
                           const GradCheckOptions& options) {
  const Mat qs = random_unit_features(inst.d, inst.n, rng);
  const Mat qt = random_unit_features(inst.d, inst.n, rng);
  const Mat ks = random_unit_features(inst.d, inst.n, rng);
  const Mat kt = random_unit_features(inst.d, inst.n, rng);
  const Mat bank_s = random_unit_features(inst.d, inst.k, rng);
  const Mat bank_t = random_unit_features(inst.d, inst.k, rng);

  const ProbMatrix ps = get_prob(qs, kt, bank_t, inst.tau);
  const ProbMatrix pt = get_prob(qt, ks, bank_s, inst.tau);
  const PseudoLabelMatrix ys = sinkhorn_labels(ps, inst.xi, inst.lambda, 3);
  const PseudoLabelMatrix yt = sinkhorn_labels(pt, inst.xi, inst.lambda, 3);

  LossReport report = xmoco_loss(ps, pt, ys, yt, inst.xsim);
  if (options.mutate_grads)
    options.mutate_grads(report.grad_logits_s, report.grad_logits_t);

  const double h = options.fd_step;
  Mat fd_s(ps.logits.rows(), ps.logits.cols());
  Mat fd_t(fd_s.rows(), fd_s.cols());
  Mat logits_s = ps.logits;
  Mat logits_t = pt.logits;
  for (std::size_t i = 0; i < logits_s.size(); ++i) {
    const double keep = logits_s.data()[i];
    logits_s.data()[i] = keep + h;
    const double up = loss_given_logits(logits_s, logits_t, ys.y, yt.y, ps.probs,
                                        pt.probs, inst.xsim);
    logits_s.data()[i] = keep - h;
    const double dn = loss_given_logits(logits_s, logits_t, ys.y, yt.y, ps.probs,
                                        pt.probs, inst.xsim);
    logits_s.data()[i] = keep;
    fd_s.data()[i] = (up - dn) / (2.0 * h);
  }
  for (std::size_t i = 0; i < logits_t.size(); ++i) {
    const double keep = logits_t.data()[i];
    logits_t.data()[i] = keep + h;
    const double up = loss_given_logits(logits_s, logits_t, ys.y, yt.y, ps.probs,
                                        pt.probs, inst.xsim);
    logits_t.data()[i] = keep - h;
    const double dn = loss_given_logits(logits_s, logits_t, ys.y, yt.y, ps.probs,
                                        pt.probs, inst.xsim);
    logits_t.data()[i] = keep;
    fd_t.data()[i] = (up - dn) / (2.0 * h);
  }
  return std::max(norm_rel_error(report.grad_logits_s, fd_s),
                  norm_rel_error(report.grad_logits_t, fd_t));
}

struct PipelineFixture {
  Instance inst;
  EncoderParams f;
  Mat views_s, views_t;
  Mat ks, kt, bank_s, bank_t;
  Mat ys, yt, ps_const, pt_const;
};

double pipeline_loss(const PipelineFixture& fx, const EncoderParams& f) {
  const Mat qs = encoder_forward(f, fx.views_s);
  const Mat qt = encoder_forward(f, fx.views_t);
  const ProbMatrix ps = get_prob(qs, fx.kt, fx.bank_t, fx.inst.tau);
  const ProbMatrix pt = get_prob(qt, fx.ks, fx.bank_s, fx.inst.tau);
  double acc = 0.0;
  for (std::size_t c = 0; c < ps.probs.cols(); ++c) {
    for (std::size_t r = 0; r < ps.probs.rows(); ++r) {
      acc -= fx.ys.at(r, c) * std::log(pt.probs.at(r, c));
      acc -= fx.yt.at(r, c) * std::log(ps.probs.at(r, c));
      if (fx.inst.xsim) {
        acc -= fx.ps_const.at(r, c) * std::log(pt.probs.at(r, c));
        acc -= fx.pt_const.at(r, c) * std::log(ps.probs.at(r, c));
      }
    }
  }
  return acc / static_cast<double>(ps.probs.cols());
}

double pipeline_suite_instance(const Instance& inst, Rng& rng,
                               const GradCheckOptions& options) {
  const std::size_t d_in = inst.d + 1;
  PipelineFixture fx;
  fx.inst = inst;
  // Positive biases keep rectifier columns alive; redraw on the rare
  // input that still lands every unit in the dead zone.
  const auto draw_encoder = [&]() {
    EncoderParams enc = make_encoder(d_in, 5, inst.d, 2, rng.next_u64());
    for (auto& layer : enc.layers)
      for (auto& b : layer.bias) b = rng.uniform(0.05, 0.25);
    return enc;
  };
  EncoderParams g;
  for (int attempt = 0;; ++attempt) {
    fx.f = draw_encoder();
    g = draw_encoder();
    fx.views_s = Mat(d_in, inst.n);
    fx.views_t = Mat(d_in, inst.n);
    for (std::size_t i = 0; i < fx.views_s.size(); ++i) {
      fx.views_s.data()[i] = rng.normal();
      fx.views_t.data()[i] = rng.normal();
    }
    try {
      fx.ks = encoder_forward(g, fx.views_s);
      fx.kt = encoder_forward(g, fx.views_t);
      encoder_forward(fx.f, fx.views_s);
      encoder_forward(fx.f, fx.views_t);
      break;
    } catch (const std::runtime_error&) {
      if (attempt > 100) throw;
    }
  }
  fx.bank_s = random_unit_features(inst.d, inst.k, rng);
  fx.bank_t = random_unit_features(inst.d, inst.k, rng);

  ForwardTape tape_s, tape_t;
  const Mat qs = encoder_forward(fx.f, fx.views_s, &tape_s);
  const Mat qt = encoder_forward(fx.f, fx.views_t, &tape_t);
  const ProbMatrix ps = get_prob(qs, fx.kt, fx.bank_t, inst.tau);
  const ProbMatrix pt = get_prob(qt, fx.ks, fx.bank_s, inst.tau);
  fx.ys = sinkhorn_labels(ps, inst.xi, inst.lambda, 3).y;
  fx.yt = sinkhorn_labels(pt, inst.xi, inst.lambda, 3).y;
  fx.ps_const = ps.probs;
  fx.pt_const = pt.probs;

  PseudoLabelMatrix ys_l, yt_l;
  ys_l.y = fx.ys;
  yt_l.y = fx.yt;
  LossReport report = xmoco_loss(ps, pt, ys_l, yt_l, inst.xsim);
  if (options.mutate_grads)
    options.mutate_grads(report.grad_logits_s, report.grad_logits_t);
  const Mat grad_qs =
      grad_logits_to_queries(report.grad_logits_s, fx.kt, fx.bank_t, inst.tau);
  const Mat grad_qt =
      grad_logits_to_queries(report.grad_logits_t, fx.ks, fx.bank_s, inst.tau);
  BackwardResult bw = encoder_backward(fx.f, tape_s, grad_qs);
  const BackwardResult bw_t = encoder_backward(fx.f, tape_t, grad_qt);
  accumulate(bw.grads, bw_t.grads);

  const double h = options.fd_step;
  std::vector<double> analytic, fd;
  EncoderParams probe = fx.f;
  for (std::size_t li = 0; li < probe.layers.size(); ++li) {
    auto fd_of = [&](double* slot, double grad) {
      const double keep = *slot;
      *slot = keep + h;
      const double up = pipeline_loss(fx, probe);
      *slot = keep - h;
      const double dn = pipeline_loss(fx, probe);
      *slot = keep;
      analytic.push_back(grad);
      fd.push_back((up - dn) / (2.0 * h));
    };
    for (std::size_t k = 0; k < probe.layers[li].weight.size(); ++k)
      fd_of(&probe.layers[li].weight.data()[k], bw.grads.layers[li].weight.data()[k]);
    for (std::size_t k = 0; k < probe.layers[li].bias.size(); ++k)
      fd_of(&probe.layers[li].bias[k], bw.grads.layers[li].bias[k]);
  }
  const std::size_t count = analytic.size();
  return norm_rel_error(Mat(1, count, std::move(analytic)),
                        Mat(1, count, std::move(fd)));
}

}  // namespace

GradCheckReport run_gradcheck(const GradCheckOptions& options) {
  Rng rng(options.seed);
  GradCheckReport report;
  report.instances = options.instances;
  for (std::size_t i = 0; i < options.instances; ++i) {
    const Instance inst = make_instance(i, rng);
    report.worst_loss_rel =
        std::max(report.worst_loss_rel, loss_suite_instance(inst, rng, options));
    report.worst_pipeline_rel = std::max(
        report.worst_pipeline_rel, pipeline_suite_instance(inst, rng, options));
  }
  report.passed = report.worst_loss_rel < options.loss_tol &&
                  report.worst_pipeline_rel < options.pipeline_tol;
  return report;
}

}  // namespace xmoco
