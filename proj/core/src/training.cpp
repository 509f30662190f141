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

#include "xmoco/training.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "xmoco/probability.hpp"
#include "xmoco/pseudolabel.hpp"

namespace xmoco {

namespace {

// Seed offsets keep the encoder init, the two banks, and the trainer
// stream on independent deterministic substreams of one config seed.
constexpr std::uint64_t kEncoderSeedOffset = 0x9e3779b97f4a7c15ull;
constexpr std::uint64_t kBankSSeedOffset = 0xbf58476d1ce4e5b9ull;
constexpr std::uint64_t kBankTSeedOffset = 0x94d049bb133111ebull;

PseudoLabelMatrix labels_for(const ProbMatrix& p, ProbQueue& queue,
                             const TrainConfig& config) {
  if (!config.uniform_labels)
    return one_hot_labels(p.peers(), p.batch());
  const std::size_t n = p.batch();
  if (config.prob_queue == 0) {
    return sinkhorn_labels(p, config.xi, config.lambda, config.sinkhorn_iters);
  }
  // Widen the column marginal with queued past probabilities, then read
  // the labels for the current batch from the first N columns.
  const ProbMatrix ext = extend_marginals(p, queue);
  PseudoLabelMatrix full =
      sinkhorn_labels(ext, config.xi, config.lambda, config.sinkhorn_iters);
  PseudoLabelMatrix out;
  out.xi = full.xi;
  out.lambda = full.lambda;
  out.iters = full.iters;
  out.positivity_violated = full.positivity_violated;
  out.y = Mat(full.y.rows(), n);
  for (std::size_t c = 0; c < n; ++c)
    for (std::size_t r = 0; r < full.y.rows(); ++r)
      out.y.at(r, c) = full.y.at(r, c);
  return out;
}

bool column_is_bad(const ProbMatrix& p, std::size_t c) {
  for (std::size_t r = 0; r < p.peers(); ++r) {
    if (!std::isfinite(p.probs.at(r, c)) || !std::isfinite(p.logits.at(r, c)) ||
        !(p.probs.at(r, c) > 0.0))
      return true;
  }
  return false;
}

std::string dump_bad_columns(const ProbMatrix& p, const char* name) {
  std::ostringstream os;
  std::size_t shown = 0;
  for (std::size_t c = 0; c < p.batch() && shown < 3; ++c) {
    if (!column_is_bad(p, c)) continue;
    ++shown;
    os << "\n  " << name << " column " << c << " (logit, prob):";
    for (std::size_t r = 0; r < std::min<std::size_t>(p.peers(), 8); ++r)
      os << " [" << p.logits.at(r, c) << ", " << p.probs.at(r, c) << "]";
    if (p.peers() > 8) os << " ...";
  }
  return os.str();
}

bool has_bad_column(const ProbMatrix& p) {
  for (std::size_t c = 0; c < p.batch(); ++c)
    if (column_is_bad(p, c)) return true;
  return false;
}

}  // namespace

TrainState init_train_state(const TrainConfig& config) {
  EncoderParams f = make_encoder(config.d_in, config.hidden, config.feat_dim,
                                 config.mlp_layers,
                                 config.seed + kEncoderSeedOffset);
  EncoderParams vel = zeros_like(f);
  return TrainState{
      make_momentum_pair(std::move(f), config.ema_m),
      std::move(vel),
      MemoryBank(config.feat_dim, config.bank_size, config.seed + kBankSSeedOffset),
      MemoryBank(config.feat_dim, config.bank_size, config.seed + kBankTSeedOffset),
      ProbQueue(config.bank_size + 1, config.prob_queue),
      ProbQueue(config.bank_size + 1, config.prob_queue),
      0,
      0,
      Rng(config.seed)};
}

StepMetrics train_step(TrainState& state, const Mat& batch_samples,
                       const TrainConfig& config, double lr) {
  const std::size_t n = batch_samples.cols();
  if (batch_samples.rows() != config.d_in)
    throw std::invalid_argument("batch dimension mismatch");

  Mat views_s(config.d_in, n);
  Mat views_t(config.d_in, n);
  for (std::size_t c = 0; c < n; ++c) {
    const auto sample = batch_samples.column(c);
    auto [vs, vt] = two_views(sample, config.transform, state.rng);
    views_s.set_column(c, vs);
    views_t.set_column(c, vt);
  }

  ForwardTape tape_s, tape_t;
  const Mat qs = encoder_forward(state.pair.f, views_s, &tape_s);
  const Mat qt = encoder_forward(state.pair.f, views_t, &tape_t);
  const Mat ks = encoder_forward(state.pair.g, views_s);
  const Mat kt = encoder_forward(state.pair.g, views_t);

  const Mat snap_s = state.bank_s.snapshot();
  const Mat snap_t = state.bank_t.snapshot();
  const ProbMatrix ps = get_prob(qs, kt, snap_t, config.tau);
  const ProbMatrix pt = get_prob(qt, ks, snap_s, config.tau);

  // Probability underflow (an exactly zero entry) poisons the logs and
  // the transport kernel; surface it as divergence rather than letting a
  // submodule reject the input with a generic message.
  if (has_bad_column(ps) || has_bad_column(pt)) {
    throw DivergenceError("divergence: degenerate probabilities at step " +
                          std::to_string(state.step) + dump_bad_columns(ps, "P^s") +
                          dump_bad_columns(pt, "P^t"));
  }

  const PseudoLabelMatrix ys = labels_for(ps, state.queue_s, config);
  const PseudoLabelMatrix yt = labels_for(pt, state.queue_t, config);

  const LossReport report = xmoco_loss(ps, pt, ys, yt, config.xsim_reg);
  if (!std::isfinite(report.total)) {
    throw DivergenceError("divergence: non-finite loss at step " +
                          std::to_string(state.step) + dump_bad_columns(ps, "P^s") +
                          dump_bad_columns(pt, "P^t"));
  }

  const Mat grad_qs =
      grad_logits_to_queries(report.grad_logits_s, kt, snap_t, config.tau);
  const Mat grad_qt =
      grad_logits_to_queries(report.grad_logits_t, ks, snap_s, config.tau);
  BackwardResult bw_s = encoder_backward(state.pair.f, tape_s, grad_qs);
  const BackwardResult bw_t = encoder_backward(state.pair.f, tape_t, grad_qt);
  accumulate(bw_s.grads, bw_t.grads);

  StepMetrics metrics;
  metrics.step = state.step;
  metrics.epoch = state.epoch;
  metrics.lr = lr;
  metrics.loss = report.total;
  metrics.term_label_s_on_pt = report.term_label_s_on_pt;
  metrics.term_label_t_on_ps = report.term_label_t_on_ps;
  metrics.term_xsim_s_on_pt = report.term_xsim_s_on_pt;
  metrics.term_xsim_t_on_ps = report.term_xsim_t_on_ps;
  metrics.grad_norm = param_norm(bw_s.grads);

  sgd_update(state.pair.f, bw_s.grads, state.velocity, lr, config.sgd_momentum,
             config.weight_decay);
  momentum_update(state.pair);
  state.bank_s.enqueue(ks);
  state.bank_t.enqueue(kt);
  ++state.step;
  return metrics;
}

double cosine_lr(std::size_t step, std::size_t total_steps, double base_lr,
                 double coeff, double offset) {
  if (step > total_steps)
    throw std::invalid_argument("step past the end of the schedule");
  const double phase =
      total_steps == 0
          ? 0.0
          : static_cast<double>(step) / static_cast<double>(total_steps);
  return base_lr * (offset + coeff * (1.0 + std::cos(std::numbers::pi * phase)));
}

void sgd_update(EncoderParams& params, const EncoderParams& grads,
                EncoderParams& velocity, double lr, double momentum,
                double weight_decay) {
  if (params.layers.size() != grads.layers.size() ||
      params.layers.size() != velocity.layers.size())
    throw std::invalid_argument("layer count mismatch in sgd_update");
  for (std::size_t i = 0; i < params.layers.size(); ++i) {
    auto& p = params.layers[i];
    const auto& g = grads.layers[i];
    auto& v = velocity.layers[i];
    if (!p.weight.same_shape(g.weight) || !p.weight.same_shape(v.weight))
      throw std::invalid_argument("shape mismatch in sgd_update");
    for (std::size_t k = 0; k < p.weight.size(); ++k) {
      v.weight.data()[k] = momentum * v.weight.data()[k] + g.weight.data()[k] +
                           weight_decay * p.weight.data()[k];
      p.weight.data()[k] -= lr * v.weight.data()[k];
    }
    for (std::size_t k = 0; k < p.bias.size(); ++k) {
      v.bias[k] = momentum * v.bias[k] + g.bias[k] + weight_decay * p.bias[k];
      p.bias[k] -= lr * v.bias[k];
    }
  }
}

namespace {

void run_loop(TrainState& state, const TrainConfig& config, const Dataset& dataset,
              const RunHooks& hooks) {
  const std::size_t m = dataset.count();
  const std::size_t n = config.batch_size;
  const std::size_t batches_per_epoch = m / n;
  const std::size_t total_steps = config.epochs * batches_per_epoch;

  for (std::size_t epoch = state.epoch; epoch < config.epochs; ++epoch) {
    const auto batches = epoch_batches(m, n, state.rng);

    // Every sample appears at most once per epoch, so nothing currently
    // in the banks can collide with the batch.
    std::vector<char> seen(m, 0);
    for (const auto& batch : batches)
      for (std::size_t idx : batch) {
        if (seen[idx]) throw std::logic_error("sample repeated within an epoch");
        seen[idx] = 1;
      }

    for (const auto& batch : batches) {
      const double lr = cosine_lr(state.step, total_steps, config.base_lr);
      Mat samples(dataset.dim(), n);
      for (std::size_t c = 0; c < n; ++c) {
        for (std::size_t r = 0; r < dataset.dim(); ++r)
          samples.at(r, c) = dataset.samples.at(r, batch[c]);
      }
      const StepMetrics metrics = train_step(state, samples, config, lr);
      if (hooks.on_step) hooks.on_step(metrics);
    }
    state.epoch = epoch + 1;
    if (hooks.on_epoch_end) hooks.on_epoch_end(state.epoch, state);
  }
}

}  // namespace

TrainState run(const TrainConfig& config, const Dataset& dataset,
               const RunHooks& hooks) {
  TrainState state = init_train_state(config);
  run_loop(state, config, dataset, hooks);
  return state;
}

void resume_from(TrainState& state, const TrainConfig& config,
                 const Dataset& dataset, const RunHooks& hooks) {
  run_loop(state, config, dataset, hooks);
}

}  // namespace xmoco
