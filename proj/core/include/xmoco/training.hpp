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

#ifndef XMOCO_TRAINING_HPP_
#define XMOCO_TRAINING_HPP_

#include <functional>
#include <stdexcept>

#include "xmoco/bank.hpp"
#include "xmoco/config.hpp"
#include "xmoco/data.hpp"
#include "xmoco/encoder.hpp"
#include "xmoco/loss.hpp"
#include "xmoco/rng.hpp"

namespace xmoco {

// Everything the alternating scheme mutates. A checkpoint restores this
// struct exactly, making resumed runs bit-identical.
struct TrainState {
  MomentumPair pair;       // f (trainable) and g (EMA)
  EncoderParams velocity;  // SGD momentum buffers
  MemoryBank bank_s;
  MemoryBank bank_t;
  ProbQueue queue_s;
  ProbQueue queue_t;
  std::size_t epoch = 0;  // completed epochs
  std::size_t step = 0;   // completed steps
  Rng rng;                // batch shuffling + view transforms
};

struct StepMetrics {
  std::size_t step = 0;
  std::size_t epoch = 0;
  double lr = 0.0;
  double loss = 0.0;
  double term_label_s_on_pt = 0.0;
  double term_label_t_on_ps = 0.0;
  double term_xsim_s_on_pt = 0.0;
  double term_xsim_t_on_ps = 0.0;
  double grad_norm = 0.0;
};

// Raised when the loss goes non-finite; the message carries a dump of the
// offending probability columns. Training never clips to paper over it.
class DivergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

TrainState init_train_state(const TrainConfig& config);

// One alternation: views, features, probabilities, pseudo-labels, loss,
// SGD step on f, EMA step on g, bank updates.
StepMetrics train_step(TrainState& state, const Mat& batch_samples,
                       const TrainConfig& config, double lr);

// lr = base_lr * (offset + coeff * (1 + cos(pi * step / total_steps))).
double cosine_lr(std::size_t step, std::size_t total_steps, double base_lr,
                 double coeff = 0.5, double offset = 0.1);

// v <- momentum*v + grad + weight_decay*param; param <- param - lr*v.
void sgd_update(EncoderParams& params, const EncoderParams& grads,
                EncoderParams& velocity, double lr, double momentum,
                double weight_decay);

struct RunHooks {
  std::function<void(const StepMetrics&)> on_step;
  std::function<void(std::size_t epoch, const TrainState&)> on_epoch_end;
};

// Full run from a fresh state; `resume_from` continues a restored state
// until config.epochs. Both drive the same loop, so an interrupted and
// resumed run replays the uninterrupted metric stream exactly.
TrainState run(const TrainConfig& config, const Dataset& dataset,
               const RunHooks& hooks = {});
void resume_from(TrainState& state, const TrainConfig& config,
                 const Dataset& dataset, const RunHooks& hooks = {});

}  // namespace xmoco

#endif  // XMOCO_TRAINING_HPP_
