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

#ifndef XMOCO_CONFIG_HPP_
#define XMOCO_CONFIG_HPP_

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "xmoco/data.hpp"

namespace xmoco {

// Full training configuration. Loadable from a flat key=value text file
// ('#' comments allowed); unknown keys are rejected with the offending
// line. `base_lr = 0` resolves to the batch-scaled rule
// 0.0675 * batch_size / 256.
struct TrainConfig {
  // similarity / labels
  double tau = 0.2;
  double xi = 0.9;
  double lambda = 2.0;
  std::size_t sinkhorn_iters = 3;
  bool uniform_labels = true;
  bool xsim_reg = true;

  // memory
  std::size_t bank_size = 256;  // K
  std::size_t prob_queue = 0;   // Q, experimental

  // optimization
  std::size_t batch_size = 64;  // N
  std::size_t epochs = 200;
  double base_lr = 0.0;         // 0 -> scaling rule
  double sgd_momentum = 0.9;
  double weight_decay = 1e-4;
  double ema_m = 0.99;
  std::uint64_t seed = 42;

  // encoder
  std::size_t d_in = 16;
  std::size_t feat_dim = 16;
  std::size_t hidden = 64;
  std::size_t mlp_layers = 3;

  // data: a delimited file when `dataset` is set, synthetic blobs
  // otherwise
  std::string dataset;
  bool dataset_labeled = true;
  std::size_t classes = 3;
  std::size_t per_class = 400;
  double separation = 6.0;
  TransformSpec transform;

  // checkpointing
  std::size_t checkpoint_every = 0;  // epochs; 0 -> final only

  // Fills derived defaults (base_lr rule) and range-checks every field.
  void resolve_and_validate();

  // Stable key order, full precision; the provenance header in output
  // files and the checkpoint config block both use this.
  std::vector<std::pair<std::string, std::string>> to_key_values() const;

  // Assigns one key. Throws on unknown keys or unparsable values.
  void set_key(const std::string& key, const std::string& value);
};

TrainConfig load_config_file(const std::string& path);

// Applies `key=value` strings (CLI overrides) on top of a config.
void apply_overrides(TrainConfig& config,
                     const std::vector<std::string>& assignments);

}  // namespace xmoco

#endif  // XMOCO_CONFIG_HPP_
