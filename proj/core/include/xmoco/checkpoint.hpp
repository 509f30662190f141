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

#ifndef XMOCO_CHECKPOINT_HPP_
#define XMOCO_CHECKPOINT_HPP_

#include <string>

#include "xmoco/training.hpp"

namespace xmoco {

// Checkpoint file: an ASCII header (magic, counters, rng state, the full
// resolved config) followed by named tensors, each as a manifest line
// `name rows cols` and an XMC1 block. Restoring one reproduces the
// subsequent training steps bit-identically.
struct Checkpoint {
  TrainConfig config;
  TrainState state;
};

void save_checkpoint(const std::string& path, const TrainConfig& config,
                     const TrainState& state);

Checkpoint load_checkpoint(const std::string& path);

}  // namespace xmoco

#endif  // XMOCO_CHECKPOINT_HPP_
