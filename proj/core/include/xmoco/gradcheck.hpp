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

#ifndef XMOCO_GRADCHECK_HPP_
#define XMOCO_GRADCHECK_HPP_

#include <cstdint>
#include <functional>

#include "xmoco/matrix.hpp"

namespace xmoco {

// Central finite-difference verification of the analytic gradients, on
// random tiny instances (K <= 6, N <= 4, including the K=1 edge).
//
// Two suites:
//  - loss: gradients with respect to the logits, holding pseudo-labels
//    and the stop-gradient targets fixed while the softmax reruns;
//  - pipeline: gradients with respect to every encoder parameter through
//    softmax, the 1/tau scale, the normalization layer, and the MLP.
//
// Errors are normwise: |analytic - fd|_inf / max(|analytic|_inf,
// |fd|_inf, eps) per instance.
struct GradCheckOptions {
  std::size_t instances = 20;
  double fd_step = 1e-5;
  double loss_tol = 1e-6;
  double pipeline_tol = 1e-5;
  std::uint64_t seed = 7;
  // Test hook: corrupts the analytic logit gradients before comparison.
  std::function<void(Mat& grad_s, Mat& grad_t)> mutate_grads;
};

struct GradCheckReport {
  double worst_loss_rel = 0.0;
  double worst_pipeline_rel = 0.0;
  std::size_t instances = 0;
  bool passed = false;
};

GradCheckReport run_gradcheck(const GradCheckOptions& options = {});

}  // namespace xmoco

#endif  // XMOCO_GRADCHECK_HPP_
