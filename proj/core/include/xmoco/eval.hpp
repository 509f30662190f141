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

#ifndef XMOCO_EVAL_HPP_
#define XMOCO_EVAL_HPP_

#include <cstddef>
#include <vector>

#include "xmoco/matrix.hpp"

namespace xmoco {

struct EvalReport {
  double knn_accuracy = 0.0;
  double linear_accuracy = 0.0;
  std::size_t k = 0;
  std::size_t train_size = 0;
  std::size_t test_size = 0;
};

// Majority vote over the k training points with the highest cosine
// similarity; similarity ties break toward the lower training index and
// vote ties toward the smaller class id. Features must be unit-norm.
double knn_eval(const Mat& train_feats, const std::vector<int>& train_labels,
                const Mat& test_feats, const std::vector<int>& test_labels,
                std::size_t k);

// Multinomial logistic regression on frozen features, trained with
// full-batch gradient descent; returns test accuracy. Prediction ties
// break toward the smaller class id.
double linear_probe(const Mat& train_feats, const std::vector<int>& train_labels,
                    const Mat& test_feats, const std::vector<int>& test_labels,
                    std::size_t steps, double lr);

// Training loss curve of the probe, exposed so the non-increasing-loss
// property is checkable.
std::vector<double> linear_probe_losses(const Mat& train_feats,
                                        const std::vector<int>& train_labels,
                                        std::size_t steps, double lr);

}  // namespace xmoco

#endif  // XMOCO_EVAL_HPP_
