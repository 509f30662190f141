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

#include "xmoco/eval.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

namespace xmoco {

namespace {

int max_label(const std::vector<int>& labels) {
  int mx = 0;
  for (int l : labels) {
    if (l < 0) throw std::invalid_argument("negative class id");
    mx = std::max(mx, l);
  }
  return mx;
}

struct ProbeModel {
  Mat weight;                // classes x d
  std::vector<double> bias;  // classes

  Mat logits(const Mat& feats) const {
    Mat out = matmul(weight, feats);
    for (std::size_t r = 0; r < out.rows(); ++r)
      for (std::size_t c = 0; c < out.cols(); ++c) out.at(r, c) += bias[r];
    return out;
  }
};

double probe_step(ProbeModel& model, const Mat& feats,
                  const std::vector<int>& labels, double lr) {
  const std::size_t n = feats.cols();
  const Mat probs = softmax_columns(model.logits(feats));
  double loss = 0.0;
  Mat delta = probs;  // becomes probs - onehot
  for (std::size_t c = 0; c < n; ++c) {
    const auto lab = static_cast<std::size_t>(labels[c]);
    loss -= std::log(probs.at(lab, c));
    delta.at(lab, c) -= 1.0;
  }
  loss /= static_cast<double>(n);
  delta *= 1.0 / static_cast<double>(n);

  const Mat grad_w = matmul(delta, transpose(feats));
  for (std::size_t k = 0; k < model.weight.size(); ++k)
    model.weight.data()[k] -= lr * grad_w.data()[k];
  for (std::size_t r = 0; r < delta.rows(); ++r) {
    double g = 0.0;
    for (std::size_t c = 0; c < n; ++c) g += delta.at(r, c);
    model.bias[r] -= lr * g;
  }
  return loss;
}

double probe_accuracy(const ProbeModel& model, const Mat& feats,
                      const std::vector<int>& labels) {
  const Mat logits = model.logits(feats);
  std::size_t correct = 0;
  for (std::size_t c = 0; c < logits.cols(); ++c) {
    std::size_t best = 0;
    for (std::size_t r = 1; r < logits.rows(); ++r)
      if (logits.at(r, c) > logits.at(best, c)) best = r;
    if (static_cast<int>(best) == labels[c]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(logits.cols());
}

ProbeModel train_probe(const Mat& train_feats, const std::vector<int>& train_labels,
                       std::size_t steps, double lr,
                       std::vector<double>* losses) {
  if (train_feats.cols() != train_labels.size())
    throw std::invalid_argument("feature/label count mismatch");
  const int classes = max_label(train_labels) + 1;
  if (classes < 2) throw std::invalid_argument("need at least two classes");

  ProbeModel model;
  model.weight = Mat(static_cast<std::size_t>(classes), train_feats.rows());
  model.bias.assign(static_cast<std::size_t>(classes), 0.0);
  for (std::size_t s = 0; s < steps; ++s) {
    const double loss = probe_step(model, train_feats, train_labels, lr);
    if (losses != nullptr) losses->push_back(loss);
  }
  return model;
}

}  // namespace

double knn_eval(const Mat& train_feats, const std::vector<int>& train_labels,
                const Mat& test_feats, const std::vector<int>& test_labels,
                std::size_t k) {
  if (k == 0) throw std::invalid_argument("k must be >= 1");
  if (train_feats.cols() == 0 || test_feats.cols() == 0)
    throw std::invalid_argument("empty split");
  if (k > train_feats.cols()) throw std::invalid_argument("k exceeds train size");
  if (train_feats.cols() != train_labels.size() ||
      test_feats.cols() != test_labels.size())
    throw std::invalid_argument("feature/label count mismatch");
  if (train_feats.rows() != test_feats.rows())
    throw std::invalid_argument("feature dimension mismatch");

  // Unit-norm features make the inner product the cosine similarity.
  const Mat sims = matmul(transpose(train_feats), test_feats);  // ntr x nte

  std::size_t correct = 0;
  std::vector<std::size_t> order(train_feats.cols());
  for (std::size_t j = 0; j < test_feats.cols(); ++j) {
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::partial_sort(order.begin(), order.begin() + static_cast<long>(k),
                      order.end(), [&](std::size_t a, std::size_t b) {
                        if (sims.at(a, j) != sims.at(b, j))
                          return sims.at(a, j) > sims.at(b, j);
                        return a < b;
                      });
    std::map<int, std::size_t> votes;
    for (std::size_t i = 0; i < k; ++i) ++votes[train_labels[order[i]]];
    int best_class = -1;
    std::size_t best_votes = 0;
    for (const auto& [cls, v] : votes) {
      if (v > best_votes) {  // map iterates ascending, so ties keep the
        best_votes = v;      // smaller class id
        best_class = cls;
      }
    }
    if (best_class == test_labels[j]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(test_feats.cols());
}

double linear_probe(const Mat& train_feats, const std::vector<int>& train_labels,
                    const Mat& test_feats, const std::vector<int>& test_labels,
                    std::size_t steps, double lr) {
  if (test_feats.cols() != test_labels.size())
    throw std::invalid_argument("feature/label count mismatch");
  const ProbeModel model = train_probe(train_feats, train_labels, steps, lr, nullptr);
  return probe_accuracy(model, test_feats, test_labels);
}

std::vector<double> linear_probe_losses(const Mat& train_feats,
                                        const std::vector<int>& train_labels,
                                        std::size_t steps, double lr) {
  std::vector<double> losses;
  train_probe(train_feats, train_labels, steps, lr, &losses);
  return losses;
}

}  // namespace xmoco
