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

#ifndef XMOCO_DATA_HPP_
#define XMOCO_DATA_HPP_

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "xmoco/matrix.hpp"
#include "xmoco/rng.hpp"

namespace xmoco {

// Labels are for evaluation only; the training path never reads them.
struct Dataset {
  Mat samples;              // d_in x M, one sample per column
  std::vector<int> labels;  // size M, may be empty for unlabeled data
  std::string name;
  std::uint64_t seed = 0;

  std::size_t dim() const { return samples.rows(); }
  std::size_t count() const { return samples.cols(); }
};

// Parameterized family of semantic-preserving vector transformations:
// random per-view multiplicative scale, additive Gaussian noise, random
// coordinate masking, and per-coordinate-pair sign flips.
struct TransformSpec {
  double noise_sigma = 0.1;
  double scale_min = 0.8;
  double scale_max = 1.2;
  double mask_fraction = 0.125;
  double flip_prob = 0.0;

  bool is_identity() const {
    return noise_sigma == 0.0 && scale_min == 1.0 && scale_max == 1.0 &&
           mask_fraction == 0.0 && flip_prob == 0.0;
  }
  void validate() const;
};

// Gaussian clusters with unit intra-cluster std and pairwise centroid
// distance >= separation. Deterministic given the seed.
Dataset make_blobs(std::size_t classes, std::size_t per_class, std::size_t d_in,
                   double separation, std::uint64_t seed);

// Two independently transformed views of one sample.
std::pair<std::vector<double>, std::vector<double>> two_views(
    std::span<const double> sample, const TransformSpec& spec, Rng& rng);

// Without-replacement permutation of 0..m-1 split into floor(m/n) full
// batches; the remainder is dropped so every batch has exactly n samples.
std::vector<std::vector<std::size_t>> epoch_batches(std::size_t m, std::size_t n,
                                                    Rng& rng);

// Comma-separated numeric table, one sample per row, optional final
// integer label column. Features are standardized to zero mean and unit
// variance per coordinate. Lines starting with '#' are skipped.
Dataset load_delimited(const std::string& path, bool has_labels);

// Writes samples (and labels when present) as CSV, one sample per row.
// `header` lines, when given, are emitted as '#' comments.
void save_delimited(const std::string& path, const Dataset& ds,
                    const std::vector<std::string>& header = {});

// Index of the nearest centroid in Euclidean distance; centroids are one
// per column. Used to validate that transformations preserve cluster
// identity.
std::size_t nearest_centroid(std::span<const double> x, const Mat& centroids);

// Per-class centroids of a labeled dataset (d x classes).
Mat class_centroids(const Dataset& ds, std::size_t classes);

}  // namespace xmoco

#endif  // XMOCO_DATA_HPP_
