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

#ifndef XMOCO_BANK_HPP_
#define XMOCO_BANK_HPP_

#include <cstdint>
#include <span>
#include <vector>

#include "xmoco/matrix.hpp"
#include "xmoco/probability.hpp"

namespace xmoco {

// Fixed-size FIFO of momentum-encoder key features (one per column).
// Enqueueing a batch replaces the oldest columns; the bank always holds
// exactly `capacity` columns. Single writer; readers take snapshots.
class MemoryBank {
 public:
  // Fills the bank with seeded random unit-norm columns.
  MemoryBank(std::size_t dim, std::size_t capacity, std::uint64_t seed);

  // Restores a bank from an age-ordered snapshot (cursor resets to 0,
  // which preserves FIFO behavior exactly).
  static MemoryBank from_snapshot(Mat age_ordered);

  std::size_t dim() const { return features_.rows(); }
  std::size_t capacity() const { return features_.cols(); }

  // Replaces the N oldest columns with `keys` in arrival order. Throws
  // "batch exceeds bank" when N > capacity, and on non-unit-norm keys.
  void enqueue(const Mat& keys);

  // d x K view of the contents, oldest first.
  Mat snapshot() const;

 private:
  MemoryBank() = default;
  Mat features_;             // circular storage
  std::size_t cursor_ = 0;   // next slot to overwrite == oldest column
};

// d x (K+1) peer matrix: column 0 is the sample's own momentum key, the
// rest is the bank snapshot.
Mat assemble_peers(const MemoryBank& bank, std::span<const double> current_key);

// Ring buffer of past probability columns, used to widen the Sinkhorn
// batch when N is small relative to K.
class ProbQueue {
 public:
  ProbQueue(std::size_t rows, std::size_t capacity);

  std::size_t rows() const { return rows_; }
  std::size_t capacity() const { return capacity_; }
  std::size_t size() const { return columns_.size() / rows_; }

  void push_matrix(const Mat& p);  // absorbs all columns FIFO

  Mat contents() const;  // rows x size, oldest first

  // Checkpoint plumbing.
  static ProbQueue from_contents(std::size_t capacity, const Mat& contents);

 private:
  std::size_t rows_ = 0;
  std::size_t capacity_ = 0;
  std::vector<double> columns_;  // column-major contiguous, oldest first
};

// Horizontally extends p with the queued past probability columns (the
// label solver then sees an effective batch of N + Q columns; the loss
// reads labels from the first N columns only). Afterwards the queue
// absorbs the current batch's columns. With an empty queue this is the
// identity path.
ProbMatrix extend_marginals(const ProbMatrix& p, ProbQueue& queue);

}  // namespace xmoco

#endif  // XMOCO_BANK_HPP_
