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

#include "xmoco/bank.hpp"

#include <cmath>
#include <stdexcept>

#include "xmoco/rng.hpp"

namespace xmoco {

namespace {

void require_unit_column(const Mat& m, std::size_t c) {
  double ss = 0.0;
  for (std::size_t r = 0; r < m.rows(); ++r) ss += m.at(r, c) * m.at(r, c);
  if (std::fabs(std::sqrt(ss) - 1.0) > 1e-6)
    throw std::invalid_argument("unnormalized feature enqueued into bank");
}

}  // namespace

MemoryBank::MemoryBank(std::size_t dim, std::size_t capacity, std::uint64_t seed) {
  if (dim == 0 || capacity == 0)
    throw std::invalid_argument("bank needs positive dim and capacity");
  Mat raw(dim, capacity);
  Rng rng(seed);
  for (std::size_t i = 0; i < raw.size(); ++i) raw.data()[i] = rng.normal();
  features_ = l2_normalize_columns(raw);
}

MemoryBank MemoryBank::from_snapshot(Mat age_ordered) {
  MemoryBank bank;
  bank.features_ = std::move(age_ordered);
  bank.cursor_ = 0;
  return bank;
}

void MemoryBank::enqueue(const Mat& keys) {
  if (keys.rows() != dim()) throw std::invalid_argument("key dimension mismatch");
  if (keys.cols() > capacity()) throw std::invalid_argument("batch exceeds bank");
  for (std::size_t c = 0; c < keys.cols(); ++c) {
    require_unit_column(keys, c);
    for (std::size_t r = 0; r < dim(); ++r)
      features_.at(r, cursor_) = keys.at(r, c);
    cursor_ = (cursor_ + 1) % capacity();
  }
}

Mat MemoryBank::snapshot() const {
  Mat out(dim(), capacity());
  for (std::size_t c = 0; c < capacity(); ++c) {
    const std::size_t src = (cursor_ + c) % capacity();
    for (std::size_t r = 0; r < dim(); ++r) out.at(r, c) = features_.at(r, src);
  }
  return out;
}

Mat assemble_peers(const MemoryBank& bank, std::span<const double> current_key) {
  if (current_key.size() != bank.dim())
    throw std::invalid_argument("key dimension mismatch");
  double ss = 0.0;
  for (double v : current_key) ss += v * v;
  if (std::fabs(std::sqrt(ss) - 1.0) > 1e-6)
    throw std::invalid_argument("unnormalized feature as current key");

  const Mat snap = bank.snapshot();
  Mat out(bank.dim(), bank.capacity() + 1);
  for (std::size_t r = 0; r < bank.dim(); ++r) out.at(r, 0) = current_key[r];
  for (std::size_t c = 0; c < bank.capacity(); ++c)
    for (std::size_t r = 0; r < bank.dim(); ++r) out.at(r, c + 1) = snap.at(r, c);
  return out;
}

ProbQueue::ProbQueue(std::size_t rows, std::size_t capacity)
    : rows_(rows), capacity_(capacity) {
  if (rows == 0) throw std::invalid_argument("queue needs positive row count");
}

void ProbQueue::push_matrix(const Mat& p) {
  if (p.rows() != rows_) throw std::invalid_argument("queue row-count mismatch");
  for (std::size_t c = 0; c < p.cols(); ++c) {
    for (std::size_t r = 0; r < rows_; ++r) columns_.push_back(p.at(r, c));
    if (size() > capacity_)
      columns_.erase(columns_.begin(), columns_.begin() + static_cast<long>(rows_));
  }
}

Mat ProbQueue::contents() const {
  const std::size_t q = size();
  Mat out(rows_, q);
  for (std::size_t c = 0; c < q; ++c)
    for (std::size_t r = 0; r < rows_; ++r) out.at(r, c) = columns_[c * rows_ + r];
  return out;
}

ProbQueue ProbQueue::from_contents(std::size_t capacity, const Mat& contents) {
  ProbQueue queue(contents.rows(), capacity);
  queue.push_matrix(contents);
  return queue;
}

ProbMatrix extend_marginals(const ProbMatrix& p, ProbQueue& queue) {
  if (queue.rows() != p.probs.rows())
    throw std::invalid_argument("queue row-count mismatch");

  ProbMatrix ext;
  ext.temperature = p.temperature;
  const std::size_t q = queue.size();
  if (q == 0) {
    ext.probs = p.probs;
    ext.logits = p.logits;
  } else {
    const Mat past = queue.contents();
    Mat probs(p.probs.rows(), p.probs.cols() + q);
    for (std::size_t c = 0; c < p.probs.cols(); ++c)
      for (std::size_t r = 0; r < probs.rows(); ++r)
        probs.at(r, c) = p.probs.at(r, c);
    for (std::size_t c = 0; c < q; ++c)
      for (std::size_t r = 0; r < probs.rows(); ++r)
        probs.at(r, p.probs.cols() + c) = past.at(r, c);
    ext.probs = std::move(probs);
  }
  queue.push_matrix(p.probs);
  return ext;
}

}  // namespace xmoco
