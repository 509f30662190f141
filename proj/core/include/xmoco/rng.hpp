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

#ifndef XMOCO_RNG_HPP_
#define XMOCO_RNG_HPP_

#include <cmath>
#include <cstdint>
#include <istream>
#include <numbers>
#include <ostream>
#include <random>
#include <vector>

namespace xmoco {

// Deterministic RNG. Draws are fully specified on top of mt19937_64 (no
// library distribution objects), so a (seed, call sequence) pair pins the
// stream of values and the whole state round-trips through checkpoints.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform in [0, 1), 53-bit resolution.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Stateless Box-Muller (cosine branch only), so no cached-value state.
  double normal() {
    double u1 = uniform();
    while (u1 == 0.0) u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  // Uniform in [0, n). Modulo bias is irrelevant at desk scale.
  std::size_t below(std::size_t n) { return static_cast<std::size_t>(next_u64() % n); }

  // Fisher-Yates permutation of 0..n-1.
  std::vector<std::size_t> permutation(std::size_t n) {
    std::vector<std::size_t> p(n);
    for (std::size_t i = 0; i < n; ++i) p[i] = i;
    for (std::size_t i = n; i > 1; --i) {
      const std::size_t j = below(i);
      std::swap(p[i - 1], p[j]);
    }
    return p;
  }

  friend std::ostream& operator<<(std::ostream& out, const Rng& rng) {
    return out << rng.engine_;
  }
  friend std::istream& operator>>(std::istream& in, Rng& rng) {
    return in >> rng.engine_;
  }

  friend bool operator==(const Rng& a, const Rng& b) { return a.engine_ == b.engine_; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace xmoco

#endif  // XMOCO_RNG_HPP_
