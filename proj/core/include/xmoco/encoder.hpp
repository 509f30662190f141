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

#ifndef XMOCO_ENCODER_HPP_
#define XMOCO_ENCODER_HPP_

#include <cstdint>
#include <vector>

#include "xmoco/matrix.hpp"

namespace xmoco {

struct LinearLayer {
  Mat weight;                // out x in
  std::vector<double> bias;  // out
};

// MLP encoder parameters: rectifier between linear layers, then a final
// L2 normalization onto the unit sphere. The same struct doubles as the
// container for gradients and optimizer velocities.
struct EncoderParams {
  std::vector<LinearLayer> layers;

  std::size_t input_dim() const { return layers.front().weight.cols(); }
  std::size_t output_dim() const { return layers.back().weight.rows(); }
  std::size_t parameter_count() const;
};

// dims d_in -> hidden -> ... -> hidden -> d_out with `n_layers` linear
// layers (n_layers >= 1). Weights uniform in [-a, a] with
// a = sqrt(6 / (fan_in + fan_out)); biases zero.
EncoderParams make_encoder(std::size_t d_in, std::size_t hidden, std::size_t d_out,
                           std::size_t n_layers, std::uint64_t seed);

// Activation record for one forward pass.
struct ForwardTape {
  std::vector<Mat> inputs;    // input to each linear layer
  Mat pre_norm;               // last linear output, before normalization
  std::vector<double> norms;  // per-column Euclidean norm of pre_norm
  Mat features;               // unit-norm output columns
};

// Returns unit-norm features (d_out x N). Throws "degenerate embedding"
// if a pre-normalization column is exactly zero.
Mat encoder_forward(const EncoderParams& params, const Mat& batch,
                    ForwardTape* tape = nullptr);

struct BackwardResult {
  EncoderParams grads;  // same shapes as the parameters
  Mat grad_input;       // d_in x N
};

// Backpropagates through the normalization (tangent projection), the
// rectifiers, and the linear layers.
BackwardResult encoder_backward(const EncoderParams& params, const ForwardTape& tape,
                                const Mat& grad_features);

// Trainable encoder f plus its EMA copy g. g is initialized to f and
// never sees loss gradients.
struct MomentumPair {
  EncoderParams f;
  EncoderParams g;
  double m = 0.99;
};

MomentumPair make_momentum_pair(EncoderParams f, double m);

// g <- m*g + (1-m)*f elementwise; f untouched.
void momentum_update(MomentumPair& pair);

// Parameter-collection helpers shared by the optimizer and checkpoints.
EncoderParams zeros_like(const EncoderParams& params);
void accumulate(EncoderParams& into, const EncoderParams& grads);
double param_norm(const EncoderParams& params);
double param_max_abs_diff(const EncoderParams& a, const EncoderParams& b);

}  // namespace xmoco

#endif  // XMOCO_ENCODER_HPP_
