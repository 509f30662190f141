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

#include "xmoco/encoder.hpp"

#include <cmath>
#include <stdexcept>

#include "xmoco/rng.hpp"

namespace xmoco {

std::size_t EncoderParams::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers) n += l.weight.size() + l.bias.size();
  return n;
}

EncoderParams make_encoder(std::size_t d_in, std::size_t hidden, std::size_t d_out,
                           std::size_t n_layers, std::uint64_t seed) {
  if (n_layers < 1) throw std::invalid_argument("need at least one linear layer");
  if (d_in == 0 || d_out == 0 || (n_layers > 1 && hidden == 0))
    throw std::invalid_argument("degenerate encoder dimensions");

  std::vector<std::size_t> dims;
  dims.push_back(d_in);
  for (std::size_t i = 0; i + 1 < n_layers; ++i) dims.push_back(hidden);
  dims.push_back(d_out);

  Rng rng(seed);
  EncoderParams params;
  for (std::size_t i = 0; i + 1 < dims.size(); ++i) {
    const std::size_t fan_in = dims[i];
    const std::size_t fan_out = dims[i + 1];
    const double a = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    LinearLayer layer;
    layer.weight = Mat(fan_out, fan_in);
    for (std::size_t k = 0; k < layer.weight.size(); ++k)
      layer.weight.data()[k] = rng.uniform(-a, a);
    layer.bias.assign(fan_out, 0.0);
    params.layers.push_back(std::move(layer));
  }
  return params;
}

Mat encoder_forward(const EncoderParams& params, const Mat& batch,
                    ForwardTape* tape) {
  if (batch.rows() != params.input_dim())
    throw std::invalid_argument("batch dimension does not match encoder input");
  if (!all_finite(batch)) throw std::invalid_argument("non-finite encoder input");

  if (tape != nullptr) {
    tape->inputs.clear();
    tape->inputs.reserve(params.layers.size());
  }

  Mat z = batch;
  for (std::size_t i = 0; i < params.layers.size(); ++i) {
    if (tape != nullptr) tape->inputs.push_back(z);
    const auto& layer = params.layers[i];
    Mat next = matmul(layer.weight, z);
    for (std::size_t r = 0; r < next.rows(); ++r)
      for (std::size_t c = 0; c < next.cols(); ++c) next.at(r, c) += layer.bias[r];
    if (i + 1 < params.layers.size()) {
      for (std::size_t k = 0; k < next.size(); ++k)
        next.data()[k] = next.data()[k] > 0.0 ? next.data()[k] : 0.0;
    }
    z = std::move(next);
  }

  std::vector<double> norms(z.cols());
  Mat features(z.rows(), z.cols());
  for (std::size_t c = 0; c < z.cols(); ++c) {
    double ss = 0.0;
    for (std::size_t r = 0; r < z.rows(); ++r) ss += z.at(r, c) * z.at(r, c);
    const double n = std::sqrt(ss);
    if (n == 0.0) throw std::runtime_error("degenerate embedding");
    norms[c] = n;
    for (std::size_t r = 0; r < z.rows(); ++r) features.at(r, c) = z.at(r, c) / n;
  }

  if (tape != nullptr) {
    tape->pre_norm = std::move(z);
    tape->norms = std::move(norms);
    tape->features = features;
  }
  return features;
}

BackwardResult encoder_backward(const EncoderParams& params, const ForwardTape& tape,
                                const Mat& grad_features) {
  if (!grad_features.same_shape(tape.features))
    throw std::invalid_argument("grad_features shape mismatch");

  // Normalization Jacobian: with y = z/|z|,
  //   dL/dz = (dL/dy - y * (y . dL/dy)) / |z| ,
  // so the component of the incoming gradient along the feature itself is
  // projected out.
  const Mat& y = tape.features;
  Mat gz(y.rows(), y.cols());
  for (std::size_t c = 0; c < y.cols(); ++c) {
    double along = 0.0;
    for (std::size_t r = 0; r < y.rows(); ++r)
      along += y.at(r, c) * grad_features.at(r, c);
    const double inv_norm = 1.0 / tape.norms[c];
    for (std::size_t r = 0; r < y.rows(); ++r)
      gz.at(r, c) = (grad_features.at(r, c) - y.at(r, c) * along) * inv_norm;
  }

  BackwardResult result;
  result.grads.layers.resize(params.layers.size());
  for (std::size_t i = params.layers.size(); i-- > 0;) {
    const auto& layer = params.layers[i];
    const Mat& input = tape.inputs[i];

    auto& g = result.grads.layers[i];
    g.weight = matmul(gz, transpose(input));
    g.bias.assign(layer.bias.size(), 0.0);
    for (std::size_t r = 0; r < gz.rows(); ++r)
      for (std::size_t c = 0; c < gz.cols(); ++c) g.bias[r] += gz.at(r, c);

    Mat gin = matmul(transpose(layer.weight), gz);
    if (i > 0) {
      // The stored input of layer i is the rectifier output of layer
      // i-1, so its positive entries mark the active units.
      for (std::size_t k = 0; k < gin.size(); ++k)
        if (!(input.data()[k] > 0.0)) gin.data()[k] = 0.0;
    }
    gz = std::move(gin);
  }
  result.grad_input = std::move(gz);
  return result;
}

MomentumPair make_momentum_pair(EncoderParams f, double m) {
  if (m < 0.0 || m > 1.0) throw std::invalid_argument("momentum must be in [0, 1]");
  MomentumPair pair;
  pair.g = f;  // exact copy at initialization
  pair.f = std::move(f);
  pair.m = m;
  return pair;
}

void momentum_update(MomentumPair& pair) {
  const double m = pair.m;
  for (std::size_t i = 0; i < pair.f.layers.size(); ++i) {
    auto& gl = pair.g.layers[i];
    const auto& fl = pair.f.layers[i];
    for (std::size_t k = 0; k < gl.weight.size(); ++k)
      gl.weight.data()[k] = m * gl.weight.data()[k] + (1.0 - m) * fl.weight.data()[k];
    for (std::size_t k = 0; k < gl.bias.size(); ++k)
      gl.bias[k] = m * gl.bias[k] + (1.0 - m) * fl.bias[k];
  }
}

EncoderParams zeros_like(const EncoderParams& params) {
  EncoderParams out;
  out.layers.reserve(params.layers.size());
  for (const auto& l : params.layers) {
    LinearLayer z;
    z.weight = Mat(l.weight.rows(), l.weight.cols());
    z.bias.assign(l.bias.size(), 0.0);
    out.layers.push_back(std::move(z));
  }
  return out;
}

void accumulate(EncoderParams& into, const EncoderParams& grads) {
  if (into.layers.size() != grads.layers.size())
    throw std::invalid_argument("layer count mismatch in accumulate");
  for (std::size_t i = 0; i < into.layers.size(); ++i) {
    into.layers[i].weight += grads.layers[i].weight;
    for (std::size_t k = 0; k < into.layers[i].bias.size(); ++k)
      into.layers[i].bias[k] += grads.layers[i].bias[k];
  }
}

double param_norm(const EncoderParams& params) {
  double ss = 0.0;
  for (const auto& l : params.layers) {
    for (std::size_t k = 0; k < l.weight.size(); ++k)
      ss += l.weight.data()[k] * l.weight.data()[k];
    for (double b : l.bias) ss += b * b;
  }
  return std::sqrt(ss);
}

double param_max_abs_diff(const EncoderParams& a, const EncoderParams& b) {
  if (a.layers.size() != b.layers.size())
    throw std::invalid_argument("layer count mismatch");
  double worst = 0.0;
  for (std::size_t i = 0; i < a.layers.size(); ++i) {
    worst = std::max(worst, max_abs_diff(a.layers[i].weight, b.layers[i].weight));
    for (std::size_t k = 0; k < a.layers[i].bias.size(); ++k)
      worst = std::max(worst, std::fabs(a.layers[i].bias[k] - b.layers[i].bias[k]));
  }
  return worst;
}

}  // namespace xmoco
