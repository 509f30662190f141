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

#include "xmoco/checkpoint.hpp"

#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

namespace xmoco {

namespace {

constexpr const char* kMagic = "XMCKPT1";

Mat bias_as_mat(const std::vector<double>& bias) {
  return Mat(1, bias.size(), std::vector<double>(bias));
}

std::vector<double> mat_as_bias(const Mat& m) {
  if (m.rows() != 1) throw std::runtime_error("bias tensor must have one row");
  return std::vector<double>(m.data(), m.data() + m.size());
}

void write_tensor(std::ostream& out, const std::string& name, const Mat& m) {
  out << name << " " << m.rows() << " " << m.cols() << "\n";
  write_xmc1(out, m);
}

void write_params(std::ostream& out, const std::string& prefix,
                  const EncoderParams& params) {
  for (std::size_t i = 0; i < params.layers.size(); ++i) {
    const std::string base = prefix + ".layer" + std::to_string(i);
    write_tensor(out, base + ".weight", params.layers[i].weight);
    write_tensor(out, base + ".bias", bias_as_mat(params.layers[i].bias));
  }
}

EncoderParams params_from(const std::map<std::string, Mat>& tensors,
                          const std::string& prefix, std::size_t n_layers) {
  EncoderParams params;
  for (std::size_t i = 0; i < n_layers; ++i) {
    const std::string base = prefix + ".layer" + std::to_string(i);
    const auto w = tensors.find(base + ".weight");
    const auto b = tensors.find(base + ".bias");
    if (w == tensors.end() || b == tensors.end())
      throw std::runtime_error("checkpoint is missing tensor " + base);
    params.layers.push_back(LinearLayer{w->second, mat_as_bias(b->second)});
  }
  return params;
}

}  // namespace

void save_checkpoint(const std::string& path, const TrainConfig& config,
                     const TrainState& state) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);

  out << kMagic << "\n";
  out << "epoch " << state.epoch << "\n";
  out << "step " << state.step << "\n";
  out << "rng " << state.rng << "\n";
  const auto kv = config.to_key_values();
  out << "config " << kv.size() << "\n";
  for (const auto& [k, v] : kv) out << k << " " << v << "\n";

  const std::size_t n_layers = state.pair.f.layers.size();
  const std::size_t tensor_count = 3 * n_layers * 2 + 2 + 2;
  out << "tensors " << tensor_count << "\n";
  write_params(out, "f", state.pair.f);
  write_params(out, "g", state.pair.g);
  write_params(out, "vel", state.velocity);
  write_tensor(out, "bank_s", state.bank_s.snapshot());
  write_tensor(out, "bank_t", state.bank_t.snapshot());
  write_tensor(out, "queue_s", state.queue_s.contents());
  write_tensor(out, "queue_t", state.queue_t.contents());
  if (!out) throw std::runtime_error("checkpoint write failed: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open for reading: " + path);

  std::string line;
  if (!std::getline(in, line) || line != kMagic)
    throw std::runtime_error("not a checkpoint file: " + path);

  std::size_t epoch = 0, step = 0;
  std::string rng_state;
  TrainConfig config;
  std::size_t tensor_count = 0;

  while (std::getline(in, line)) {
    std::istringstream ls(line);
    std::string tag;
    ls >> tag;
    if (tag == "epoch") ls >> epoch;
    else if (tag == "step") ls >> step;
    else if (tag == "rng") std::getline(ls >> std::ws, rng_state);
    else if (tag == "config") {
      std::size_t count = 0;
      ls >> count;
      for (std::size_t i = 0; i < count; ++i) {
        if (!std::getline(in, line))
          throw std::runtime_error("truncated checkpoint config block");
        const std::size_t sp = line.find(' ');
        const std::string key = line.substr(0, sp);
        const std::string value = sp == std::string::npos ? "" : line.substr(sp + 1);
        config.set_key(key, value);
      }
    } else if (tag == "tensors") {
      ls >> tensor_count;
      break;
    } else {
      throw std::runtime_error("unknown checkpoint header line: " + line);
    }
  }

  std::map<std::string, Mat> tensors;
  for (std::size_t i = 0; i < tensor_count; ++i) {
    if (!std::getline(in, line))
      throw std::runtime_error("truncated checkpoint tensor manifest");
    std::istringstream ms(line);
    std::string name;
    std::size_t rows = 0, cols = 0;
    if (!(ms >> name >> rows >> cols))
      throw std::runtime_error("bad tensor manifest line: " + line);
    Mat m = read_xmc1(in);
    if (m.rows() != rows || m.cols() != cols)
      throw std::runtime_error("tensor shape mismatch for " + name);
    tensors.emplace(std::move(name), std::move(m));
  }

  config.resolve_and_validate();
  EncoderParams f = params_from(tensors, "f", config.mlp_layers);
  EncoderParams g = params_from(tensors, "g", config.mlp_layers);
  EncoderParams vel = params_from(tensors, "vel", config.mlp_layers);

  MomentumPair pair = make_momentum_pair(std::move(f), config.ema_m);
  pair.g = std::move(g);

  const auto need = [&](const char* name) -> const Mat& {
    const auto it = tensors.find(name);
    if (it == tensors.end())
      throw std::runtime_error(std::string("checkpoint is missing tensor ") + name);
    return it->second;
  };

  TrainState state{std::move(pair),
                   std::move(vel),
                   MemoryBank::from_snapshot(need("bank_s")),
                   MemoryBank::from_snapshot(need("bank_t")),
                   ProbQueue::from_contents(config.prob_queue, need("queue_s")),
                   ProbQueue::from_contents(config.prob_queue, need("queue_t")),
                   epoch,
                   step,
                   Rng(0)};
  std::istringstream rs(rng_state);
  if (!(rs >> state.rng))
    throw std::runtime_error("bad rng state in checkpoint");
  return Checkpoint{std::move(config), std::move(state)};
}

}  // namespace xmoco
