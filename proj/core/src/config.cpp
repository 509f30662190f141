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

#include "xmoco/config.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace xmoco {

namespace {

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r");
  std::size_t e = s.find_last_not_of(" \t\r");
  if (b == std::string::npos) return "";
  return s.substr(b, e - b + 1);
}

double parse_double(const std::string& key, const std::string& value) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(value, &used);
  } catch (const std::exception&) {
    throw std::invalid_argument("config key '" + key + "': bad number '" + value + "'");
  }
  if (used != value.size())
    throw std::invalid_argument("config key '" + key + "': bad number '" + value + "'");
  return v;
}

std::size_t parse_count(const std::string& key, const std::string& value) {
  const double v = parse_double(key, value);
  if (v < 0 || v != static_cast<double>(static_cast<std::size_t>(v)))
    throw std::invalid_argument("config key '" + key + "': expected a count, got '" +
                                value + "'");
  return static_cast<std::size_t>(v);
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "1" || value == "true" || value == "on" || value == "yes") return true;
  if (value == "0" || value == "false" || value == "off" || value == "no") return false;
  throw std::invalid_argument("config key '" + key + "': expected a boolean, got '" +
                              value + "'");
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

void TrainConfig::set_key(const std::string& key, const std::string& value) {
  if (key == "tau") tau = parse_double(key, value);
  else if (key == "xi") xi = parse_double(key, value);
  else if (key == "lambda") lambda = parse_double(key, value);
  else if (key == "sinkhorn_iters") sinkhorn_iters = parse_count(key, value);
  else if (key == "uniform_labels") uniform_labels = parse_bool(key, value);
  else if (key == "xsim_reg") xsim_reg = parse_bool(key, value);
  else if (key == "bank_size") bank_size = parse_count(key, value);
  else if (key == "prob_queue") prob_queue = parse_count(key, value);
  else if (key == "batch_size") batch_size = parse_count(key, value);
  else if (key == "epochs") epochs = parse_count(key, value);
  else if (key == "base_lr") base_lr = parse_double(key, value);
  else if (key == "sgd_momentum") sgd_momentum = parse_double(key, value);
  else if (key == "weight_decay") weight_decay = parse_double(key, value);
  else if (key == "ema_m") ema_m = parse_double(key, value);
  else if (key == "seed") seed = static_cast<std::uint64_t>(parse_count(key, value));
  else if (key == "d_in") d_in = parse_count(key, value);
  else if (key == "feat_dim") feat_dim = parse_count(key, value);
  else if (key == "hidden") hidden = parse_count(key, value);
  else if (key == "mlp_layers") mlp_layers = parse_count(key, value);
  else if (key == "dataset") dataset = value;
  else if (key == "dataset_labeled") dataset_labeled = parse_bool(key, value);
  else if (key == "classes") classes = parse_count(key, value);
  else if (key == "per_class") per_class = parse_count(key, value);
  else if (key == "separation") separation = parse_double(key, value);
  else if (key == "noise_sigma") transform.noise_sigma = parse_double(key, value);
  else if (key == "scale_min") transform.scale_min = parse_double(key, value);
  else if (key == "scale_max") transform.scale_max = parse_double(key, value);
  else if (key == "mask_fraction") transform.mask_fraction = parse_double(key, value);
  else if (key == "flip_prob") transform.flip_prob = parse_double(key, value);
  else if (key == "checkpoint_every") checkpoint_every = parse_count(key, value);
  else throw std::invalid_argument("unknown config key '" + key + "'");
}

void TrainConfig::resolve_and_validate() {
  if (base_lr <= 0.0)
    base_lr = 0.0675 * static_cast<double>(batch_size) / 256.0;

  if (tau <= 0.0) throw std::invalid_argument("tau must be > 0");
  if (lambda <= 0.0) throw std::invalid_argument("lambda must be > 0");
  if (bank_size == 0) throw std::invalid_argument("bank_size must be >= 1");
  const double xi_lo = 1.0 / static_cast<double>(bank_size + 1);
  if (xi < xi_lo || xi > 1.0)
    throw std::invalid_argument("xi must lie in [1/(K+1), 1]");
  if (sinkhorn_iters < 1) throw std::invalid_argument("sinkhorn_iters must be >= 1");
  if (batch_size == 0) throw std::invalid_argument("batch_size must be >= 1");
  if (batch_size > bank_size)
    throw std::invalid_argument("batch_size must not exceed bank_size");
  if (base_lr <= 0.0) throw std::invalid_argument("base_lr must be > 0");
  if (sgd_momentum < 0.0 || sgd_momentum >= 1.0)
    throw std::invalid_argument("sgd_momentum must be in [0, 1)");
  if (weight_decay < 0.0) throw std::invalid_argument("weight_decay must be >= 0");
  if (ema_m < 0.0 || ema_m > 1.0) throw std::invalid_argument("ema_m must be in [0, 1]");
  if (d_in == 0 || feat_dim == 0) throw std::invalid_argument("degenerate dims");
  if (mlp_layers < 1 || (mlp_layers > 1 && hidden == 0))
    throw std::invalid_argument("bad encoder architecture");
  if (dataset.empty()) {
    if (classes == 0 || per_class == 0)
      throw std::invalid_argument("blob dataset needs classes and per_class");
    if (separation <= 0.0) throw std::invalid_argument("separation must be > 0");
    if (classes * per_class < batch_size)
      throw std::invalid_argument("dataset smaller than one batch");
  }
  transform.validate();
}

std::vector<std::pair<std::string, std::string>> TrainConfig::to_key_values() const {
  std::vector<std::pair<std::string, std::string>> kv;
  kv.emplace_back("tau", fmt(tau));
  kv.emplace_back("xi", fmt(xi));
  kv.emplace_back("lambda", fmt(lambda));
  kv.emplace_back("sinkhorn_iters", std::to_string(sinkhorn_iters));
  kv.emplace_back("uniform_labels", uniform_labels ? "1" : "0");
  kv.emplace_back("xsim_reg", xsim_reg ? "1" : "0");
  kv.emplace_back("bank_size", std::to_string(bank_size));
  kv.emplace_back("prob_queue", std::to_string(prob_queue));
  kv.emplace_back("batch_size", std::to_string(batch_size));
  kv.emplace_back("epochs", std::to_string(epochs));
  kv.emplace_back("base_lr", fmt(base_lr));
  kv.emplace_back("sgd_momentum", fmt(sgd_momentum));
  kv.emplace_back("weight_decay", fmt(weight_decay));
  kv.emplace_back("ema_m", fmt(ema_m));
  kv.emplace_back("seed", std::to_string(seed));
  kv.emplace_back("d_in", std::to_string(d_in));
  kv.emplace_back("feat_dim", std::to_string(feat_dim));
  kv.emplace_back("hidden", std::to_string(hidden));
  kv.emplace_back("mlp_layers", std::to_string(mlp_layers));
  kv.emplace_back("dataset", dataset);
  kv.emplace_back("dataset_labeled", dataset_labeled ? "1" : "0");
  kv.emplace_back("classes", std::to_string(classes));
  kv.emplace_back("per_class", std::to_string(per_class));
  kv.emplace_back("separation", fmt(separation));
  kv.emplace_back("noise_sigma", fmt(transform.noise_sigma));
  kv.emplace_back("scale_min", fmt(transform.scale_min));
  kv.emplace_back("scale_max", fmt(transform.scale_max));
  kv.emplace_back("mask_fraction", fmt(transform.mask_fraction));
  kv.emplace_back("flip_prob", fmt(transform.flip_prob));
  kv.emplace_back("checkpoint_every", std::to_string(checkpoint_every));
  return kv;
}

TrainConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open config file: " + path);
  TrainConfig config;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string stripped = trim(line);
    if (stripped.empty() || stripped[0] == '#') continue;
    const std::size_t eq = stripped.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument(path + ":" + std::to_string(lineno) +
                                  ": expected key=value, got '" + stripped + "'");
    const std::string key = trim(stripped.substr(0, eq));
    const std::string value = trim(stripped.substr(eq + 1));
    try {
      config.set_key(key, value);
    } catch (const std::invalid_argument& e) {
      throw std::invalid_argument(path + ":" + std::to_string(lineno) + ": " +
                                  e.what());
    }
  }
  return config;
}

void apply_overrides(TrainConfig& config,
                     const std::vector<std::string>& assignments) {
  for (const auto& a : assignments) {
    const std::size_t eq = a.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("override must be key=value, got '" + a + "'");
    config.set_key(trim(a.substr(0, eq)), trim(a.substr(eq + 1)));
  }
}

}  // namespace xmoco
