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

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "xmoco/checkpoint.hpp"
#include "xmoco/config.hpp"
#include "xmoco/data.hpp"
#include "xmoco/encoder.hpp"
#include "xmoco/eval.hpp"
#include "xmoco/gradcheck.hpp"
#include "xmoco/matrix.hpp"
#include "xmoco/pseudolabel.hpp"
#include "xmoco/training.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitRuntime = 2;
constexpr int kExitCheckFailed = 3;

using nlohmann::json;

std::vector<std::string> provenance_lines(const xmoco::TrainConfig& config) {
  std::vector<std::string> lines;
  std::string line;
  for (const auto& [k, v] : config.to_key_values()) {
    if (!line.empty()) line += " ";
    line += k + "=" + v;
    if (line.size() > 90) {
      lines.push_back(line);
      line.clear();
    }
  }
  if (!line.empty()) lines.push_back(line);
  return lines;
}

void write_resolved_config(const std::string& path,
                           const xmoco::TrainConfig& config) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  for (const auto& [k, v] : config.to_key_values()) out << k << " = " << v << "\n";
}

xmoco::Dataset dataset_for(const xmoco::TrainConfig& config) {
  if (!config.dataset.empty())
    return xmoco::load_delimited(config.dataset, config.dataset_labeled);
  return xmoco::make_blobs(config.classes, config.per_class, config.d_in,
                           config.separation, config.seed);
}

// Frozen-encoder embeddings for a whole dataset. The penultimate flag
// probes the activation feeding the last linear layer instead of the
// normalized head output (useful because the head is part of the pretext
// task); either way columns come back unit-norm so cosine comparisons
// apply.
xmoco::Mat embed(const xmoco::EncoderParams& f, const xmoco::Mat& samples,
                 bool penultimate) {
  if (!penultimate) return xmoco::encoder_forward(f, samples);
  xmoco::ForwardTape tape;
  xmoco::encoder_forward(f, samples, &tape);
  return xmoco::l2_normalize_columns(tape.inputs.back());
}

struct Split {
  xmoco::Mat train_feats, test_feats;
  std::vector<int> train_labels, test_labels;
};

Split split_features(const xmoco::Mat& feats, const std::vector<int>& labels,
                     double train_frac, std::uint64_t split_seed) {
  const std::size_t m = feats.cols();
  xmoco::Rng rng(split_seed);
  const auto perm = rng.permutation(m);
  const auto ntr = static_cast<std::size_t>(train_frac * static_cast<double>(m));
  if (ntr == 0 || ntr == m) throw std::invalid_argument("degenerate split");
  Split sp;
  sp.train_feats = xmoco::Mat(feats.rows(), ntr);
  sp.test_feats = xmoco::Mat(feats.rows(), m - ntr);
  sp.train_labels.resize(ntr);
  sp.test_labels.resize(m - ntr);
  for (std::size_t i = 0; i < m; ++i) {
    const std::size_t src = perm[i];
    if (i < ntr) {
      for (std::size_t r = 0; r < feats.rows(); ++r)
        sp.train_feats.at(r, i) = feats.at(r, src);
      sp.train_labels[i] = labels[src];
    } else {
      for (std::size_t r = 0; r < feats.rows(); ++r)
        sp.test_feats.at(r, i - ntr) = feats.at(r, src);
      sp.test_labels[i - ntr] = labels[src];
    }
  }
  return sp;
}

int cmd_gen_data(std::size_t classes, std::size_t per_class, std::size_t d_in,
                 double separation, std::uint64_t seed, const std::string& out) {
  const xmoco::Dataset ds =
      xmoco::make_blobs(classes, per_class, d_in, separation, seed);
  std::vector<std::string> header;
  header.push_back("classes=" + std::to_string(classes) +
                   " per_class=" + std::to_string(per_class) +
                   " d_in=" + std::to_string(d_in) +
                   " separation=" + std::to_string(separation) +
                   " seed=" + std::to_string(seed));
  xmoco::save_delimited(out, ds, header);
  std::cout << "wrote " << ds.count() << " samples (" << ds.dim()
            << " dims, " << classes << " classes) to " << out << "\n";
  return kExitOk;
}

int cmd_train(const std::string& config_path,
              const std::vector<std::string>& overrides, const std::string& out_dir,
              const std::string& resume_path) {
  xmoco::TrainConfig config;
  if (!config_path.empty()) config = xmoco::load_config_file(config_path);
  xmoco::apply_overrides(config, overrides);
  config.resolve_and_validate();

  std::filesystem::create_directories(out_dir);
  const xmoco::Dataset ds = dataset_for(config);
  write_resolved_config(out_dir + "/config_resolved.cfg", config);

  std::ofstream metrics(out_dir + "/metrics.jsonl", std::ios::binary);
  if (!metrics) throw std::runtime_error("cannot open metrics file");

  xmoco::RunHooks hooks;
  hooks.on_step = [&](const xmoco::StepMetrics& m) {
    json obj{{"step", m.step},
             {"epoch", m.epoch},
             {"lr", m.lr},
             {"loss", m.loss},
             {"term_label_s_on_pt", m.term_label_s_on_pt},
             {"term_label_t_on_ps", m.term_label_t_on_ps},
             {"term_xsim_s_on_pt", m.term_xsim_s_on_pt},
             {"term_xsim_t_on_ps", m.term_xsim_t_on_ps},
             {"grad_norm", m.grad_norm}};
    metrics << obj.dump() << "\n";
  };
  hooks.on_epoch_end = [&](std::size_t epoch, const xmoco::TrainState& state) {
    if (config.checkpoint_every > 0 && epoch % config.checkpoint_every == 0 &&
        epoch < config.epochs) {
      xmoco::save_checkpoint(
          out_dir + "/checkpoint_epoch" + std::to_string(epoch) + ".xmckpt", config,
          state);
    }
  };

  if (resume_path.empty()) {
    xmoco::TrainState state = xmoco::init_train_state(config);
    if (config.epochs == 0) {
      xmoco::save_checkpoint(out_dir + "/checkpoint_final.xmckpt", config, state);
      std::cout << "epochs=0: wrote the initial checkpoint only\n";
      return kExitOk;
    }
    xmoco::resume_from(state, config, ds, hooks);
    xmoco::save_checkpoint(out_dir + "/checkpoint_final.xmckpt", config, state);
  } else {
    xmoco::Checkpoint ckpt = xmoco::load_checkpoint(resume_path);
    // CLI overrides (notably epochs) may extend the loaded run.
    xmoco::apply_overrides(ckpt.config, overrides);
    ckpt.config.resolve_and_validate();
    xmoco::resume_from(ckpt.state, ckpt.config, ds, hooks);
    xmoco::save_checkpoint(out_dir + "/checkpoint_final.xmckpt", ckpt.config,
                           ckpt.state);
  }
  std::cout << "training finished; artifacts in " << out_dir << "\n";
  return kExitOk;
}

int cmd_eval(bool linear, const std::string& ckpt_path, const std::string& data_path,
             std::size_t k, double train_frac, std::uint64_t split_seed,
             bool penultimate, std::size_t probe_steps, double probe_lr,
             const std::string& out_path) {
  const xmoco::Checkpoint ckpt = xmoco::load_checkpoint(ckpt_path);
  const xmoco::Dataset ds = xmoco::load_delimited(data_path, /*has_labels=*/true);
  if (ds.labels.empty()) throw std::invalid_argument("evaluation needs labels");

  const xmoco::Mat feats = embed(ckpt.state.pair.f, ds.samples, penultimate);
  const Split sp = split_features(feats, ds.labels, train_frac, split_seed);

  xmoco::EvalReport report;
  report.k = k;
  report.train_size = sp.train_labels.size();
  report.test_size = sp.test_labels.size();
  json obj{{"k", k},
           {"train_size", report.train_size},
           {"test_size", report.test_size},
           {"penultimate", penultimate}};
  if (linear) {
    report.linear_accuracy =
        xmoco::linear_probe(sp.train_feats, sp.train_labels, sp.test_feats,
                            sp.test_labels, probe_steps, probe_lr);
    obj["linear_accuracy"] = report.linear_accuracy;
    obj["steps"] = probe_steps;
    obj["lr"] = probe_lr;
  } else {
    report.knn_accuracy = xmoco::knn_eval(sp.train_feats, sp.train_labels,
                                          sp.test_feats, sp.test_labels, k);
    obj["knn_accuracy"] = report.knn_accuracy;
  }

  const std::string text = obj.dump();
  std::cout << text << "\n";
  if (!out_path.empty()) {
    std::ofstream out(out_path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open for writing: " + out_path);
    out << text << "\n";
  }
  return kExitOk;
}

int cmd_sinkhorn(const std::string& in_path, const std::string& out_path, double xi,
                 double lambda, std::size_t iters) {
  const xmoco::Mat probs = xmoco::load_xmc1(in_path);
  xmoco::ProbMatrix p;
  p.probs = probs;
  p.temperature = 1.0;
  const xmoco::PseudoLabelMatrix labels =
      xmoco::sinkhorn_labels(p, xi, lambda, iters);
  xmoco::save_xmc1(out_path, labels.y);
  std::cout << "wrote " << labels.y.rows() << "x" << labels.y.cols()
            << " pseudo-label matrix to " << out_path << "\n";
  return kExitOk;
}

int cmd_gradcheck(std::size_t instances, std::uint64_t seed, double step) {
  xmoco::GradCheckOptions options;
  options.instances = instances;
  options.seed = seed;
  options.fd_step = step;
  const xmoco::GradCheckReport report = xmoco::run_gradcheck(options);
  std::cout << "gradcheck: " << report.instances
            << " instances; worst logit-gradient rel err " << report.worst_loss_rel
            << " (tol " << options.loss_tol << "); worst pipeline rel err "
            << report.worst_pipeline_rel << " (tol " << options.pipeline_tol
            << ")\n";
  std::cout << (report.passed ? "PASS" : "FAIL") << "\n";
  return report.passed ? kExitOk : kExitCheckFailed;
}

struct AblationRow {
  std::string value;
  double knn = 0.0;
  double wall_seconds = 0.0;
  std::string status = "ok";
};

AblationRow run_one(const xmoco::TrainConfig& config, const xmoco::Dataset& ds,
                    const std::string& value_label) {
  AblationRow row;
  row.value = value_label;
  const auto t0 = std::chrono::steady_clock::now();
  try {
    const xmoco::TrainState state = xmoco::run(config, ds);
    const xmoco::Mat feats = embed(state.pair.f, ds.samples, false);
    const Split sp = split_features(feats, ds.labels, 0.8, 17);
    row.knn = xmoco::knn_eval(sp.train_feats, sp.train_labels, sp.test_feats,
                              sp.test_labels, 5);
  } catch (const std::exception& e) {
    row.status = std::string("error: ") + e.what();
  }
  row.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return row;
}

int cmd_ablate(const std::string& axis, const std::vector<std::string>& values,
               const std::string& config_path,
               const std::vector<std::string>& overrides,
               const std::string& out_path) {
  xmoco::TrainConfig base;
  if (!config_path.empty()) base = xmoco::load_config_file(config_path);
  xmoco::apply_overrides(base, overrides);
  base.resolve_and_validate();

  const xmoco::Dataset ds = dataset_for(base);
  if (ds.labels.empty())
    throw std::invalid_argument("ablation needs a labeled dataset");

  std::vector<AblationRow> rows;
  if (axis == "xi" || axis == "K") {
    if (values.empty()) throw std::invalid_argument("axis needs --values");
    for (const auto& v : values) {
      xmoco::TrainConfig config = base;
      config.set_key(axis == "xi" ? "xi" : "bank_size", v);
      config.resolve_and_validate();
      rows.push_back(run_one(config, ds, v));
      std::cout << axis << "=" << v << " knn=" << rows.back().knn << " ("
                << rows.back().status << ")\n";
    }
  } else if (axis == "loss-switches") {
    const std::pair<const char*, std::pair<bool, bool>> grid[] = {
        {"uniform+xsim", {true, true}},
        {"uniform-only", {true, false}},
        {"xsim-only", {false, true}},
        {"none", {false, false}}};
    for (const auto& [label, switches] : grid) {
      xmoco::TrainConfig config = base;
      config.uniform_labels = switches.first;
      config.xsim_reg = switches.second;
      rows.push_back(run_one(config, ds, label));
      std::cout << label << " knn=" << rows.back().knn << " ("
                << rows.back().status << ")\n";
    }
  } else {
    throw std::invalid_argument("unknown ablation axis: " + axis);
  }

  std::ofstream out(out_path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + out_path);
  for (const auto& line : provenance_lines(base)) out << "# " << line << "\n";
  out << "# axis=" << axis << "\n";
  out << "value,knn_accuracy,wall_time_seconds,status\n";
  char buf[64];
  for (const auto& row : rows) {
    std::snprintf(buf, sizeof buf, "%.17g", row.knn);
    out << row.value << "," << buf << "," << row.wall_seconds << ","
        << row.status << "\n";
  }
  std::cout << "wrote " << rows.size() << " rows to " << out_path << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "xmoco: contrastive representation-learning engine with "
      "transport-based soft pseudo-labels"};
  app.require_subcommand(1);

  // gen-data
  auto* gen = app.add_subcommand("gen-data", "Generate a synthetic blob dataset");
  std::size_t gen_classes = 3, gen_per_class = 400, gen_d_in = 16;
  double gen_separation = 6.0;
  std::uint64_t gen_seed = 42;
  std::string gen_out;
  gen->add_option("--classes", gen_classes, "Number of clusters")
      ->capture_default_str();
  gen->add_option("--per-class", gen_per_class, "Samples per cluster")
      ->capture_default_str();
  gen->add_option("--d-in", gen_d_in, "Input dimension")->capture_default_str();
  gen->add_option("--separation", gen_separation,
                  "Minimum centroid distance in intra-cluster stds")
      ->capture_default_str();
  gen->add_option("--seed", gen_seed, "Generator seed")->capture_default_str();
  gen->add_option("--out", gen_out, "Output CSV path")->required();

  // train
  auto* train = app.add_subcommand("train", "Train an encoder");
  std::string train_config, train_out = "run", train_resume;
  std::vector<std::string> train_set;
  train->add_option("--config", train_config, "key=value config file");
  train->add_option("--set", train_set, "Config override key=value (repeatable)");
  train->add_option("--out", train_out, "Output directory")->capture_default_str();
  train->add_option("--resume", train_resume, "Checkpoint to resume from");

  // eval-knn / eval-linear
  std::string eval_ckpt, eval_data, eval_out;
  std::size_t eval_k = 5, probe_steps = 500;
  double eval_train_frac = 0.8, probe_lr = 0.5;
  std::uint64_t eval_split_seed = 17;
  bool eval_penultimate = false;
  auto add_eval_common = [&](CLI::App* cmd) {
    cmd->add_option("--checkpoint", eval_ckpt, "Trained checkpoint")->required();
    cmd->add_option("--data", eval_data, "Labeled CSV dataset")->required();
    cmd->add_option("--train-frac", eval_train_frac, "Train fraction of the split")
        ->capture_default_str();
    cmd->add_option("--split-seed", eval_split_seed, "Split shuffle seed")
        ->capture_default_str();
    cmd->add_flag("--penultimate", eval_penultimate,
                  "Probe the layer feeding the final linear layer");
    cmd->add_option("--out", eval_out, "Write the JSON report here too");
  };
  auto* eknn = app.add_subcommand("eval-knn", "k-NN accuracy on frozen features");
  add_eval_common(eknn);
  eknn->add_option("--k", eval_k, "Neighbor count")->capture_default_str();
  auto* elin =
      app.add_subcommand("eval-linear", "Linear-probe accuracy on frozen features");
  add_eval_common(elin);
  elin->add_option("--steps", probe_steps, "Probe gradient steps")
      ->capture_default_str();
  elin->add_option("--lr", probe_lr, "Probe learning rate")->capture_default_str();

  // sinkhorn
  auto* sink = app.add_subcommand(
      "sinkhorn", "Solve pseudo-labels for a probability matrix (XMC1 in/out)");
  std::string sink_in, sink_out;
  double sink_xi = 0.9, sink_lambda = 2.0;
  std::size_t sink_iters = 3;
  sink->add_option("--in", sink_in, "Input XMC1 probability matrix")->required();
  sink->add_option("--out", sink_out, "Output XMC1 pseudo-label matrix")->required();
  sink->add_option("--xi", sink_xi, "Positive-row mass")->capture_default_str();
  sink->add_option("--lambda", sink_lambda, "Entropic regularization strength")
      ->capture_default_str();
  sink->add_option("--iters", sink_iters, "Sinkhorn sweeps")->capture_default_str();

  // gradcheck
  auto* gc = app.add_subcommand("gradcheck",
                                "Verify analytic gradients by finite differences");
  std::size_t gc_instances = 20;
  std::uint64_t gc_seed = 7;
  double gc_step = 1e-5;
  gc->add_option("--instances", gc_instances, "Random instances per suite")
      ->capture_default_str();
  gc->add_option("--seed", gc_seed, "Instance seed")->capture_default_str();
  gc->add_option("--step", gc_step, "Central difference step")
      ->capture_default_str();

  // ablate
  auto* ab = app.add_subcommand("ablate",
                                "Sweep one axis, training + k-NN eval per value");
  std::string ab_axis, ab_config, ab_out = "ablation.csv";
  std::vector<std::string> ab_values, ab_set;
  ab->add_option("--axis", ab_axis, "One of: xi, K, loss-switches")->required();
  ab->add_option("--values", ab_values, "Axis values (repeat or comma separated)")
      ->delimiter(',');
  ab->add_option("--config", ab_config, "key=value config file");
  ab->add_option("--set", ab_set, "Config override key=value (repeatable)");
  ab->add_option("--out", ab_out, "Output CSV table")->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed())
      return cmd_gen_data(gen_classes, gen_per_class, gen_d_in, gen_separation,
                          gen_seed, gen_out);
    if (train->parsed())
      return cmd_train(train_config, train_set, train_out, train_resume);
    if (eknn->parsed())
      return cmd_eval(false, eval_ckpt, eval_data, eval_k, eval_train_frac,
                      eval_split_seed, eval_penultimate, probe_steps, probe_lr,
                      eval_out);
    if (elin->parsed())
      return cmd_eval(true, eval_ckpt, eval_data, eval_k, eval_train_frac,
                      eval_split_seed, eval_penultimate, probe_steps, probe_lr,
                      eval_out);
    if (sink->parsed())
      return cmd_sinkhorn(sink_in, sink_out, sink_xi, sink_lambda, sink_iters);
    if (gc->parsed()) return cmd_gradcheck(gc_instances, gc_seed, gc_step);
    if (ab->parsed())
      return cmd_ablate(ab_axis, ab_values, ab_config, ab_set, ab_out);
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitOk;
}
