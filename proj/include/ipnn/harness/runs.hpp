// Copyright 2026 The ipnn Authors.
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

#pragma once

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "ipnn/classical/oracle.hpp"
#include "ipnn/data/idx.hpp"
#include "ipnn/eval/metrics.hpp"
#include "ipnn/harness/checkpoint.hpp"
#include "ipnn/harness/trainer.hpp"

namespace ipnn::harness {

namespace fs = std::filesystem;

/// Train split plus the optional evaluation split named by cfg.eval_split.
struct Datasets {
  data::Dataset train;
  std::optional<data::Dataset> eval;
};

inline Datasets load_datasets(const ExperimentConfig& cfg) {
  Datasets out;
  if (cfg.dataset == "binary_decimal") {
    out.train = data::gen_binary_decimal(cfg.bits);
    if (cfg.eval_split != "none") out.eval = out.train;
    return out;
  }
  const fs::path dir = resolve_data_dir(cfg);
  out.train = data::take_first(data::load_mnist_dir(dir, "train"), cfg.train_limit);
  if (cfg.eval_split == "test") out.eval = data::take_first(data::load_mnist_dir(dir, "t10k"), cfg.test_limit);
  if (cfg.eval_split == "train") out.eval = out.train;
  return out;
}

/// End-of-run numbers written to summary.csv.
struct RunSummary {
  std::string run_id;
  std::size_t joint_points = 0;
  std::size_t steps = 0;
  double last_epoch_loss = 0.0;  // mean logged main loss over the final epoch
  double train_acc = 0.0;        // frozen-statistics evaluation on the train set
  double train_loss = 0.0;
  std::optional<double> eval_acc;
  std::optional<double> eval_loss;
  std::size_t supported_points = 0;
  double pure_fraction = 0.0;
  bool capacity_ok = true;
  std::optional<std::size_t> steps_to_threshold;
  std::vector<StepRecord> history;
  std::vector<std::size_t> eval_cluster_ids;
  std::vector<std::size_t> eval_labels;
};

inline void write_summary_header(std::ostream& os) {
  os << "run_id,joint_points,steps,last_epoch_loss,train_acc,train_loss,eval_acc,eval_loss,supported_points,"
        "pure_fraction,capacity_ok,steps_to_threshold\n";
}

inline void write_summary_row(std::ostream& os, const RunSummary& s) {
  using detail::format;
  os << s.run_id << ',' << s.joint_points << ',' << s.steps << ',' << format(s.last_epoch_loss) << ','
     << format(s.train_acc) << ',' << format(s.train_loss) << ',' << (s.eval_acc ? format(*s.eval_acc) : "") << ','
     << (s.eval_loss ? format(*s.eval_loss) : "") << ',' << s.supported_points << ',' << format(s.pure_fraction)
     << ',' << (s.capacity_ok ? 1 : 0) << ','
     << (s.steps_to_threshold ? std::to_string(*s.steps_to_threshold) : std::string()) << '\n';
}

/// First step at which the mean main loss of the last `window` steps is at
/// or below threshold.
inline std::optional<std::size_t> steps_to_threshold(const std::vector<StepRecord>& history, double threshold,
                                                     std::size_t window = 20) {
  if (!(threshold > 0.0) || window == 0) return std::nullopt;
  double sum = 0.0;
  for (std::size_t i = 0; i < history.size(); ++i) {
    sum += history[i].loss;
    if (i >= window) sum -= history[i - window].loss;
    const std::size_t n = std::min(i + 1, window);
    if (n == window && sum / static_cast<double>(n) <= threshold) return history[i].step;
  }
  return std::nullopt;
}

/// Support share used by the purity audit: half of a uniform share.
inline double default_support_threshold(const head::SplitShape& split) {
  return 0.5 / static_cast<double>(split.joint_points());
}

struct TrainOptions {
  bool write_files = true;
  std::ostream* log = nullptr;  // progress lines, optional
};

/// Trains one configuration and writes, under cfg.output_dir:
/// manifest.txt (resolved config), metrics.csv, summary.csv and, unless
/// checkpoint = none, checkpoint.bin.
inline RunSummary run_train(const ExperimentConfig& cfg, const Datasets& data, const TrainOptions& opt = {}) {
  if (cfg.split.joint_points() < data.train.num_classes && opt.log) {
    *opt.log << "warning: split " << cfg.split.to_string() << " has " << cfg.split.joint_points()
             << " joint points for " << data.train.num_classes
             << " classes; a zero-loss solution is impossible (prod M_j < m)\n";
  }
  Trainer trainer(cfg, data.train);
  std::ofstream metrics;
  if (opt.write_files) {
    fs::create_directories(cfg.output_dir);
    std::ofstream(fs::path(cfg.output_dir) / "manifest.txt") << cfg.to_text();
    metrics.open(fs::path(cfg.output_dir) / "metrics.csv");
    write_metrics_header(metrics, trainer.sub_tasks());
  }

  RunSummary s;
  s.run_id = cfg.run_id;
  s.joint_points = cfg.split.joint_points();
  double epoch_loss = 0.0;
  std::size_t epoch_steps = 0, current_epoch = 0;
  trainer.run([&](const StepRecord& r) {
    if (r.epoch != current_epoch) {
      current_epoch = r.epoch;
      epoch_loss = 0.0;
      epoch_steps = 0;
    }
    epoch_loss += r.loss;
    ++epoch_steps;
    if (opt.write_files) write_metrics_row(metrics, cfg.run_id, r);
    if (opt.log && (r.step % 50 == 0 || r.step == 1)) {
      *opt.log << cfg.run_id << " epoch " << r.epoch << " step " << r.step << " loss " << r.loss;
      if (r.main_acc) *opt.log << " acc " << *r.main_acc;
      *opt.log << '\n';
    }
    s.history.push_back(r);
  });
  s.steps = trainer.steps();
  s.steps_to_threshold = steps_to_threshold(s.history, cfg.loss_threshold);
  s.last_epoch_loss = epoch_steps ? epoch_loss / static_cast<double>(epoch_steps) : 0.0;

  const auto& model = trainer.model();
  const EvalResult train_eval = evaluate(model, data.train, cfg.cluster_variable);
  s.train_acc = train_eval.accuracy;
  s.train_loss = train_eval.loss;
  if (data.eval) {
    const EvalResult ev = evaluate(model, *data.eval, cfg.cluster_variable);
    s.eval_acc = ev.accuracy;
    s.eval_loss = ev.loss;
    s.eval_cluster_ids = ev.cluster_ids;
    s.eval_labels = data.eval->labels;
  } else {
    s.eval_cluster_ids = train_eval.cluster_ids;
    s.eval_labels = data.train.labels;
  }
  const auto audit = head::convergence_audit(model.main, default_support_threshold(cfg.split));
  s.supported_points = audit.supported_points;
  s.pure_fraction = audit.pure_fraction();
  s.capacity_ok = audit.capacity_ok;

  if (opt.write_files) {
    std::ofstream summary(fs::path(cfg.output_dir) / "summary.csv");
    write_summary_header(summary);
    write_summary_row(summary, s);
    if (cfg.checkpoint != "none") {
      save_checkpoint(fs::path(cfg.output_dir) / "checkpoint.bin", cfg, model, cfg.checkpoint == "full");
    }
  }
  return s;
}

inline RunSummary run_train(const ExperimentConfig& cfg, const TrainOptions& opt = {}) {
  return run_train(cfg, load_datasets(cfg), opt);
}

struct EvalReport {
  EvalResult result;
  head::AuditReport audit;
};

/// Frozen-statistics evaluation of a checkpoint. When a config is supplied
/// its split must match the checkpoint's.
inline EvalReport run_eval(const fs::path& checkpoint, const data::Dataset& ds,
                           const std::optional<ExperimentConfig>& cfg = std::nullopt) {
  LoadedCheckpoint ck = load_checkpoint(checkpoint);
  if (cfg && !(cfg->split == ck.config.split)) {
    throw FormatError("checkpoint split " + ck.config.split.to_string() + " does not match config split " +
                      cfg->split.to_string());
  }
  EvalReport r;
  r.result = evaluate(ck.model, ds, ck.config.cluster_variable);
  r.audit = head::convergence_audit(ck.model.main, default_support_threshold(ck.config.split));
  return r;
}

/// Axis "key=v1,v2,...": one run per value. Split values use 'x' between
/// sizes ("2x5"); init_range values are symmetric half-widths.
struct SweepAxis {
  std::string key;
  std::vector<std::string> values;
};

inline SweepAxis parse_axis(const std::string& text) {
  const auto eq = text.find('=');
  if (eq == std::string::npos) throw ConfigError("--axis expects KEY=v1,v2,...");
  SweepAxis a{detail::trim(text.substr(0, eq)), {}};
  for (const auto& v : detail::split_on(text.substr(eq + 1), ','))
    if (!v.empty()) a.values.push_back(v);
  if (a.values.empty()) throw ConfigError("--axis has no values");
  return a;
}

/// Runs every point of the axis and writes sweep.csv (axis, value and the
/// summary columns) under base.output_dir.
inline std::vector<RunSummary> run_sweep(const ExperimentConfig& base, const SweepAxis& axis,
                                         const TrainOptions& opt = {}) {
  std::vector<RunSummary> out;
  std::ofstream csv;
  if (opt.write_files) {
    fs::create_directories(base.output_dir);
    csv.open(fs::path(base.output_dir) / "sweep.csv");
    csv << "axis,value,";
    write_summary_header(csv);
  }
  std::optional<Datasets> shared;
  for (const auto& value : axis.values) {
    ExperimentConfig cfg = base;
    set_key(cfg, axis.key, value);
    cfg.run_id = base.run_id + "_" + axis.key + "=" + value;
    cfg.output_dir = (fs::path(base.output_dir) / (axis.key + "=" + value)).string();
    finalize(cfg);
    const bool data_keys = axis.key == "dataset" || axis.key == "bits" || axis.key == "data_dir" ||
                           axis.key == "train_limit" || axis.key == "test_limit" || axis.key == "eval_split";
    if (!shared || data_keys) shared = load_datasets(cfg);
    out.push_back(run_train(cfg, *shared, opt));
    if (opt.write_files) {
      csv << axis.key << ',' << value << ',';
      write_summary_row(csv, out.back());
      csv.flush();
    }
  }
  return out;
}

/// Trains rounds models with seeds seed, seed+1, ...; clusters the evaluation
/// split by the argmax event of cfg.cluster_variable; aligns rounds and writes
/// clusters.csv under cfg.output_dir.
inline std::vector<eval::ClusterAssignment> run_cluster(const ExperimentConfig& base, std::size_t rounds,
                                                        const TrainOptions& opt = {}) {
  if (rounds == 0) throw ConfigError("--rounds must be >= 1");
  const Datasets data = load_datasets(base);
  std::vector<eval::ClusterAssignment> assignments;
  const std::size_t clusters = base.split.size(base.cluster_variable);
  for (std::size_t r = 0; r < rounds; ++r) {
    ExperimentConfig cfg = base;
    cfg.seed = base.seed + r;
    cfg.run_id = base.run_id + "_round" + std::to_string(r + 1);
    cfg.output_dir = (fs::path(base.output_dir) / ("round" + std::to_string(r + 1))).string();
    const RunSummary s = run_train(cfg, data, opt);
    assignments.push_back(
        eval::assign_clusters(s.eval_labels, s.eval_cluster_ids, data.train.num_classes, clusters));
  }
  auto aligned = eval::align_rounds(assignments).rounds;
  if (opt.write_files) {
    fs::create_directories(base.output_dir);
    std::ofstream csv(fs::path(base.output_dir) / "clusters.csv");
    eval::write_cluster_csv(csv, aligned);
  }
  return aligned;
}

/// Prints every table of the coin game. Cells show the raw counts
/// (#(Y,A)/#(A) etc.) followed by the reduced exact value.
inline void run_cointoss(std::ostream& os) {
  using classical::Rational;
  using classical::to_string;
  const auto rec = classical::CoinToss::record();
  const auto& truth = rec.truth;
  const auto& medium = rec.medium;
  const auto& adult = classical::CoinToss::adult(rec);
  const char* names[] = {"hd", "tl"};
  auto count = [&](const std::vector<std::size_t>& a, std::size_t va, const std::vector<std::size_t>* b,
                   std::size_t vb) {
    long long c = 0;
    for (std::size_t k = 0; k < a.size(); ++k) c += a[k] == va && (!b || (*b)[k] == vb);
    return c;
  };
  auto frac = [](long long num, long long den) {
    if (num == 0) return std::string("0");
    return std::to_string(num) + "/" + std::to_string(den);
  };
  const auto t = classical::coin_toss_tables();

  os << "Truth  #(X)/n\n";
  for (std::size_t x = 0; x < 2; ++x)
    os << "  X=" << names[x] << "  " << frac(count(truth, x, nullptr, 0), static_cast<long long>(truth.size()))
       << " = " << to_string(t.p_x[x]) << '\n';

  os << "\nAdult record  #(Y,X)/#(X)\n";
  for (std::size_t x = 0; x < 2; ++x) {
    os << "  X=" << names[x];
    for (std::size_t y = 0; y < 2; ++y)
      os << "  Y=" << names[y] << " " << frac(count(truth, x, &adult, y), count(truth, x, nullptr, 0));
    os << '\n';
  }
  os << "Child record  #(A,X)/#(X)\n";
  for (std::size_t x = 0; x < 2; ++x) {
    os << "  X=" << names[x];
    for (std::size_t a = 0; a < 2; ++a)
      os << "  A=" << names[a] << " " << frac(count(truth, x, &medium, a), count(truth, x, nullptr, 0));
    os << '\n';
  }

  os << "\nObservation  #(Y,A)/#(A)\n";
  for (std::size_t a = 0; a < 2; ++a) {
    os << "  A=" << names[a];
    for (std::size_t y = 0; y < 2; ++y)
      os << "  Y=" << names[y] << " " << frac(count(medium, a, &adult, y), count(medium, a, nullptr, 0)) << " = "
         << to_string(*t.p_y_given_a[a][y]);
    os << '\n';
  }

  os << "\nInference  sum_A #(A,X)/#(X) * #(Y,A)/#(A)\n";
  for (std::size_t x = 0; x < 2; ++x) {
    os << "  X=" << names[x] << "=x11";
    for (std::size_t y = 0; y < 2; ++y) {
      os << "  Y=" << names[y] << " ";
      for (std::size_t a = 0; a < 2; ++a)
        os << (a ? " + " : "") << frac(count(truth, x, &medium, a), count(truth, x, nullptr, 0)) << "*"
           << frac(count(medium, a, &adult, y), count(medium, a, nullptr, 0));
      os << " = " << to_string(t.p_y_given_x_via_a[x][y]);
    }
    os << '\n';
  }
}

}  // namespace ipnn::harness
