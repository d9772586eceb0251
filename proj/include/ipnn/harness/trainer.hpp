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

#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <memory>
#include <optional>
#include <ostream>
#include <sstream>
#include <vector>

#include "ipnn/data/dataset.hpp"
#include "ipnn/head/audit.hpp"
#include "ipnn/head/independence.hpp"
#include "ipnn/head/inference.hpp"
#include "ipnn/head/joint.hpp"
#include "ipnn/head/observation.hpp"
#include "ipnn/harness/config.hpp"
#include "ipnn/numgrad/mlp.hpp"
#include "ipnn/numgrad/optim.hpp"

namespace ipnn::harness {

using numgrad::Tensor;
using numgrad::Var;

/// Backbone plus the statistics that turn its outputs into label posteriors.
struct IpnnModel {
  numgrad::Mlp backbone;
  head::SplitShape split;
  head::JointAccumulator main;
  std::vector<head::JointAccumulator> subs;  // one per sub-task
};

struct ResolvedSubTask {
  SubTaskSpec spec;
  std::size_t label_index = 0;  // into Dataset::sub_labels
  std::size_t classes = 0;
};

inline std::vector<ResolvedSubTask> resolve_sub_tasks(const ExperimentConfig& cfg, const data::Dataset& ds) {
  std::vector<ResolvedSubTask> out;
  for (const auto& spec : cfg.sub_tasks) {
    auto idx = ds.sub_task(spec.source);
    if (!idx) throw ConfigError("sub-task source '" + spec.source + "' not provided by dataset " + ds.name);
    out.push_back({spec, *idx, ds.sub_classes[*idx]});
  }
  return out;
}

inline IpnnModel init_model(const ExperimentConfig& cfg, const data::Dataset& ds) {
  numgrad::Rng rng = numgrad::Rng(cfg.seed).split(1);
  std::vector<std::size_t> widths{ds.input_width()};
  widths.insert(widths.end(), cfg.hidden.begin(), cfg.hidden.end());
  widths.push_back(cfg.split.total_outputs());
  IpnnModel m{numgrad::Mlp(widths, cfg.init_lo, cfg.init_hi, rng), cfg.split,
              head::JointAccumulator(cfg.split, ds.num_classes, cfg.forget_T, cfg.epsilon), {}};
  for (const auto& st : resolve_sub_tasks(cfg, ds)) {
    m.subs.emplace_back(cfg.split.subset(st.spec.variables), st.classes, cfg.forget_T, cfg.epsilon);
  }
  return m;
}

/// One row of the metrics CSV.
struct StepRecord {
  std::size_t epoch = 0;
  std::size_t step = 0;
  double loss = 0.0;                 // main cross entropy
  std::optional<double> main_acc;    // batch accuracy, when computed
  std::vector<double> sub_losses;
  double independence_loss = 0.0;
  double posterior_row_deviation = 0.0;  // max |row sum - 1| (clamp diagnostic)
};

/// Frozen-statistics evaluation of one dataset.
struct EvalResult {
  double accuracy = 0.0;
  double loss = 0.0;
  std::vector<std::size_t> predictions;
  std::vector<std::size_t> cluster_ids;  // argmax event of the cluster variable
  double max_row_deviation = 0.0;
};

namespace detail {

inline std::string format(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

}  // namespace detail

inline void write_metrics_header(std::ostream& os, const std::vector<ResolvedSubTask>& subs) {
  os << "run_id,epoch,step,loss,main_acc";
  for (const auto& st : subs) os << ",loss_" << st.spec.source;
  os << '\n';
}

inline void write_metrics_row(std::ostream& os, const std::string& run_id, const StepRecord& r) {
  os << run_id << ',' << r.epoch << ',' << r.step << ',' << detail::format(r.loss) << ','
     << (r.main_acc ? detail::format(*r.main_acc) : std::string());
  for (double l : r.sub_losses) os << ',' << detail::format(l);
  os << '\n';
}

/// Runs the training loop. Per batch: event probabilities, joint, batch
/// statistics h/g from the detached joint, posterior against the clamped
/// (H+h)/(G+g) conditional, cross entropy plus optional sub-space and
/// independence losses, one optimizer step, and only then h/g are pushed into
/// the forget ring.
class Trainer {
 public:
  Trainer(ExperimentConfig cfg, const data::Dataset& train)
      : cfg_(std::move(cfg)), train_(&train), subs_(resolve_sub_tasks(cfg_, train)), model_(init_model(cfg_, train)) {
    optimizer_ = numgrad::make_optimizer(cfg_.optimizer, cfg_.learning_rate, cfg_.momentum);
  }

  /// Trains for cfg.epochs epochs. Each step's record is passed to on_step.
  template <typename OnStep>
  void run(OnStep&& on_step) {
    numgrad::Rng order_rng = numgrad::Rng(cfg_.seed).split(2);
    for (std::size_t epoch = 1; epoch <= cfg_.epochs; ++epoch) {
      const auto batches = data::batch_iter(*train_, cfg_.batch_size, order_rng.next_u64(), cfg_.shuffle);
      for (std::size_t b = 0; b < batches.size(); ++b) {
        StepRecord rec = step(batches[b]);
        rec.epoch = epoch;
        on_step(rec);
      }
    }
  }

  void run() {
    run([](const StepRecord&) {});
  }

  /// One optimization step on a batch.
  StepRecord step(const data::LabeledBatch& batch) {
    StepRecord rec;
    rec.step = ++steps_;
    auto& params = model_.backbone.parameters();
    optimizer_->zero_grad(params);

    Var logits = model_.backbone.forward(Var::constant(batch.inputs));
    head::EventProbs probs = head::split_softmax(logits, model_.split);
    Var joint = head::joint_event_probs(probs);

    head::BatchStatistics stats = head::batch_statistics(joint.value(), batch.label_ids, train_->num_classes);
    auto cond = std::make_shared<const Tensor>(model_.main.conditional(stats.h, stats.g));
    Var p_true = head::posterior_at_labels(cond, joint, batch.label_ids);
    Var loss = head::mean_negative_log(p_true);
    rec.loss = loss.value().item();

    if (cfg_.accuracy_every > 0 && rec.step % cfg_.accuracy_every == 0) {
      const Tensor post = head::posterior_values(*cond, joint.value());
      double hits = 0.0;
      const auto pred = head::predict(post);
      for (std::size_t k = 0; k < pred.size(); ++k) hits += pred[k] == batch.label_ids[k];
      rec.main_acc = hits / static_cast<double>(pred.size());
      rec.posterior_row_deviation = head::max_row_sum_deviation(post);
    }

    Var total = loss;
    std::vector<head::BatchStatistics> sub_stats;
    for (std::size_t t = 0; t < subs_.size(); ++t) {
      Var sub_joint = head::sub_joint_marginalize(probs, subs_[t].spec.variables);
      const auto& ids = batch.sub_label_ids[subs_[t].label_index];
      sub_stats.push_back(head::batch_statistics(sub_joint.value(), ids, subs_[t].classes));
      auto sub_cond = std::make_shared<const Tensor>(model_.subs[t].conditional(sub_stats[t].h, sub_stats[t].g));
      Var sub_loss = head::mean_negative_log(head::posterior_at_labels(sub_cond, sub_joint, ids));
      rec.sub_losses.push_back(sub_loss.value().item());
      total = numgrad::add(total, sub_loss);
    }
    if (cfg_.independence_weight > 0.0) {
      Var indep = head::mutual_independence_loss(probs);
      rec.independence_loss = indep.value().item();
      total = numgrad::add(total, numgrad::scale(indep, cfg_.independence_weight));
    }

    numgrad::backward(total);
    optimizer_->step(params);

    model_.main.push(std::move(stats));
    for (std::size_t t = 0; t < subs_.size(); ++t) model_.subs[t].push(std::move(sub_stats[t]));
    return rec;
  }

  const IpnnModel& model() const noexcept { return model_; }
  IpnnModel& model() noexcept { return model_; }
  const ExperimentConfig& config() const noexcept { return cfg_; }
  const std::vector<ResolvedSubTask>& sub_tasks() const noexcept { return subs_; }
  std::size_t steps() const noexcept { return steps_; }

 private:
  ExperimentConfig cfg_;
  const data::Dataset* train_;
  std::vector<ResolvedSubTask> subs_;
  IpnnModel model_;
  std::unique_ptr<numgrad::Optimizer> optimizer_;
  std::size_t steps_ = 0;
};

/// Inference with the model's current statistics frozen: no accumulator
/// updates, conditional = max(H, eps) / max(G, eps).
inline EvalResult evaluate(const IpnnModel& model, const data::Dataset& ds, std::size_t cluster_variable = 0,
                           std::size_t chunk = 256) {
  if (ds.input_width() != model.backbone.input_width()) throw ConfigError("evaluate: input width mismatch");
  if (ds.num_classes != model.main.num_labels()) throw ConfigError("evaluate: label count mismatch");
  const Tensor cond = model.main.frozen_conditional();
  const Tensor cond_t = numgrad::transpose_values(cond);
  EvalResult r;
  double loss = 0.0;
  std::size_t hits = 0;
  for (std::size_t begin = 0; begin < ds.size(); begin += chunk) {
    std::vector<std::size_t> rows;
    for (std::size_t i = begin; i < std::min(begin + chunk, ds.size()); ++i) rows.push_back(i);
    const auto batch = data::make_batch(ds, rows);
    const Tensor logits = model.backbone.forward(Var::constant(batch.inputs)).value();
    const auto alphas = head::split_softmax_values(logits, model.split);
    const Tensor joint = head::joint_event_probs_values(alphas);
    const Tensor post = numgrad::matmul_values(joint, cond_t);
    const auto pred = head::predict(post);
    const auto clusters = [&] {
      std::vector<std::size_t> c(alphas[cluster_variable].rows());
      for (std::size_t k = 0; k < c.size(); ++k) {
        auto row = alphas[cluster_variable].row(k);
        c[k] = static_cast<std::size_t>(std::max_element(row.begin(), row.end()) - row.begin());
      }
      return c;
    }();
    for (std::size_t k = 0; k < pred.size(); ++k) {
      hits += pred[k] == batch.label_ids[k];
      loss -= std::log(std::max(post.at(k, batch.label_ids[k]), head::kLogFloor));
    }
    r.max_row_deviation = std::max(r.max_row_deviation, head::max_row_sum_deviation(post));
    r.predictions.insert(r.predictions.end(), pred.begin(), pred.end());
    r.cluster_ids.insert(r.cluster_ids.end(), clusters.begin(), clusters.end());
  }
  r.accuracy = ds.size() ? static_cast<double>(hits) / static_cast<double>(ds.size()) : 0.0;
  r.loss = ds.size() ? loss / static_cast<double>(ds.size()) : 0.0;
  return r;
}

}  // namespace ipnn::harness
