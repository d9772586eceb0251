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

#include <algorithm>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "ipnn/head/observation.hpp"
#include "ipnn/numgrad/rng.hpp"
#include "ipnn/numgrad/tensor.hpp"

namespace ipnn::data {

using numgrad::Tensor;

/// In-memory dataset: one input row per sample, a main label, and optional
/// sub-labels (one sequence per sub-task).
struct Dataset {
  std::string name;
  Tensor inputs;  // n x d
  std::vector<std::size_t> labels;
  std::size_t num_classes = 0;
  std::vector<std::string> sub_task_names;
  std::vector<std::vector<std::size_t>> sub_labels;  // [task][sample]
  std::vector<std::size_t> sub_classes;             // [task]

  std::size_t size() const noexcept { return labels.size(); }
  std::size_t input_width() const noexcept { return inputs.cols(); }

  /// Index of a sub-task by name, e.g. "bit3".
  std::optional<std::size_t> sub_task(const std::string& task) const {
    auto it = std::find(sub_task_names.begin(), sub_task_names.end(), task);
    if (it == sub_task_names.end()) return std::nullopt;
    return static_cast<std::size_t>(it - sub_task_names.begin());
  }

  /// Per-class relative frequencies.
  std::vector<double> class_frequencies() const {
    std::vector<double> f(num_classes, 0.0);
    for (std::size_t l : labels) f[l] += 1.0;
    for (double& v : f) v /= static_cast<double>(std::max<std::size_t>(labels.size(), 1));
    return f;
  }
};

/// First limit samples (limit 0 keeps everything).
inline Dataset take_first(Dataset ds, std::size_t limit) {
  if (limit == 0 || limit >= ds.size()) return ds;
  const std::size_t d = ds.input_width();
  ds.inputs = Tensor(numgrad::Shape{limit, d}, std::vector<double>(ds.inputs.data(), ds.inputs.data() + limit * d));
  ds.labels.resize(limit);
  for (auto& s : ds.sub_labels) s.resize(limit);
  return ds;
}

/// One mini-batch. Labels are stored both as indices and one-hot.
struct LabeledBatch {
  std::vector<std::size_t> indices;  // rows of the source dataset
  Tensor inputs;
  std::vector<std::size_t> label_ids;
  Tensor labels;                                   // batch x m one-hot
  std::vector<std::vector<std::size_t>> sub_label_ids;
  std::vector<Tensor> sub_labels;                  // per task, batch x m_tau one-hot

  std::size_t size() const noexcept { return indices.size(); }
};

inline LabeledBatch make_batch(const Dataset& ds, std::vector<std::size_t> rows) {
  LabeledBatch b;
  const std::size_t d = ds.input_width();
  b.inputs = Tensor::matrix(rows.size(), d);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    std::copy_n(ds.inputs.data() + rows[i] * d, d, b.inputs.data() + i * d);
    b.label_ids.push_back(ds.labels[rows[i]]);
  }
  b.labels = head::one_hot(b.label_ids, ds.num_classes);
  for (std::size_t t = 0; t < ds.sub_labels.size(); ++t) {
    std::vector<std::size_t> ids;
    for (std::size_t r : rows) ids.push_back(ds.sub_labels[t][r]);
    b.sub_labels.push_back(head::one_hot(ids, ds.sub_classes[t]));
    b.sub_label_ids.push_back(std::move(ids));
  }
  b.indices = std::move(rows);
  return b;
}

/// Deterministic epoch of mini-batches. The order is fixed at construction
/// from the seed; the final partial batch is kept.
class BatchIter {
 public:
  BatchIter(const Dataset& ds, std::size_t batch_size, std::uint64_t seed, bool shuffle)
      : ds_(&ds), batch_(batch_size), order_(ds.size()) {
    if (batch_size == 0) throw std::invalid_argument("batch size must be >= 1");
    std::iota(order_.begin(), order_.end(), std::size_t{0});
    if (shuffle) {
      numgrad::Rng rng(seed);
      rng.shuffle(order_);
    }
  }

  std::size_t size() const noexcept { return (order_.size() + batch_ - 1) / batch_; }

  LabeledBatch operator[](std::size_t i) const {
    const std::size_t begin = i * batch_;
    const std::size_t end = std::min(begin + batch_, order_.size());
    if (begin >= end) throw std::out_of_range("batch index out of range");
    return make_batch(*ds_, std::vector<std::size_t>(order_.begin() + static_cast<std::ptrdiff_t>(begin),
                                                     order_.begin() + static_cast<std::ptrdiff_t>(end)));
  }

  const std::vector<std::size_t>& order() const noexcept { return order_; }

 private:
  const Dataset* ds_;
  std::size_t batch_;
  std::vector<std::size_t> order_;
};

inline BatchIter batch_iter(const Dataset& ds, std::size_t batch_size, std::uint64_t seed, bool shuffle) {
  return BatchIter(ds, batch_size, seed, shuffle);
}

/// All 2^bits bit vectors, most significant bit first. The main label is the
/// decimal value; sub-task "bit<i>" labels whether input position i is set.
inline Dataset gen_binary_decimal(std::size_t bits) {
  if (bits < 1 || bits > 20) throw std::invalid_argument("binary_decimal: bits must be in [1, 20]");
  const std::size_t n = std::size_t{1} << bits;
  Dataset ds;
  ds.name = "binary_decimal_" + std::to_string(bits);
  ds.inputs = Tensor::matrix(n, bits);
  ds.labels.resize(n);
  ds.num_classes = n;
  ds.sub_labels.assign(bits, std::vector<std::size_t>(n));
  for (std::size_t i = 0; i < bits; ++i) {
    ds.sub_task_names.push_back("bit" + std::to_string(i));
    ds.sub_classes.push_back(2);
  }
  for (std::size_t v = 0; v < n; ++v) {
    ds.labels[v] = v;
    for (std::size_t i = 0; i < bits; ++i) {
      const std::size_t bit = (v >> (bits - 1 - i)) & 1U;
      ds.inputs.at(v, i) = static_cast<double>(bit);
      ds.sub_labels[i][v] = bit;
    }
  }
  return ds;
}

}  // namespace ipnn::data
