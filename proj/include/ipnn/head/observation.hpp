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
#include <cmath>
#include <deque>
#include <utility>
#include <vector>

#include "ipnn/head/joint.hpp"
#include "ipnn/head/split_shape.hpp"

namespace ipnn::head {

using numgrad::Tensor;

/// Row-wise argmax of a one-hot label matrix; rejects rows that are not one-hot.
inline std::vector<std::size_t> label_indices(const Tensor& one_hot) {
  if (one_hot.rank() != 2) throw ShapeError("labels must be a batch x m matrix");
  std::vector<std::size_t> idx(one_hot.rows());
  for (std::size_t k = 0; k < one_hot.rows(); ++k) {
    auto row = one_hot.row(k);
    std::size_t ones = 0, at = 0;
    for (std::size_t l = 0; l < row.size(); ++l) {
      if (row[l] == 1.0) {
        ++ones;
        at = l;
      } else if (row[l] != 0.0) {
        ones = 2;
        break;
      }
    }
    if (ones != 1) throw ContractError("label row " + std::to_string(k) + " is not one-hot");
    idx[k] = at;
  }
  return idx;
}

inline Tensor one_hot(const std::vector<std::size_t>& labels, std::size_t classes) {
  Tensor t = Tensor::matrix(labels.size(), classes);
  for (std::size_t k = 0; k < labels.size(); ++k) {
    if (labels[k] >= classes) throw ContractError("label " + std::to_string(labels[k]) + " out of range");
    t.at(k, labels[k]) = 1.0;
  }
  return t;
}

/// Label-weighted mass h (m x P) and total mass g (P) of one batch.
struct BatchStatistics {
  Tensor h;
  Tensor g;
};

inline BatchStatistics batch_statistics(const Tensor& joint, const std::vector<std::size_t>& labels,
                                        std::size_t num_labels) {
  if (joint.rank() != 2 || joint.rows() != labels.size()) {
    throw ShapeError("batch_statistics: joint has " + std::to_string(joint.rows()) + " rows, labels " +
                     std::to_string(labels.size()));
  }
  const std::size_t points = joint.cols();
  BatchStatistics s{Tensor::matrix(num_labels, points), Tensor(numgrad::Shape{points})};
  for (std::size_t k = 0; k < labels.size(); ++k) {
    if (labels[k] >= num_labels) throw ContractError("batch_statistics: label out of range");
    const double* j = joint.data() + k * points;
    double* h = s.h.data() + labels[k] * points;
    double* g = s.g.data();
    for (std::size_t p = 0; p < points; ++p) {
      h[p] += j[p];
      g[p] += j[p];
    }
  }
  return s;
}

inline BatchStatistics batch_statistics(const Tensor& joint, const Tensor& labels_one_hot) {
  if (joint.rank() != 2 || labels_one_hot.rank() != 2 || joint.rows() != labels_one_hot.rows()) {
    throw ShapeError("batch_statistics: batch dimensions disagree");
  }
  return batch_statistics(joint, label_indices(labels_one_hot), labels_one_hot.cols());
}

/// Streaming H/G statistics over the joint space, retaining the most recent
/// T batch contributions.
///
/// Invariants: H and G equal the sums of the retained ring entries; the sum of
/// H over labels equals G; all entries are non-negative; the ring never holds
/// more than T entries.
class JointAccumulator {
 public:
  JointAccumulator() = default;

  JointAccumulator(SplitShape split, std::size_t num_labels, std::size_t forget_T, double epsilon)
      : split_(std::move(split)),
        labels_(num_labels),
        forget_(forget_T),
        eps_(epsilon),
        H_(Tensor::matrix(num_labels, split_.joint_points())),
        G_(numgrad::Shape{split_.joint_points()}) {
    if (num_labels == 0) throw ContractError("accumulator needs at least one label");
    if (forget_T == 0) throw ContractError("forget number T must be >= 1");
    if (!(epsilon > 0.0)) throw ContractError("epsilon must be positive");
  }

  /// Clamped ratio max(H+h, eps) / max(G+g, eps) with the current batch
  /// included; the batch is not pushed.
  Tensor conditional(const Tensor& h, const Tensor& g) const {
    check(h, g);
    const std::size_t points = split_.joint_points();
    std::vector<double> denom(points);
    for (std::size_t p = 0; p < points; ++p) denom[p] = std::max(G_[p] + g[p], eps_);
    Tensor out = Tensor::matrix(labels_, points);
    for (std::size_t l = 0; l < labels_; ++l) {
      const double* H = H_.data() + l * points;
      const double* hh = h.data() + l * points;
      double* o = out.data() + l * points;
      for (std::size_t p = 0; p < points; ++p) o[p] = std::max(H[p] + hh[p], eps_) / denom[p];
    }
    return out;
  }

  /// Conditional from the retained statistics only (inference with frozen
  /// statistics).
  Tensor frozen_conditional() const {
    return conditional(Tensor(H_.shape()), Tensor(G_.shape()));
  }

  /// Pushes a batch contribution, forgetting the oldest when more than T are
  /// retained.
  void push(Tensor h, Tensor g) {
    check(h, g);
    H_ += h;
    G_ += g;
    ring_.emplace_back(std::move(h), std::move(g));
    if (ring_.size() > forget_) {
      auto& [oh, og] = ring_.front();
      subtract_clamped(H_, oh);
      subtract_clamped(G_, og);
      ring_.pop_front();
    }
  }

  void push(BatchStatistics s) { push(std::move(s.h), std::move(s.g)); }

  const SplitShape& split() const noexcept { return split_; }
  std::size_t num_labels() const noexcept { return labels_; }
  std::size_t forget_number() const noexcept { return forget_; }
  double epsilon() const noexcept { return eps_; }
  const Tensor& H() const noexcept { return H_; }
  const Tensor& G() const noexcept { return G_; }
  const std::deque<std::pair<Tensor, Tensor>>& ring() const noexcept { return ring_; }

  /// Restores a snapshot. The ring may be empty when only the totals were
  /// persisted.
  static JointAccumulator restore(SplitShape split, std::size_t num_labels, std::size_t forget_T, double epsilon,
                                  Tensor H, Tensor G, std::deque<std::pair<Tensor, Tensor>> ring) {
    JointAccumulator acc(std::move(split), num_labels, forget_T, epsilon);
    if (H.shape() != acc.H_.shape() || G.shape() != acc.G_.shape()) throw ShapeError("accumulator snapshot shape");
    if (ring.size() > forget_T) throw ContractError("accumulator snapshot ring longer than T");
    for (auto& [h, g] : ring) acc.check(h, g);
    acc.H_ = std::move(H);
    acc.G_ = std::move(G);
    acc.ring_ = std::move(ring);
    return acc;
  }

 private:
  void check(const Tensor& h, const Tensor& g) const {
    if (h.shape() != H_.shape() || g.shape() != G_.shape()) {
      throw ShapeError("accumulator expects h " + numgrad::to_string(H_.shape()) + " and g " +
                       numgrad::to_string(G_.shape()));
    }
  }

  // Subtraction drift can leave tiny negatives where the true value is 0.
  static void subtract_clamped(Tensor& total, const Tensor& old) {
    for (std::size_t i = 0; i < total.size(); ++i) total[i] = std::max(total[i] - old[i], 0.0);
  }

  SplitShape split_;
  std::size_t labels_ = 0;
  std::size_t forget_ = 1;
  double eps_ = 1e-6;
  Tensor H_;
  Tensor G_;
  std::deque<std::pair<Tensor, Tensor>> ring_;
};

/// Full-data conditional P(y_l | joint point) without clamping or forgetting.
/// Points whose total mass is zero are undefined (supported[p] == false) and
/// their column is left at zero.
struct ExactObservation {
  Tensor conditional;           // m x P
  Tensor mass;                  // P, total joint mass per point
  std::vector<bool> supported;  // mass > 0
};

inline ExactObservation exact_observation(const Tensor& joint, const std::vector<std::size_t>& labels,
                                          std::size_t num_labels) {
  auto stats = batch_statistics(joint, labels, num_labels);
  const std::size_t points = joint.cols();
  ExactObservation out{Tensor::matrix(num_labels, points), stats.g, std::vector<bool>(points, false)};
  for (std::size_t p = 0; p < points; ++p) {
    if (stats.g[p] > 0.0) {
      out.supported[p] = true;
      for (std::size_t l = 0; l < num_labels; ++l) out.conditional.at(l, p) = stats.h.at(l, p) / stats.g[p];
    }
  }
  return out;
}

inline ExactObservation exact_observation(const Tensor& joint, const Tensor& labels_one_hot) {
  return exact_observation(joint, label_indices(labels_one_hot), labels_one_hot.cols());
}

/// Same, from per-variable event probabilities over the whole dataset.
inline ExactObservation exact_observation(const std::vector<Tensor>& alphas, const Tensor& labels_one_hot) {
  return exact_observation(joint_event_probs_values(alphas), labels_one_hot);
}

}  // namespace ipnn::head
