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
#include <memory>
#include <vector>

#include "ipnn/head/observation.hpp"
#include "ipnn/numgrad/ops.hpp"

namespace ipnn::head {

using numgrad::Var;

/// Floor applied inside the log of every cross-entropy.
inline constexpr double kLogFloor = 1e-12;

/// P^A(y_l | x_k) = sum_p cond[l,p] * joint[k,p]; batch x m. The conditional
/// is a constant; the gradient flows into the joint only.
inline Var posterior(std::shared_ptr<const Tensor> cond, const Var& joint) {
  if (cond->rank() != 2 || joint.value().rank() != 2 || cond->cols() != joint.value().cols()) {
    throw ShapeError("posterior: conditional " + numgrad::to_string(cond->shape()) + " vs joint " +
                     numgrad::to_string(joint.shape()));
  }
  Tensor out = numgrad::matmul_nt_values(joint.value(), *cond);
  return numgrad::make_node(std::move(out), {joint}, [cond](numgrad::Node& self) {
    self.parents[0]->grad += numgrad::matmul_values(self.grad, *cond);
  });
}

inline Var posterior(const Tensor& cond, const Var& joint) {
  return posterior(std::make_shared<const Tensor>(cond), joint);
}

inline Tensor posterior_values(const Tensor& cond, const Tensor& joint) {
  if (cond.rank() != 2 || joint.rank() != 2 || cond.cols() != joint.cols()) {
    throw ShapeError("posterior: conditional " + numgrad::to_string(cond.shape()) + " vs joint " +
                     numgrad::to_string(joint.shape()));
  }
  return numgrad::matmul_values(joint, numgrad::transpose_values(cond));
}

/// Column of the posterior at each sample's own label, batch x 1. Equivalent
/// to gathering from posterior() but costs O(batch * P) instead of
/// O(batch * m * P).
inline Var posterior_at_labels(std::shared_ptr<const Tensor> cond, const Var& joint,
                               const std::vector<std::size_t>& labels) {
  const Tensor& J = joint.value();
  if (cond->rank() != 2 || J.rank() != 2 || cond->cols() != J.cols() || J.rows() != labels.size()) {
    throw ShapeError("posterior_at_labels: shape mismatch");
  }
  const std::size_t points = J.cols();
  Tensor out = Tensor::matrix(labels.size(), 1);
  for (std::size_t k = 0; k < labels.size(); ++k) {
    if (labels[k] >= cond->rows()) throw ContractError("posterior_at_labels: label out of range");
    const double* c = cond->data() + labels[k] * points;
    const double* j = J.data() + k * points;
    double s = 0.0;
    for (std::size_t p = 0; p < points; ++p) s += c[p] * j[p];
    out[k] = s;
  }
  return numgrad::make_node(std::move(out), {joint}, [cond, labels, points](numgrad::Node& self) {
    Tensor& g = self.parents[0]->grad;
    for (std::size_t k = 0; k < labels.size(); ++k) {
      const double gk = self.grad[k];
      const double* c = cond->data() + labels[k] * points;
      double* o = g.data() + k * points;
      for (std::size_t p = 0; p < points; ++p) o[p] += gk * c[p];
    }
  });
}

inline Var posterior_at_labels(const Tensor& cond, const Var& joint, const std::vector<std::size_t>& labels) {
  return posterior_at_labels(std::make_shared<const Tensor>(cond), joint, labels);
}

/// Entries of a batch x m matrix at each row's label, batch x 1.
inline Var gather_labels(const Var& probs, const std::vector<std::size_t>& labels) {
  const Tensor& P = probs.value();
  if (P.rank() != 2 || P.rows() != labels.size()) throw ShapeError("gather_labels: shape mismatch");
  const std::size_t m = P.cols();
  Tensor out = Tensor::matrix(labels.size(), 1);
  for (std::size_t k = 0; k < labels.size(); ++k) {
    if (labels[k] >= m) throw ContractError("gather_labels: label out of range");
    out[k] = P[k * m + labels[k]];
  }
  return numgrad::make_node(std::move(out), {probs}, [labels, m](numgrad::Node& self) {
    for (std::size_t k = 0; k < labels.size(); ++k) self.parents[0]->grad[k * m + labels[k]] += self.grad[k];
  });
}

/// Mean over the batch of -log(max(p, 1e-12)).
inline Var mean_negative_log(const Var& label_probs) {
  return numgrad::scale(numgrad::mean(numgrad::log_clamped(label_probs, kLogFloor)), -1.0);
}

/// Batch-mean cross entropy of a posterior against one-hot labels.
inline Var cross_entropy_loss(const Var& post, const Tensor& labels_one_hot) {
  if (post.value().shape() != labels_one_hot.shape()) throw ShapeError("cross_entropy_loss: shape mismatch");
  return mean_negative_log(gather_labels(post, label_indices(labels_one_hot)));
}

/// Sum of per-sub-space cross entropies.
inline Var multi_degree_loss(const std::vector<Var>& sub_posteriors, const std::vector<Tensor>& sub_labels) {
  if (sub_posteriors.size() != sub_labels.size()) {
    throw ContractError("multi_degree_loss: " + std::to_string(sub_posteriors.size()) + " posteriors but " +
                        std::to_string(sub_labels.size()) + " label sets");
  }
  if (sub_posteriors.empty()) return Var::constant(Tensor::scalar(0.0));
  Var total = cross_entropy_loss(sub_posteriors[0], sub_labels[0]);
  for (std::size_t t = 1; t < sub_posteriors.size(); ++t)
    total = numgrad::add(total, cross_entropy_loss(sub_posteriors[t], sub_labels[t]));
  return total;
}

/// Per-row argmax; ties go to the lowest label index.
inline std::vector<std::size_t> predict(const Tensor& post) {
  std::vector<std::size_t> out(post.rows());
  for (std::size_t k = 0; k < post.rows(); ++k) {
    auto row = post.row(k);
    std::size_t best = 0;
    for (std::size_t l = 1; l < row.size(); ++l)
      if (row[l] > row[best]) best = l;
    out[k] = best;
  }
  return out;
}

/// Largest |row sum - 1| of a posterior. Rows can exceed 1 while unvisited
/// joint points still carry the eps/eps = 1 initial value.
inline double max_row_sum_deviation(const Tensor& post) {
  double worst = 0.0;
  for (std::size_t k = 0; k < post.rows(); ++k) {
    double s = 0.0;
    for (double v : post.row(k)) s += v;
    worst = std::max(worst, std::abs(s - 1.0));
  }
  return worst;
}

}  // namespace ipnn::head
