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
#include <vector>

#include "ipnn/head/event_probs.hpp"

namespace ipnn::head {

namespace detail {

inline std::vector<std::size_t> event_sizes(const std::vector<const Tensor*>& alphas) {
  std::vector<std::size_t> sizes;
  for (const Tensor* a : alphas) sizes.push_back(a->cols());
  return sizes;
}

/// Row r of the outer product of alphas[0][r] x alphas[1][r] x ..., written
/// into out (length = product of sizes).
inline void outer_row(const std::vector<const Tensor*>& alphas, std::size_t r, double* out) {
  std::size_t len = 1;
  out[0] = 1.0;
  for (const Tensor* a : alphas) {
    const std::size_t m = a->cols();
    const double* row = a->data() + r * m;
    // expand in place from the back so earlier entries are read before overwritten
    for (std::size_t p = len; p-- > 0;) {
      const double base = out[p];
      for (std::size_t i = m; i-- > 0;) out[p * m + i] = base * row[i];
    }
    len *= m;
  }
}

inline Tensor joint_values(const std::vector<const Tensor*>& alphas) {
  if (alphas.empty()) throw ContractError("joint_event_probs: no variables");
  const std::size_t batch = alphas.front()->rows();
  std::size_t points = 1;
  for (const Tensor* a : alphas) {
    if (a->rank() != 2 || a->rows() != batch) throw ShapeError("joint_event_probs: batch sizes differ");
    if (points > kMaxJointPoints / std::max<std::size_t>(a->cols(), 1)) {
      throw ContractError("joint_event_probs: joint space exceeds 2^24 points");
    }
    points *= a->cols();
  }
  Tensor out = Tensor::matrix(batch, points);
  for (std::size_t r = 0; r < batch; ++r) outer_row(alphas, r, out.data() + r * points);
  return out;
}

/// Backward of the outer product, peeling variables from the fastest one.
/// With the gradient g over variables 0..k laid out as [prefix a][event i],
/// d alpha_k[i] = sum_a g[a, i] * prefix_k[a], and contracting over i with
/// alpha_k gives the gradient over variables 0..k-1. Cost is O(P) per row.
inline void joint_backward(const std::vector<const Tensor*>& alphas, const Tensor& grad,
                           const std::vector<Tensor*>& alpha_grads) {
  const std::size_t n = alphas.size();
  const std::size_t batch = grad.rows();
  const std::size_t points = grad.cols();
  const auto sizes = event_sizes(alphas);

  // prefix joints of variables 0..k-1 for every k, stored back to back
  std::vector<std::size_t> prefix_len(n + 1, 1), prefix_at(n + 1, 0);
  for (std::size_t j = 0; j < n; ++j) {
    prefix_len[j + 1] = prefix_len[j] * sizes[j];
    prefix_at[j + 1] = prefix_at[j] + prefix_len[j];
  }
  std::vector<double> prefix(prefix_at[n] + 1), work(points), next(points);
  for (std::size_t r = 0; r < batch; ++r) {
    prefix[0] = 1.0;
    for (std::size_t j = 0; j + 1 < n; ++j) {
      const double* src = prefix.data() + prefix_at[j];
      double* dst = prefix.data() + prefix_at[j + 1];
      const double* row = alphas[j]->data() + r * sizes[j];
      for (std::size_t a = 0; a < prefix_len[j]; ++a)
        for (std::size_t i = 0; i < sizes[j]; ++i) dst[a * sizes[j] + i] = src[a] * row[i];
    }
    std::copy_n(grad.data() + r * points, points, work.data());
    for (std::size_t k = n; k-- > 0;) {
      const std::size_t m = sizes[k], outer = prefix_len[k];
      const double* pre = prefix.data() + prefix_at[k];
      const double* row = alphas[k]->data() + r * m;
      if (alpha_grads[k]) {
        double* out = alpha_grads[k]->data() + r * m;
        for (std::size_t a = 0; a < outer; ++a) {
          const double pv = pre[a];
          for (std::size_t i = 0; i < m; ++i) out[i] += pv * work[a * m + i];
        }
      }
      if (k == 0) break;
      for (std::size_t a = 0; a < outer; ++a) {
        double s = 0.0;
        for (std::size_t i = 0; i < m; ++i) s += work[a * m + i] * row[i];
        next[a] = s;
      }
      std::swap(work, next);
    }
  }
}

}  // namespace detail

/// P(a^1_{i_1}, ..., a^N_{i_N} | x_k) as the product of the per-variable event
/// probabilities; batch x prod(M_j), variable 0 slowest. Differentiable.
inline Var joint_event_probs(const EventProbs& probs) {
  std::vector<const Tensor*> alphas;
  for (const auto& a : probs.alphas) alphas.push_back(&a.value());
  return numgrad::make_node(detail::joint_values(alphas), probs.alphas, [](numgrad::Node& self) {
    std::vector<const Tensor*> vals;
    std::vector<Tensor*> grads;
    for (auto& p : self.parents) {
      vals.push_back(&p->value);
      grads.push_back(p->requires_grad ? &p->grad : nullptr);
    }
    detail::joint_backward(vals, self.grad, grads);
  });
}

inline Tensor joint_event_probs_values(const std::vector<Tensor>& alphas) {
  std::vector<const Tensor*> ptrs;
  for (const auto& a : alphas) ptrs.push_back(&a);
  return detail::joint_values(ptrs);
}

/// Joint over an ordered subset of variables; equals the full joint summed
/// over the dropped variables.
inline Var sub_joint_marginalize(const EventProbs& probs, const std::vector<std::size_t>& subset) {
  if (subset.empty()) throw ContractError("sub_joint_marginalize: empty subset");
  std::vector<bool> seen(probs.variables(), false);
  EventProbs sub;
  for (std::size_t v : subset) {
    if (v >= probs.variables()) {
      throw std::out_of_range("sub_joint_marginalize: variable " + std::to_string(v) + " out of range");
    }
    if (seen[v]) throw ContractError("sub_joint_marginalize: duplicate variable " + std::to_string(v));
    seen[v] = true;
    sub.alphas.push_back(probs.alphas[v]);
  }
  return joint_event_probs(sub);
}

}  // namespace ipnn::head
