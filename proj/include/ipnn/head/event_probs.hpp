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

#include <vector>

#include "ipnn/head/split_shape.hpp"
#include "ipnn/numgrad/ops.hpp"

namespace ipnn::head {

using numgrad::Tensor;
using numgrad::Var;

/// Per-variable event probabilities; alphas[j] is batch x M_j and each row is
/// a distribution over the events of variable j.
struct EventProbs {
  std::vector<Var> alphas;

  std::size_t variables() const noexcept { return alphas.size(); }
  std::size_t batch() const { return alphas.empty() ? 0 : alphas.front().value().rows(); }

  std::vector<Tensor> values() const {
    std::vector<Tensor> out;
    out.reserve(alphas.size());
    for (const auto& a : alphas) out.push_back(a.value());
    return out;
  }

  /// Wraps plain tensors as constants (no gradient).
  static EventProbs constant(std::vector<Tensor> tensors) {
    EventProbs e;
    for (auto& t : tensors) e.alphas.push_back(Var::constant(std::move(t)));
    return e;
  }
};

/// Slices the logits contiguously per variable and applies a softmax to each
/// slice.
inline EventProbs split_softmax(const Var& logits, const SplitShape& split) {
  if (logits.value().rank() != 2 || logits.value().cols() != split.total_outputs()) {
    throw ShapeError("split_softmax: logits " + numgrad::to_string(logits.shape()) + " do not match split " +
                     split.to_string() + " (" + std::to_string(split.total_outputs()) + " outputs)");
  }
  EventProbs out;
  std::size_t offset = 0;
  for (std::size_t m : split.sizes()) {
    out.alphas.push_back(numgrad::softmax(numgrad::slice_cols(logits, offset, m)));
    offset += m;
  }
  return out;
}

inline std::vector<Tensor> split_softmax_values(const Tensor& logits, const SplitShape& split) {
  return split_softmax(Var::constant(logits), split).values();
}

}  // namespace ipnn::head
