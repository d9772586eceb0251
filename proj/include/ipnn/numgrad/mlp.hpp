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

#include "ipnn/numgrad/ops.hpp"
#include "ipnn/numgrad/rng.hpp"

namespace ipnn::numgrad {

/// Fully connected ReLU network; the last layer is linear (logits).
/// Weights are stored [in x out] so a layer is `x * W + b`.
class Mlp {
 public:
  Mlp() = default;

  /// `widths` = {input, hidden..., output}; every weight and bias is drawn
  /// from U[init_lo, init_hi).
  Mlp(const std::vector<std::size_t>& widths, double init_lo, double init_hi, Rng& rng) : widths_(widths) {
    if (widths.size() < 2) throw ContractError("Mlp needs at least input and output widths");
    for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
      Tensor w = Tensor::matrix(widths[l], widths[l + 1]);
      for (double& v : w.values()) v = rng.uniform(init_lo, init_hi);
      Tensor b(Shape{widths[l + 1]});
      for (double& v : b.values()) v = rng.uniform(init_lo, init_hi);
      params_.push_back(Var::parameter(std::move(w)));
      params_.push_back(Var::parameter(std::move(b)));
    }
  }

  Var forward(const Var& x) const {
    Var h = x;
    const std::size_t layers = params_.size() / 2;
    for (std::size_t l = 0; l < layers; ++l) {
      h = add_bias(matmul(h, params_[2 * l]), params_[2 * l + 1]);
      if (l + 1 < layers) h = relu(h);
    }
    return h;
  }

  std::vector<Var>& parameters() noexcept { return params_; }
  const std::vector<Var>& parameters() const noexcept { return params_; }
  const std::vector<std::size_t>& widths() const noexcept { return widths_; }

  std::size_t input_width() const { return widths_.front(); }
  std::size_t output_width() const { return widths_.back(); }

  /// Rebuilds from stored tensors (checkpoint load).
  static Mlp from_tensors(std::vector<std::size_t> widths, std::vector<Tensor> tensors) {
    if (tensors.size() != 2 * (widths.size() - 1)) throw ShapeError("Mlp: parameter count mismatch");
    Mlp m;
    m.widths_ = std::move(widths);
    for (std::size_t l = 0; l + 1 < m.widths_.size(); ++l) {
      if (tensors[2 * l].shape() != Shape{m.widths_[l], m.widths_[l + 1]} ||
          tensors[2 * l + 1].shape() != Shape{m.widths_[l + 1]}) {
        throw ShapeError("Mlp: layer " + std::to_string(l) + " shape mismatch");
      }
    }
    for (auto& t : tensors) m.params_.push_back(Var::parameter(std::move(t)));
    return m;
  }

 private:
  std::vector<std::size_t> widths_;
  std::vector<Var> params_;
};

}  // namespace ipnn::numgrad
