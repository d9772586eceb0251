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

#include <cstddef>
#include <string>
#include <vector>

#include "ipnn/numgrad/tensor.hpp"

namespace ipnn::head {

using numgrad::ContractError;
using numgrad::ShapeError;

/// Dense joint spaces beyond this many points are rejected.
inline constexpr std::size_t kMaxJointPoints = std::size_t{1} << 24;

/// Partition of the output neurons into N discrete random variables with
/// M_j events each. Joint points are flattened row-major, variable 0 slowest.
class SplitShape {
 public:
  SplitShape() = default;

  explicit SplitShape(std::vector<std::size_t> sizes) : sizes_(std::move(sizes)) {
    if (sizes_.empty()) throw ContractError("split shape needs at least one variable");
    joint_ = 1;
    for (std::size_t m : sizes_) {
      if (m == 0) throw ContractError("split shape sizes must be positive");
      if (joint_ > kMaxJointPoints / m) {
        throw ContractError("split shape " + to_string() + " exceeds the dense joint-space cap of 2^24 points");
      }
      joint_ *= m;
      total_ += m;
    }
  }

  std::size_t variables() const noexcept { return sizes_.size(); }
  std::size_t size(std::size_t j) const { return sizes_.at(j); }
  const std::vector<std::size_t>& sizes() const noexcept { return sizes_; }

  /// Sum of M_j: number of model output neurons.
  std::size_t total_outputs() const noexcept { return total_; }
  /// Product of M_j: number of joint sample points.
  std::size_t joint_points() const noexcept { return joint_; }

  /// Column offset of variable j inside the logits.
  std::size_t offset(std::size_t j) const {
    std::size_t o = 0;
    for (std::size_t i = 0; i < j; ++i) o += sizes_.at(i);
    return o;
  }

  std::size_t flatten(const std::vector<std::size_t>& events) const {
    if (events.size() != sizes_.size()) throw ShapeError("flatten: wrong number of event indices");
    std::size_t p = 0;
    for (std::size_t j = 0; j < sizes_.size(); ++j) {
      if (events[j] >= sizes_[j]) throw ContractError("flatten: event index out of range");
      p = p * sizes_[j] + events[j];
    }
    return p;
  }

  std::vector<std::size_t> unflatten(std::size_t point) const {
    std::vector<std::size_t> events(sizes_.size());
    for (std::size_t j = sizes_.size(); j-- > 0;) {
      events[j] = point % sizes_[j];
      point /= sizes_[j];
    }
    return events;
  }

  /// Shape restricted to the listed variables, in the listed order.
  SplitShape subset(const std::vector<std::size_t>& vars) const {
    std::vector<std::size_t> s;
    for (std::size_t v : vars) s.push_back(sizes_.at(v));
    return SplitShape(std::move(s));
  }

  std::string to_string() const {
    std::string s = "{";
    for (std::size_t j = 0; j < sizes_.size(); ++j) s += (j ? "," : "") + std::to_string(sizes_[j]);
    return s + "}";
  }

  friend bool operator==(const SplitShape&, const SplitShape&) = default;

 private:
  std::vector<std::size_t> sizes_;
  std::size_t total_ = 0;
  std::size_t joint_ = 0;
};

/// Number of non-empty sub-joint spaces, sum over j of C(N, j) = 2^N - 1.
inline std::size_t count_sub_joint_spaces(const SplitShape& split) {
  const std::size_t n = split.variables();
  if (n >= 8 * sizeof(std::size_t)) throw ContractError("too many variables to count sub-joint spaces");
  return (std::size_t{1} << n) - 1;
}

}  // namespace ipnn::head
