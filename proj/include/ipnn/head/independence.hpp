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

#include "ipnn/head/joint.hpp"

namespace ipnn::head {

namespace detail {

/// KL(q || r) for two distributions on the same support, differentiable in
/// both. Terms with q == 0 contribute 0.
inline Var kl_divergence(const Var& q, const Var& r) {
  q.value().require_same_shape(r.value(), "kl_divergence");
  constexpr double tiny = 1e-300;
  double s = 0.0;
  for (std::size_t p = 0; p < q.value().size(); ++p) {
    const double qv = q.value()[p];
    if (qv > 0.0) s += qv * std::log(qv / std::max(r.value()[p], tiny));
  }
  return numgrad::make_node(Tensor::scalar(s), {q, r}, [tiny](numgrad::Node& self) {
    numgrad::Node& nq = *self.parents[0];
    numgrad::Node& nr = *self.parents[1];
    const double g = self.grad[0];
    for (std::size_t p = 0; p < nq.value.size(); ++p) {
      const double qv = nq.value[p];
      const double rv = std::max(nr.value[p], tiny);
      if (qv <= 0.0) continue;
      if (nq.requires_grad) nq.grad[p] += g * (std::log(qv / rv) + 1.0);
      if (nr.requires_grad) nr.grad[p] -= g * qv / rv;
    }
  });
}

}  // namespace detail

/// KL divergence between the batch-mean joint distribution of the event
/// variables and the product of their batch-mean marginals, i.e. the mutual
/// information of the variables under the batch's empirical distribution.
/// Non-negative; zero iff the batch-mean joint factorizes.
inline Var mutual_independence_loss(const EventProbs& probs) {
  if (probs.variables() == 0) throw ContractError("mutual_independence_loss: no variables");
  Var joint_mean = numgrad::mean_rows(joint_event_probs(probs));
  EventProbs marginals;
  for (const auto& a : probs.alphas) marginals.alphas.push_back(numgrad::mean_rows(a));
  Var product = joint_event_probs(marginals);
  return detail::kl_divergence(joint_mean, product);
}

}  // namespace ipnn::head
