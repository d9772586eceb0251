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

#include <memory>
#include <string>
#include <vector>

#include "ipnn/numgrad/graph.hpp"

namespace ipnn::numgrad {

class Optimizer {
 public:
  explicit Optimizer(double learning_rate) : lr_(learning_rate) {
    if (!(learning_rate > 0.0)) throw ContractError("learning rate must be positive");
  }
  virtual ~Optimizer() = default;

  virtual void step(std::vector<Var>& params) = 0;

  void zero_grad(std::vector<Var>& params) const {
    for (auto& p : params) p.zero_grad();
  }

  double learning_rate() const noexcept { return lr_; }

 protected:
  double lr_;
};

/// theta <- theta - lr * grad
class Sgd final : public Optimizer {
 public:
  using Optimizer::Optimizer;

  void step(std::vector<Var>& params) override {
    for (auto& p : params) {
      auto v = p.mutable_value().values();
      const auto& g = p.grad();
      for (std::size_t i = 0; i < v.size(); ++i) v[i] -= lr_ * g[i];
    }
  }
};

/// Heavy-ball momentum: v <- mu*v + grad; theta <- theta - lr*v.
class Momentum final : public Optimizer {
 public:
  Momentum(double learning_rate, double mu) : Optimizer(learning_rate), mu_(mu) {}

  void step(std::vector<Var>& params) override {
    if (velocity_.size() != params.size()) {
      velocity_.clear();
      for (auto& p : params) velocity_.emplace_back(p.shape());
    }
    for (std::size_t k = 0; k < params.size(); ++k) {
      auto v = params[k].mutable_value().values();
      const auto& g = params[k].grad();
      auto& vel = velocity_[k];
      for (std::size_t i = 0; i < v.size(); ++i) {
        vel[i] = mu_ * vel[i] + g[i];
        v[i] -= lr_ * vel[i];
      }
    }
  }

 private:
  double mu_;
  std::vector<Tensor> velocity_;
};

inline std::unique_ptr<Optimizer> make_optimizer(const std::string& name, double lr, double momentum) {
  if (name == "sgd") return std::make_unique<Sgd>(lr);
  if (name == "momentum") return std::make_unique<Momentum>(lr, momentum);
  throw ContractError("unknown optimizer '" + name + "'");
}

}  // namespace ipnn::numgrad
