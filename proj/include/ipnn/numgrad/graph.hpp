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

#include <functional>
#include <memory>
#include <unordered_set>
#include <utility>
#include <vector>

#include "ipnn/numgrad/tensor.hpp"

namespace ipnn::numgrad {

struct Node;
using NodePtr = std::shared_ptr<Node>;

/// One vertex of the reverse-mode tape. `backward` reads `grad` of this node
/// and accumulates into the `grad` of each parent that requires it.
struct Node {
  Tensor value;
  Tensor grad;
  std::vector<NodePtr> parents;
  std::function<void(Node&)> backward;
  bool requires_grad = false;

  Node() = default;
  Node(const Node&) = delete;
  Node& operator=(const Node&) = delete;

  // Releases long parent chains iteratively instead of recursing through
  // nested shared_ptr destructors.
  ~Node() {
    std::vector<NodePtr> pending = std::move(parents);
    while (!pending.empty()) {
      NodePtr n = std::move(pending.back());
      pending.pop_back();
      if (n && n.use_count() == 1) {
        for (auto& p : n->parents) pending.push_back(std::move(p));
        n->parents.clear();
      }
    }
  }

  void ensure_grad() {
    if (grad.shape() != value.shape()) grad = Tensor(value.shape());
  }
};

/// Handle to a graph node. Copies share the node.
class Var {
 public:
  Var() = default;
  explicit Var(NodePtr node) : node_(std::move(node)) {}

  /// Leaf with no gradient (inputs, constants).
  static Var constant(Tensor t) {
    auto n = std::make_shared<Node>();
    n->value = std::move(t);
    return Var(std::move(n));
  }

  /// Leaf that accumulates a gradient (model parameters).
  static Var parameter(Tensor t) {
    auto n = std::make_shared<Node>();
    n->value = std::move(t);
    n->requires_grad = true;
    n->ensure_grad();
    return Var(std::move(n));
  }

  const Tensor& value() const { return node_->value; }
  Tensor& mutable_value() { return node_->value; }
  const Tensor& grad() const { return node_->grad; }
  Tensor& mutable_grad() { return node_->grad; }
  bool requires_grad() const { return node_ && node_->requires_grad; }
  const Shape& shape() const { return node_->value.shape(); }

  void zero_grad() {
    node_->ensure_grad();
    node_->grad.fill(0.0);
  }

  Node& node() { return *node_; }
  const NodePtr& ptr() const { return node_; }
  explicit operator bool() const { return static_cast<bool>(node_); }

 private:
  NodePtr node_;
};

/// Builds an interior node. The node requires a gradient when any parent does;
/// otherwise the backward closure is dropped so constant subgraphs cost nothing.
inline Var make_node(Tensor value, std::vector<Var> parents, std::function<void(Node&)> backward) {
  auto n = std::make_shared<Node>();
  n->value = std::move(value);
  for (auto& p : parents) {
    n->requires_grad = n->requires_grad || p.requires_grad();
    n->parents.push_back(p.ptr());
  }
  if (n->requires_grad) {
    n->backward = std::move(backward);
  } else {
    n->parents.clear();
  }
  return Var(std::move(n));
}

/// Reverse-mode sweep from a scalar loss. Parameter gradients are accumulated
/// (callers zero them between steps); interior gradients are reset here.
inline void backward(Var& loss) {
  if (loss.value().size() != 1) {
    throw ContractError("backward: loss must be scalar, got shape " + to_string(loss.shape()));
  }
  if (!loss.requires_grad()) return;

  // Iterative post-order DFS; reversed it is a topological order.
  std::vector<Node*> order;
  std::unordered_set<Node*> visited;
  std::vector<std::pair<Node*, std::size_t>> stack{{&loss.node(), 0}};
  visited.insert(&loss.node());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      Node* parent = node->parents[next++].get();
      if (parent->requires_grad && visited.insert(parent).second) stack.emplace_back(parent, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  for (Node* n : order) {
    if (n->backward) {
      n->grad = Tensor(n->value.shape());
    } else {
      n->ensure_grad();
    }
  }
  loss.node().grad[0] = 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    if ((*it)->backward) (*it)->backward(**it);
  }
}

}  // namespace ipnn::numgrad
