/*
 * Copyright (c) 2026, The CFAT-SR Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include "cfat/tensor.hpp"

#include <functional>
#include <memory>
#include <type_traits>
#include <vector>

namespace cfat {

template <typename Scalar>
class Tape;

/// One value in the computation graph. `grad` stays empty until some
/// consumer accumulates into it.
template <typename Scalar>
struct Node {
  Tensor<Scalar> value;
  Tensor<Scalar> grad;
  std::function<void(const Tensor<Scalar>&)> backward;
  bool requires_grad = false;

  Tensor<Scalar>& grad_ref() {
    if (grad.empty() && !value.empty()) grad = Tensor<Scalar>(value.shape());
    return grad;
  }
};

/// Handle to a graph value. Values created without a recording tape (or from
/// inputs that need no gradient) are plain constants and are freed as soon as
/// the last handle goes away.
template <typename Scalar>
class Var {
 public:
  Var() = default;
  Var(std::shared_ptr<Node<Scalar>> node, Tape<Scalar>* tape) : node_(std::move(node)), tape_(tape) {}

  const Tensor<Scalar>& value() const { return node_->value; }
  const Shape& shape() const { return node_->value.shape(); }
  bool requires_grad() const { return node_ && node_->requires_grad; }
  Tape<Scalar>* tape() const { return tape_; }
  const Tensor<Scalar>& grad() const { return node_->grad; }
  const std::shared_ptr<Node<Scalar>>& node() const { return node_; }
  bool defined() const { return static_cast<bool>(node_); }

 private:
  std::shared_ptr<Node<Scalar>> node_;
  Tape<Scalar>* tape_ = nullptr;
};

template <typename Scalar>
Var<Scalar> constant(Tensor<Scalar> value) {
  auto node = std::make_shared<Node<Scalar>>();
  node->value = std::move(value);
  return Var<Scalar>(std::move(node), nullptr);
}

/// Records nodes in creation order; `backward` replays them in reverse.
template <typename Scalar>
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var<Scalar> leaf(Tensor<Scalar> value) {
    auto node = std::make_shared<Node<Scalar>>();
    node->value = std::move(value);
    node->requires_grad = true;
    nodes_.push_back(node);
    return Var<Scalar>(std::move(node), this);
  }

  // Leaf whose gradient is added into `sink` during backward.
  Var<Scalar> leaf(Tensor<Scalar> value, Tensor<Scalar>* sink) {
    Var<Scalar> v = leaf(std::move(value));
    Node<Scalar>* raw = v.node().get();
    raw->backward = [sink, raw](const Tensor<Scalar>& g) {
      if (sink->empty()) *sink = Tensor<Scalar>(raw->value.shape());
      sink->values() += g.values();
    };
    return v;
  }

  Var<Scalar> record(std::shared_ptr<Node<Scalar>> node) {
    node->requires_grad = true;
    nodes_.push_back(node);
    return Var<Scalar>(std::move(node), this);
  }

  /// Seeds d(root)/d(root) = 1 for a scalar root and propagates.
  void backward(const Var<Scalar>& root) {
    if (root.value().size() != 1) throw InvalidArgument("backward root must be a scalar");
    if (!root.requires_grad()) return;
    root.node()->grad_ref().values().setOnes();
    for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) {
      Node<Scalar>& n = **it;
      if (n.backward && !n.grad.empty()) n.backward(n.grad);
    }
  }

  std::size_t size() const { return nodes_.size(); }
  void clear() { nodes_.clear(); }

 private:
  std::vector<std::shared_ptr<Node<Scalar>>> nodes_;
};

/// Builds an op result. If any input is tape-tracked, the node is recorded
/// and `make_backward` is invoked to supply the closure; otherwise the
/// result is an untracked constant. `make_backward` may take the result node
/// (to read the forward value during backward) or nothing.
template <typename Scalar, typename MakeBackward>
Var<Scalar> make_result(Tensor<Scalar> value, std::initializer_list<const Var<Scalar>*> inputs,
                        MakeBackward&& make_backward) {
  Tape<Scalar>* tape = nullptr;
  for (const Var<Scalar>* in : inputs) {
    if (in->requires_grad()) {
      tape = in->tape();
      break;
    }
  }
  auto node = std::make_shared<Node<Scalar>>();
  node->value = std::move(value);
  if (!tape) return Var<Scalar>(std::move(node), nullptr);
  if constexpr (std::is_invocable_v<MakeBackward, const Node<Scalar>*>) {
    node->backward = make_backward(static_cast<const Node<Scalar>*>(node.get()));
  } else {
    node->backward = make_backward();
  }
  return tape->record(std::move(node));
}

/// Adds `g` into the gradient slot of `v` when it is tracked.
template <typename Scalar>
void accumulate(const std::shared_ptr<Node<Scalar>>& node, const Vector<Scalar>& g) {
  if (!node->requires_grad) return;
  node->grad_ref().values() += g;
}

}  // namespace cfat
