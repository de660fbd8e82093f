// Copyright 2026 The protospoof Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <deque>
#include <functional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "protospoof/core/parameter.hpp"
#include "protospoof/core/tensor.hpp"

namespace protospoof {

template <class T>
class Graph;

/// Handle to a node on a Graph tape. Cheap to copy; only valid while the
/// graph that produced it is alive.
template <class T>
class Var {
 public:
  Var() = default;
  Var(Graph<T>* g, std::size_t id) : graph_(g), id_(id) {}

  Graph<T>& graph() const { return *graph_; }
  std::size_t id() const { return id_; }
  const Tensor<T>& value() const { return graph_->value(*this); }
  const Shape& shape() const { return value().shape(); }
  bool requires_grad() const { return graph_->requires_grad(*this); }

 private:
  Graph<T>* graph_ = nullptr;
  std::size_t id_ = 0;
};

/// Reverse-mode tape. Every op appends a node holding its forward value and a
/// closure that, given the node's output gradient, accumulates gradients into
/// its inputs. Values are immutable once recorded.
///
/// With recording disabled the graph only evaluates: no closures are kept and
/// no node requires a gradient.
template <class T>
class Graph {
 public:
  using Backward =
      std::function<void(const Tensor<T>& out_grad, const Tensor<T>& out_value)>;

  explicit Graph(bool record = true) : record_(record) {}
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  bool recording() const { return record_; }

  Var<T> constant(Tensor<T> v) { return push(std::move(v), "constant", false); }

  // Leaf that receives a gradient; used by grad checks and tests.
  Var<T> input(Tensor<T> v) { return push(std::move(v), "input", record_); }

  Var<T> parameter(Parameter<T>& p) {
    Var<T> v = push(p.value, p.name, record_ && p.trainable);
    nodes_[v.id()].param = &p;
    return v;
  }

  /// Appends an op result. `backward` is dropped unless some input requires a
  /// gradient.
  Var<T> record(std::string_view op, Tensor<T> value,
                std::initializer_list<Var<T>> inputs, Backward backward) {
    bool needs = false;
    if (record_)
      for (const auto& in : inputs) needs = needs || requires_grad(in);
    Var<T> out = push(std::move(value), op, needs);
    if (needs) nodes_[out.id()].backward = std::move(backward);
    return out;
  }

  const Tensor<T>& value(Var<T> v) const { return nodes_[v.id()].value; }
  bool requires_grad(Var<T> v) const { return nodes_[v.id()].requires_grad; }

  /// Gradient buffer of a node, allocated (zeroed) on first access.
  Tensor<T>& grad(Var<T> v) {
    Node& n = nodes_[v.id()];
    if (n.grad.shape() != n.value.shape()) n.grad = Tensor<T>(n.value.shape());
    return n.grad;
  }

  /// Seeds d(root)/d(root) = seed (root must be a scalar) and runs the tape in
  /// reverse. Parameter leaves accumulate into Parameter::grad.
  void backward(Var<T> root, T seed = T(1)) {
    if (value(root).size() != 1)
      throw ConfigError("backward root must be a scalar, got " +
                        shape_string(value(root).shape()));
    if (!requires_grad(root)) return;
    grad(root)[0] += seed;
    for (std::size_t i = root.id() + 1; i-- > 0;) {
      Node& n = nodes_[i];
      if (!n.requires_grad || n.grad.empty()) continue;
      if (!n.grad.all_finite())
        throw NumericError("non-finite gradient at " + n.label);
      if (n.backward) n.backward(n.grad, n.value);
      if (n.param) {
        auto& pg = n.param->grad;
        for (std::size_t k = 0; k < pg.size(); ++k) pg[k] += n.grad[k];
      }
    }
  }

  /// Names nodes recorded while alive, e.g. "stage2.block0.conv1".
  class Scope {
   public:
    Scope(Graph& g, std::string_view name) : g_(g), saved_(g.scope_) {
      g_.scope_ = saved_.empty() ? std::string(name) : saved_ + "." + std::string(name);
    }
    ~Scope() { g_.scope_ = saved_; }
    Scope(const Scope&) = delete;
    Scope& operator=(const Scope&) = delete;

   private:
    Graph& g_;
    std::string saved_;
  };

  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Tensor<T> value;
    Tensor<T> grad;
    Backward backward;
    Parameter<T>* param = nullptr;
    std::string label;
    bool requires_grad = false;
  };

  Var<T> push(Tensor<T> value, std::string_view op, bool requires_grad) {
    std::string label = scope_.empty() ? std::string(op) : scope_ + "/" + std::string(op);
    if (!value.all_finite())
      throw NumericError("non-finite values produced by " + label);
    nodes_.push_back(Node{std::move(value), {}, {}, nullptr, std::move(label),
                          requires_grad});
    return Var<T>(this, nodes_.size() - 1);
  }

  bool record_;
  std::string scope_;
  std::deque<Node> nodes_;
};

}  // namespace protospoof
