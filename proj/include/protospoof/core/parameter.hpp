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

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "protospoof/core/tensor.hpp"

namespace protospoof {

/// A named tensor owned by a model. Non-trainable parameters hold buffers
/// such as batchnorm running statistics; they are checkpointed but never
/// touched by the optimizer.
template <class T>
struct Parameter {
  std::string name;
  Tensor<T> value;
  Tensor<T> grad;
  bool trainable = true;

  Parameter(std::string n, Tensor<T> v, bool train = true)
      : name(std::move(n)), value(std::move(v)), grad(value.shape()),
        trainable(train) {}

  void zero_grad() { grad.fill(T(0)); }
};

/// Insertion-ordered collection of parameters with stable addresses.
template <class T>
class ParameterStore {
 public:
  Parameter<T>& add(const std::string& name, Tensor<T> value,
                    bool trainable = true) {
    if (index_.count(name)) throw ConfigError("duplicate parameter " + name);
    items_.push_back(std::make_unique<Parameter<T>>(name, std::move(value), trainable));
    index_[name] = items_.size() - 1;
    return *items_.back();
  }

  Parameter<T>& get(const std::string& name) {
    auto it = index_.find(name);
    if (it == index_.end()) throw ConfigError("no parameter named " + name);
    return *items_[it->second];
  }
  const Parameter<T>& get(const std::string& name) const {
    return const_cast<ParameterStore*>(this)->get(name);
  }
  bool contains(const std::string& name) const { return index_.count(name) != 0; }

  std::size_t size() const { return items_.size(); }
  Parameter<T>& operator[](std::size_t i) { return *items_[i]; }
  const Parameter<T>& operator[](std::size_t i) const { return *items_[i]; }

  std::vector<Parameter<T>*> trainable() {
    std::vector<Parameter<T>*> out;
    for (auto& p : items_)
      if (p->trainable) out.push_back(p.get());
    return out;
  }

  std::size_t trainable_count() const {
    std::size_t n = 0;
    for (const auto& p : items_)
      if (p->trainable) n += p->value.size();
    return n;
  }

  void zero_grad() {
    for (auto& p : items_) p->zero_grad();
  }

 private:
  std::vector<std::unique_ptr<Parameter<T>>> items_;
  std::map<std::string, std::size_t> index_;
};

}  // namespace protospoof
