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

#include "cfat/autograd.hpp"

#include <optional>
#include <random>
#include <string>
#include <unordered_map>
#include <vector>

namespace cfat {

using ParamId = int;

template <typename Scalar>
struct Parameter {
  std::string name;
  Tensor<Scalar> value;
  Tensor<Scalar> grad;
};

/// Named, shape-fixed collection of trainable tensors. Ids are insertion
/// indices, so two stores built by the same sequence of `add` calls (or one
/// cast from the other) share ids.
template <typename Scalar>
class ParamStore {
 public:
  ParamId add(const std::string& name, Tensor<Scalar> value) {
    if (index_.count(name)) throw InvalidArgument("duplicate parameter name: " + name);
    const ParamId id = static_cast<ParamId>(params_.size());
    index_.emplace(name, id);
    params_.push_back({name, std::move(value), {}});
    return id;
  }

  Parameter<Scalar>& operator[](ParamId id) { return params_.at(id); }
  const Parameter<Scalar>& operator[](ParamId id) const { return params_.at(id); }

  std::optional<ParamId> find(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  std::size_t size() const { return params_.size(); }
  Index total_elements() const {
    Index n = 0;
    for (const auto& p : params_) n += p.value.size();
    return n;
  }

  void zero_grad() {
    for (auto& p : params_) p.grad = Tensor<Scalar>(p.value.shape());
  }

  auto begin() { return params_.begin(); }
  auto end() { return params_.end(); }
  auto begin() const { return params_.begin(); }
  auto end() const { return params_.end(); }

  template <typename Other>
  ParamStore<Other> cast() const {
    ParamStore<Other> out;
    for (const auto& p : params_) out.add(p.name, p.value.template cast<Other>());
    return out;
  }

  /// Copies values (not grads) from a store with identical names and shapes.
  template <typename Other>
  void assign_from(const ParamStore<Other>& other) {
    if (other.size() != size()) throw InvalidArgument("parameter count mismatch");
    for (std::size_t i = 0; i < params_.size(); ++i) {
      const auto& src = other[static_cast<ParamId>(i)];
      if (src.name != params_[i].name || src.value.shape() != params_[i].value.shape()) {
        throw InvalidArgument("parameter mismatch at " + params_[i].name);
      }
      params_[i].value = src.value.template cast<Scalar>();
    }
  }

 private:
  std::vector<Parameter<Scalar>> params_;
  std::unordered_map<std::string, ParamId> index_;
};

/// Resolves parameters to graph values for one forward pass. With a tape the
/// parameters become leaves whose gradients land in `Parameter::grad`;
/// without one they are constants.
template <typename Scalar>
class Binder {
 public:
  explicit Binder(ParamStore<Scalar>& store, Tape<Scalar>* tape = nullptr)
      : store_(store), tape_(tape), cache_(store.size()) {}

  Var<Scalar> operator()(ParamId id) {
    Var<Scalar>& slot = cache_.at(id);
    if (!slot.defined()) {
      Parameter<Scalar>& p = store_[id];
      slot = tape_ ? tape_->leaf(p.value, &p.grad) : constant(p.value);
    }
    return slot;
  }

  Tape<Scalar>* tape() const { return tape_; }
  ParamStore<Scalar>& store() { return store_; }

 private:
  ParamStore<Scalar>& store_;
  Tape<Scalar>* tape_;
  std::vector<Var<Scalar>> cache_;
};

/// Deterministic initializers. Values are drawn in double so a float model
/// and a double model built from the same seed agree up to rounding.
/// Uniform double in [0, 1) from the top 53 bits of one engine draw.
double unit_uniform(std::mt19937_64& rng);

class Initializer {
 public:
  explicit Initializer(std::uint64_t seed) : rng_(seed) {}

  // Normal(0, sigma) truncated to [-2 sigma, 2 sigma].
  Tensor<double> trunc_normal(Shape shape, double sigma);
  Tensor<double> uniform(Shape shape, double bound);
  static Tensor<double> zeros(Shape shape) { return Tensor<double>(std::move(shape)); }
  static Tensor<double> ones(Shape shape) { return Tensor<double>::constant(std::move(shape), 1.0); }

  std::mt19937_64& rng() { return rng_; }

 private:
  double normal();

  std::mt19937_64 rng_;
};

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Contents of a checkpoint file: an opaque configuration text plus the
/// parameter records in file order.
struct Checkpoint {
  std::string config_text;
  ParamStore<float> params;
};

void save_checkpoint(const std::string& path, const ParamStore<float>& params, const std::string& config_text = {});
Checkpoint load_checkpoint(const std::string& path);

}  // namespace cfat
