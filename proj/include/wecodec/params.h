// Copyright 2026 The wecodec Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef WECODEC_PARAMS_H_
#define WECODEC_PARAMS_H_

#include <cstdint>
#include <deque>
#include <map>
#include <string>
#include <vector>

#include "wecodec/tensor.h"

namespace wecodec {

// A learned tensor plus its gradient and Adam moments. `dims` is the logical
// shape written to checkpoints (e.g. {C_out, C_in, K, K}); `value` stores the
// same elements in a Tensor3 whose size equals the product of dims.
struct Parameter {
  std::string name;
  std::vector<std::uint32_t> dims;
  Tensor3 value;
  Tensor3 grad;
  Tensor3 adam_m;
  Tensor3 adam_v;
  bool has_grad = false;

  std::size_t count() const { return value.size(); }
};

// Named parameters in insertion order. Iteration order is the creation order,
// which makes optimizer updates and checkpoints deterministic. Addresses of
// stored parameters are stable.
class ParamStore {
 public:
  ParamStore() = default;
  ParamStore(const ParamStore&) = delete;
  ParamStore& operator=(const ParamStore&) = delete;
  ParamStore(ParamStore&&) = default;
  ParamStore& operator=(ParamStore&&) = default;

  // Throws ArgumentError on duplicate names or when value.size() differs from
  // the product of dims.
  Parameter& add(std::string name, std::vector<std::uint32_t> dims,
                 Tensor3 value);

  Parameter& at(const std::string& name);
  const Parameter& at(const std::string& name) const;
  bool contains(const std::string& name) const {
    return index_.count(name) != 0;
  }

  std::size_t size() const { return params_.size(); }
  std::deque<Parameter>& all() { return params_; }
  const std::deque<Parameter>& all() const { return params_; }

  std::size_t total_count() const;
  void zero_grad();

 private:
  std::deque<Parameter> params_;
  std::map<std::string, std::size_t> index_;
};

}  // namespace wecodec

#endif  // WECODEC_PARAMS_H_
