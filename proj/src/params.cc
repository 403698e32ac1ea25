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

#include "wecodec/params.h"

#include "wecodec/errors.h"

namespace wecodec {

Parameter& ParamStore::add(std::string name, std::vector<std::uint32_t> dims,
                           Tensor3 value) {
  if (index_.count(name) != 0) {
    throw ArgumentError("duplicate parameter name: " + name);
  }
  std::size_t n = 1;
  for (std::uint32_t d : dims) n *= d;
  if (dims.empty() || n != value.size()) {
    throw ArgumentError("parameter " + name + ": dims do not match value");
  }
  Parameter p;
  p.name = name;
  p.dims = std::move(dims);
  p.grad = Tensor3(value.channels(), value.height(), value.width());
  p.adam_m = p.grad;
  p.adam_v = p.grad;
  p.value = std::move(value);
  index_.emplace(std::move(name), params_.size());
  params_.push_back(std::move(p));
  return params_.back();
}

Parameter& ParamStore::at(const std::string& name) {
  auto it = index_.find(name);
  if (it == index_.end()) throw ArgumentError("unknown parameter: " + name);
  return params_[it->second];
}

const Parameter& ParamStore::at(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw ArgumentError("unknown parameter: " + name);
  return params_[it->second];
}

std::size_t ParamStore::total_count() const {
  std::size_t n = 0;
  for (const Parameter& p : params_) n += p.count();
  return n;
}

void ParamStore::zero_grad() {
  for (Parameter& p : params_) {
    p.grad.fill(0.0);
    p.has_grad = false;
  }
}

}  // namespace wecodec
