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

#include "wecodec/checkpoint.h"

#include <algorithm>
#include <map>

#include "wecodec/byte_io.h"
#include "wecodec/errors.h"

namespace wecodec {
namespace {

constexpr char kMagic[] = "3DWP";

}  // namespace

std::vector<std::uint8_t> encode_checkpoint(
    std::span<const CheckpointRecord> records) {
  ByteWriter w;
  w.text(std::string_view(kMagic, 4));
  w.u8(kCheckpointVersion);
  for (const CheckpointRecord& r : records) {
    std::size_t n = 1;
    for (std::uint32_t d : r.dims) n *= d;
    if (r.dims.size() > 255 || n != r.values.size()) {
      throw ArgumentError("checkpoint record " + r.name + ": bad dims");
    }
    w.u32(static_cast<std::uint32_t>(r.name.size()));
    w.text(r.name);
    w.u8(static_cast<std::uint8_t>(r.dims.size()));
    for (std::uint32_t d : r.dims) w.u32(d);
    for (double v : r.values) w.f64(v);
  }
  return w.take();
}

std::vector<CheckpointRecord> decode_checkpoint(
    std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes);
  if (r.text(4) != std::string_view(kMagic, 4)) {
    throw DecodeError("not a parameter checkpoint");
  }
  if (r.u8() != kCheckpointVersion) {
    throw DecodeError("unsupported checkpoint version");
  }
  std::vector<CheckpointRecord> out;
  while (r.remaining() > 0) {
    CheckpointRecord rec;
    const std::uint32_t len = r.u32();
    rec.name = r.text(len);
    const int rank = r.u8();
    std::size_t n = 1;
    for (int i = 0; i < rank; ++i) {
      rec.dims.push_back(r.u32());
      n *= rec.dims.back();
    }
    if (n > r.remaining() / 8) throw DecodeError("truncated checkpoint");
    rec.values.resize(n);
    for (double& v : rec.values) v = r.f64();
    out.push_back(std::move(rec));
  }
  return out;
}

std::vector<CheckpointRecord> store_records(const ParamStore& store) {
  std::vector<CheckpointRecord> out;
  for (const Parameter& p : store.all()) {
    out.push_back({p.name, p.dims,
                   std::vector<double>(p.value.data().begin(),
                                       p.value.data().end())});
  }
  return out;
}

void load_records(ParamStore& store,
                  std::span<const CheckpointRecord> records) {
  std::map<std::string, const CheckpointRecord*> by_name;
  for (const CheckpointRecord& r : records) by_name[r.name] = &r;
  for (Parameter& p : store.all()) {
    auto it = by_name.find(p.name);
    if (it == by_name.end()) {
      throw ConfigError("checkpoint lacks parameter " + p.name);
    }
    if (it->second->dims != p.dims) {
      throw ConfigError("checkpoint shape mismatch for " + p.name);
    }
    std::copy(it->second->values.begin(), it->second->values.end(),
              p.value.data().begin());
  }
}

void save_checkpoint(const std::string& path, const ParamStore& store) {
  write_file(path, encode_checkpoint(store_records(store)));
}

void load_checkpoint(const std::string& path, ParamStore& store) {
  load_records(store, decode_checkpoint(read_file(path)));
}

}  // namespace wecodec
