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

// Parameter checkpoints: "3DWP", a version byte, then records of
// (u32 name length, name, u8 rank, u32 dims, f64 values), all little-endian.

#ifndef WECODEC_CHECKPOINT_H_
#define WECODEC_CHECKPOINT_H_

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "wecodec/params.h"

namespace wecodec {

inline constexpr std::uint8_t kCheckpointVersion = 1;

struct CheckpointRecord {
  std::string name;
  std::vector<std::uint32_t> dims;
  std::vector<double> values;
};

std::vector<std::uint8_t> encode_checkpoint(
    std::span<const CheckpointRecord> records);
// Throws DecodeError on bad magic, version or truncation.
std::vector<CheckpointRecord> decode_checkpoint(
    std::span<const std::uint8_t> bytes);

// Records for every parameter value, in store order.
std::vector<CheckpointRecord> store_records(const ParamStore& store);
// Copies record values into matching parameters. Every store parameter must
// be present with identical dims (ConfigError otherwise); records with other
// names are ignored.
void load_records(ParamStore& store,
                  std::span<const CheckpointRecord> records);

void save_checkpoint(const std::string& path, const ParamStore& store);
void load_checkpoint(const std::string& path, ParamStore& store);

}  // namespace wecodec

#endif  // WECODEC_CHECKPOINT_H_
