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

// The full learned codec: analysis and synthesis transforms, the hyperprior
// networks, the factorized prior on the hyper-latent and the slice entropy
// model.
//
//   g_a: conv s2 (3 -> N), res group, then three more stride-2 stages; the
//        last maps N -> M. Stages listed in weconv_stages use a wavelet
//        convolution layer instead of a plain strided conv.
//   g_s: the mirror image with transposed layers.
//   h_a: conv s1 (M -> N), conv s2, conv s2.
//   h_s: tconv s2, tconv s2, conv s1 (-> 2M), at latent resolution.

#ifndef WECODEC_MODEL_H_
#define WECODEC_MODEL_H_

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "wecodec/checkpoint.h"
#include "wecodec/entropy.h"
#include "wecodec/nn.h"
#include "wecodec/wecharm.h"
#include "wecodec/weconv.h"

namespace wecodec {

enum class Profile : std::uint8_t { kToy = 0, kPaper = 1 };

std::string_view profile_name(Profile p);
// "toy" or "paper"; ArgumentError otherwise.
Profile parse_profile(std::string_view name);

// Rate-distortion weights the codec is usually trained at. Bitstreams carry
// the index of the model's weight, or kNoLambdaIndex.
inline constexpr double kLambdaGrid[] = {0.0025, 0.0035, 0.0067,
                                         0.013,  0.025,  0.05};
inline constexpr std::uint8_t kNoLambdaIndex = 0xFF;
std::uint8_t lambda_index(double lambda);

// Input sizes are padded to this multiple.
inline constexpr int kSizeMultiple = 64;

struct ModelConfig {
  Profile profile = Profile::kToy;
  int filters = 32;          // internal width
  int latent_channels = 64;  // M
  int res_blocks = 1;        // per res group
  WaveletKind channel_kind = WaveletKind::kHaar;
  WaveletKind spatial_kind = WaveletKind::kCdf97;
  int weconv_levels = 2;
  int hf_kernel = 1;
  // Subset of {2, 3, 4}.
  std::vector<int> weconv_stages = {2, 3};
  EntropyLayout entropy_layout = EntropyLayout::kChannelSpatial;
  bool attention = true;
  double lambda = 0.013;
  std::uint64_t seed = 42;

  bool operator==(const ModelConfig&) const = default;
};

ModelConfig toy_config();
ModelConfig paper_config();
// Throws ConfigError on inconsistent settings.
void validate(const ModelConfig& cfg);

// Config <-> the reserved checkpoint record.
inline constexpr const char* kConfigRecordName = "meta.config";
CheckpointRecord config_record(const ModelConfig& cfg);
ModelConfig config_from_record(const CheckpointRecord& record);

struct LayerCount {
  std::string name;
  std::size_t params;
};

struct TrainForward {
  Var y;
  Var x_hat;
  std::vector<Var> slice_bits;  // plan order
  Var z_bits;
};

class CodecModel {
 public:
  explicit CodecModel(const ModelConfig& cfg);
  CodecModel(const CodecModel&) = delete;
  CodecModel& operator=(const CodecModel&) = delete;

  const ModelConfig& config() const { return cfg_; }
  ParamStore& params() { return store_; }
  const ParamStore& params() const { return store_; }
  const WeCharm& entropy_model() const { return charm_; }
  const FactorizedPrior& hyper_prior() const { return prior_; }

  Var analysis(Tape& tape, Var x) const;
  Var synthesis(Tape& tape, Var y) const;
  Var hyper_analysis(Tape& tape, Var y) const;
  Var hyper_synthesis(Tape& tape, Var z) const;

  // Noise-surrogate graph used for training. x is 3 x H x W with H and W
  // multiples of 64.
  TrainForward forward_train(Tape& tape, Var x, SeededRng& noise) const;

  // Parameter totals derived from each layer's construction spec.
  std::vector<LayerCount> layer_counts() const;
  std::size_t param_count() const { return store_.total_count(); }

  // Checkpoint bytes: the config record followed by every parameter.
  std::vector<std::uint8_t> serialize() const;
  // FNV-1a 64 of serialize().
  std::uint64_t checksum() const;

 private:
  struct Stage {
    bool weconv = false;
    Conv2d conv;
    WeConv wavelet;
    ResGroup res;
    Var apply(Tape& tape, Var x) const;
    std::size_t resample_params() const;
  };

  ModelConfig cfg_;
  ParamStore store_;
  std::vector<Stage> analysis_;   // stage 1 first
  std::vector<Stage> synthesis_;  // mirror of stage 4 first
  Conv2d ha_[3];
  Conv2d hs_[3];
  FactorizedPrior prior_;
  WeCharm charm_;
};

// Throws DecodeError on malformed files and ConfigError on a missing or
// inconsistent config record.
std::unique_ptr<CodecModel> load_model(std::span<const std::uint8_t> bytes);
std::unique_ptr<CodecModel> load_model_file(const std::string& path);
void save_model_file(const std::string& path, const CodecModel& model);

}  // namespace wecodec

#endif  // WECODEC_MODEL_H_
