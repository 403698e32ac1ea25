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

// Slice-based conditional entropy model over the wavelet-transformed latent.
//
// The latent y (M x h x w) is moved to the wavelet domain by a one-level
// channel DWT followed by a one-level spatial DWT, then split into 10 slices
// coded in a fixed order from low to high frequency. Each slice's Gaussian
// parameters come from the pooled hyper features plus every earlier refined
// slice; after dequantization a small network adds a bounded correction.

#ifndef WECODEC_WECHARM_H_
#define WECODEC_WECHARM_H_

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "wecodec/autodiff.h"
#include "wecodec/entropy.h"
#include "wecodec/nn.h"
#include "wecodec/wavelet.h"

namespace wecodec {

inline constexpr int kSliceCount = 10;

enum class EntropyLayout : std::uint8_t {
  // Channel DWT then spatial DWT: 8 subbands of M/2 channels.
  kChannelSpatial = 0,
  // Spatial DWT only: 4 subbands of M channels.
  kSpatialOnly = 1,
};

struct SliceSpec {
  int index = 0;
  std::string subband;  // "LLL", "HLL", ... or "LL", "LH", ... (spatial only)
  int part = 0;         // position within a split subband
  bool split = false;   // subband divided over several slices
  int c0 = 0;           // channel range in the packed wavelet-domain latent
  int c1 = 0;
  SpatialBand band = SpatialBand::kLL;

  int channels() const { return c1 - c0; }
  std::string name() const;  // e.g. "LLL0", "HLH"
};

struct SlicePlan {
  EntropyLayout layout = EntropyLayout::kChannelSpatial;
  int latent_channels = 0;
  std::vector<SliceSpec> slices;
};

// Order: LLL0, LLL1, HLL0, HLL1, LLH, LHL, LHH, HLH, HHL, HHH. The spatial
// only layout uses LL0..LL3, LH0, LH1, HL0, HL1, HH0, HH1, which keeps the
// same channel counts. Throws ShapeError unless M is a positive multiple
// of 4.
SlicePlan make_slice_plan(int latent_channels,
                          EntropyLayout layout = EntropyLayout::kChannelSpatial);

struct Partition {
  SlicePlan plan;
  std::vector<Tensor3> slices;
};
Partition partition_slices(const SubbandTensor& ydwt, int latent_channels);

// Slices of a packed wavelet-domain latent and the inverse. assemble throws
// StateError when a slice is missing (empty) and ShapeError on bad shapes.
std::vector<Tensor3> split_packed(const Tensor3& packed, const SlicePlan& plan);
Tensor3 assemble_packed(std::span<const Tensor3> slices, const SlicePlan& plan,
                        int height, int width);

struct WeCharmConfig {
  int latent_channels = 64;
  int hyper_channels = 128;
  EntropyLayout layout = EntropyLayout::kChannelSpatial;
  WaveletKind channel_kind = WaveletKind::kHaar;
  WaveletKind spatial_kind = WaveletKind::kCdf97;
  bool attention = true;
  double slope = kDefaultLeakySlope;
};

// Hyper features (already pooled to slice resolution) and the refined slices
// coded so far.
struct SliceContext {
  Var hyper;
  std::vector<Var> slices;
};

struct SliceGaussian {
  Var mu;
  Var sigma;
};

struct CharmTrainOutput {
  Var y_hat;                     // spatial domain, M x h x w
  std::vector<Var> slice_bits;   // one scalar per slice, plan order
};

struct CharmEncoded {
  std::vector<std::vector<std::uint8_t>> chunks;
  std::vector<Tensor3> refined;  // per slice
  std::vector<double> estimated_bits;
  Tensor3 y_hat;
};

class WeCharm {
 public:
  WeCharm() = default;
  WeCharm(ParamStore& store, const std::string& name,
          const WeCharmConfig& cfg, SeededRng& rng);

  const WeCharmConfig& config() const { return cfg_; }
  const SlicePlan& plan() const { return plan_; }
  std::size_t param_count() const;

  // Wavelet-domain packed latent and its inverse (linear lifting).
  Var to_wavelet(Var y) const;
  Var from_wavelet(Var packed) const;
  Tensor3 to_wavelet(const Tensor3& y) const;
  Tensor3 from_wavelet(const Tensor3& packed) const;

  // Hyper features at latent resolution -> slice resolution.
  Var pool_hyper(Var hyper) const { return ad::avg_pool2(hyper); }

  // Throws ContractError unless ctx holds exactly slices 0..k-1.
  SliceGaussian predict_slice_params(Tape& tape, const SliceContext& ctx,
                                     int k) const;
  // dequant + 0.5 * tanh(r(ctx, dequant)).
  Var lrp_refine(Tape& tape, const SliceContext& ctx, int k,
                 Var dequant) const;

  // Training graph with additive uniform noise in place of rounding. `hyper`
  // is at latent resolution.
  CharmTrainOutput forward_train(Tape& tape, Var y, Var hyper,
                                 SeededRng& noise) const;

  // Single slice coding against a context of concrete values.
  std::vector<std::uint8_t> encode_slice(const Tensor3& pooled_hyper,
                                         std::span<const Tensor3> previous,
                                         int k, const Tensor3& slice,
                                         Tensor3* refined,
                                         double* estimated_bits) const;
  Tensor3 decode_slice(const Tensor3& pooled_hyper,
                       std::span<const Tensor3> previous, int k,
                       std::span<const std::uint8_t> chunk) const;

  CharmEncoded encode(const Tensor3& y, const Tensor3& hyper) const;
  // Returns y_hat at latent resolution h x w.
  Tensor3 decode(std::span<const std::span<const std::uint8_t>> chunks,
                 const Tensor3& hyper, int height, int width,
                 std::vector<Tensor3>* refined = nullptr) const;

  Tensor3 reconstruct_latent(std::span<const Tensor3> refined, int height,
                             int width) const;

 private:
  struct SliceNets {
    Conv2d gate;
    Conv2d hidden1;
    Conv2d hidden2;
    Conv2d mu;
    Conv2d log_sigma;
    Conv2d lrp1;
    Conv2d lrp2;
  };
  Var context_tensor(Tape& tape, const SliceContext& ctx, int k) const;

  WeCharmConfig cfg_;
  SlicePlan plan_;
  std::vector<SliceNets> nets_;
};

}  // namespace wecodec

#endif  // WECODEC_WECHARM_H_
