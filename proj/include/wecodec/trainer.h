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

// Rate-distortion training of the codec on small crops.

#ifndef WECODEC_TRAINER_H_
#define WECODEC_TRAINER_H_

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "wecodec/autodiff.h"
#include "wecodec/image.h"
#include "wecodec/model.h"

namespace wecodec {

enum class Distortion { kMse, kMsSsim };

// Step decay: the rate is `initial` until `decay_start`, then multiplied by
// `factor` every `decay_every` steps. decay_start 0 keeps it fixed.
struct LrSchedule {
  double initial = 1e-4;
  int decay_start = 0;
  int decay_every = 100000;
  double factor = 0.1;

  double at(int step) const;
};

struct TrainConfig {
  double lambda = 0.013;
  Distortion metric = Distortion::kMse;
  int stage = 1;
  // Stage 2 rate weights: w1 for the low-frequency subbands, w2 for the rest.
  double w1 = 1.2;
  double w2 = 0.8;
  int iterations = 2000;
  int batch_size = 8;
  LrSchedule schedule;
  std::uint64_t seed = 42;
  int crop_size = 64;
  // Joint gradient norm limit; 0 disables clipping.
  double grad_clip = 0.0;
};

// Throws ConfigError: stage outside {1, 2}, stage 2 without w1 > w2 > 0,
// non-positive counts or a crop size that is not a multiple of 64.
void validate(const TrainConfig& cfg);

// Schedule used for full-size models: 1e-4, divided by 10 every 100k steps
// after the first 750k.
LrSchedule paper_schedule();

// Subbands that receive w1 in stage 2.
bool low_frequency_subband(const std::string& subband);

struct SubbandRate {
  std::string subband;
  Var bpp;
};

// Stage 1: lambda * D + sum(rates) + z_bpp.
// Stage 2: lambda * D + w1 * sum(low-frequency rates) + w2 * sum(other
// rates) + z_bpp. Throws ContractError when a rate is negative.
Var rd_loss(Var distortion, std::span<const SubbandRate> rates, Var z_bpp,
            const TrainConfig& cfg);
// Same arithmetic on plain values.
double rd_loss(double distortion,
               std::span<const std::pair<std::string, double>> rates,
               double z_bpp, const TrainConfig& cfg);

// Per-pixel distortion of a reconstruction: 255^2 * MSE, or 1 - MS-SSIM.
Var distortion(Var x, Var x_hat, Distortion metric);

struct TraceRow {
  int iteration = 0;
  double loss = 0.0;
  double distortion = 0.0;
  double bpp_latent = 0.0;
  double bpp_z = 0.0;
};

struct LossTerms {
  Var loss;
  Var distortion;
  Var bpp_latent;
  Var bpp_z;
  std::vector<SubbandRate> rates;
};

// Builds the training loss for one crop.
LossTerms training_loss(Tape& tape, const CodecModel& model, const Tensor3& x,
                        const TrainConfig& cfg, SeededRng& noise);
// Same graph with x already on the tape (e.g. to differentiate w.r.t. x).
LossTerms training_loss(Tape& tape, const CodecModel& model, Var x,
                        const TrainConfig& cfg, SeededRng& noise);

using StepCallback = std::function<void(const TraceRow&)>;

// Runs cfg.iterations Adam steps from the model's current parameters, with
// fresh optimizer moments. Each step averages the loss over a batch of crops
// (all crops in order when there are at most batch_size of them). Throws NumericError naming the
// iteration and term when a loss term or gradient is not finite.
std::vector<TraceRow> train_loop(CodecModel& model,
                                 std::span<const Tensor3> crops,
                                 const TrainConfig& cfg,
                                 const StepCallback& on_step = {});

void write_trace_csv(std::ostream& out, std::span<const TraceRow> trace);
// Mean of the last `window` losses ending at index `end` (exclusive).
double moving_average(std::span<const TraceRow> trace, std::size_t end,
                      std::size_t window);

// Deterministic natural-looking RGB crops: smooth gradients, soft-edged
// shapes, low-frequency texture and mild noise.
std::vector<Image> synthetic_crops(int count, int size, std::uint64_t seed);
// Non-overlapping size x size tiles of every PNG / PPM file in `dir`, files
// in name order. Throws IoError when nothing usable is found.
std::vector<Image> load_crops(const std::string& dir, int size);

std::vector<Tensor3> to_tensors(std::span<const Image> images);

// Average over images of the share of latent bits in the low-frequency
// subbands, measured on real bitstreams.
double low_frequency_share(const CodecModel& model,
                           std::span<const Image> images);

}  // namespace wecodec

#endif  // WECODEC_TRAINER_H_
