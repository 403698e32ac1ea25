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

#include "wecodec/trainer.h"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numeric>
#include <ostream>

#include "wecodec/codec.h"
#include "wecodec/errors.h"
#include "wecodec/metrics.h"

namespace wecodec {

double LrSchedule::at(int step) const {
  if (decay_start <= 0 || step < decay_start) return initial;
  const int drops = 1 + (step - decay_start) / decay_every;
  return initial * std::pow(factor, drops);
}

LrSchedule paper_schedule() {
  LrSchedule s;
  s.initial = 1e-4;
  s.decay_start = 750000;
  s.decay_every = 100000;
  s.factor = 0.1;
  return s;
}

void validate(const TrainConfig& cfg) {
  if (cfg.stage != 1 && cfg.stage != 2) throw ConfigError("stage must be 1 or 2");
  if (cfg.stage == 2 && !(cfg.w1 > cfg.w2 && cfg.w2 > 0.0)) {
    throw ConfigError("stage 2 needs w1 > w2 > 0");
  }
  if (!(cfg.lambda >= 0.0) || !std::isfinite(cfg.lambda)) {
    throw ConfigError("lambda must be finite and non-negative");
  }
  if (cfg.iterations < 0 || cfg.batch_size < 1) {
    throw ConfigError("iterations and batch size must be positive");
  }
  if (cfg.crop_size < kSizeMultiple || cfg.crop_size % kSizeMultiple != 0) {
    throw ConfigError("crop size must be a positive multiple of 64");
  }
  if (!(cfg.schedule.initial > 0.0) || cfg.schedule.decay_every < 1) {
    throw ConfigError("learning-rate schedule is invalid");
  }
  if (cfg.grad_clip < 0.0) throw ConfigError("grad_clip must be >= 0");
}

bool low_frequency_subband(const std::string& subband) {
  return subband == "LLL" || subband == "HLL" || subband == "LL";
}

Var rd_loss(Var distortion, std::span<const SubbandRate> rates, Var z_bpp,
            const TrainConfig& cfg) {
  std::vector<Var> terms{distortion};
  std::vector<double> weights{cfg.lambda};
  for (const SubbandRate& r : rates) {
    if (r.bpp.value()[0] < 0.0) {
      throw ContractError("rd_loss: negative rate for " + r.subband);
    }
    terms.push_back(r.bpp);
    double w = 1.0;
    if (cfg.stage == 2) w = low_frequency_subband(r.subband) ? cfg.w1 : cfg.w2;
    weights.push_back(w);
  }
  if (z_bpp.value()[0] < 0.0) throw ContractError("rd_loss: negative z rate");
  terms.push_back(z_bpp);
  weights.push_back(1.0);
  return ad::weighted_sum(terms, weights);
}

double rd_loss(double distortion,
               std::span<const std::pair<std::string, double>> rates,
               double z_bpp, const TrainConfig& cfg) {
  Tape tape;
  std::vector<SubbandRate> vars;
  for (const auto& [name, bpp] : rates) {
    vars.push_back({name, tape.constant(Tensor3(1, 1, 1, bpp))});
  }
  return rd_loss(tape.constant(Tensor3(1, 1, 1, distortion)), vars,
                 tape.constant(Tensor3(1, 1, 1, z_bpp)), cfg)
      .value()[0];
}

Var distortion(Var x, Var x_hat, Distortion metric) {
  if (metric == Distortion::kMse) return ad::scale(ad::mse(x_hat, x), 255.0 * 255.0);
  return ad::add_scalar(ad::scale(ms_ssim(x_hat, x), -1.0), 1.0);
}

LossTerms training_loss(Tape& tape, const CodecModel& model, const Tensor3& x,
                        const TrainConfig& cfg, SeededRng& noise) {
  return training_loss(tape, model, tape.constant(x), cfg, noise);
}

LossTerms training_loss(Tape& tape, const CodecModel& model, Var xv,
                        const TrainConfig& cfg, SeededRng& noise) {
  TrainForward f = model.forward_train(tape, xv, noise);
  const double inv_pixels = 1.0 / static_cast<double>(xv.value().plane_size());

  LossTerms out;
  const SlicePlan& plan = model.entropy_model().plan();
  std::vector<std::string> order;
  std::vector<std::vector<Var>> grouped;
  for (int k = 0; k < kSliceCount; ++k) {
    const std::string& s = plan.slices[k].subband;
    auto it = std::find(order.begin(), order.end(), s);
    if (it == order.end()) {
      order.push_back(s);
      grouped.emplace_back();
      it = order.end() - 1;
    }
    grouped[it - order.begin()].push_back(f.slice_bits[k]);
  }
  std::vector<Var> all_bits;
  for (std::size_t i = 0; i < order.size(); ++i) {
    const std::vector<double> w(grouped[i].size(), inv_pixels);
    out.rates.push_back({order[i], ad::weighted_sum(grouped[i], w)});
    all_bits.push_back(out.rates.back().bpp);
  }
  out.bpp_latent = ad::weighted_sum(all_bits, std::vector<double>(all_bits.size(), 1.0));
  out.bpp_z = ad::scale(f.z_bits, inv_pixels);
  out.distortion = distortion(xv, f.x_hat, cfg.metric);
  out.loss = rd_loss(out.distortion, out.rates, out.bpp_z, cfg);
  return out;
}

namespace {

void check_finite(int iteration, const char* term, double v) {
  if (!std::isfinite(v)) {
    throw NumericError("iteration " + std::to_string(iteration) +
                       ": non-finite " + term);
  }
}

}  // namespace

std::vector<TraceRow> train_loop(CodecModel& model,
                                 std::span<const Tensor3> crops,
                                 const TrainConfig& cfg,
                                 const StepCallback& on_step) {
  validate(cfg);
  if (crops.empty()) throw ConfigError("training needs at least one crop");
  for (const Tensor3& c : crops) {
    if (c.channels() != 3 || c.height() % kSizeMultiple != 0 ||
        c.width() % kSizeMultiple != 0) {
      throw ConfigError("training crops must be 3 x H x W with sides divisible by 64");
    }
  }
  SeededRng noise(cfg.seed);
  SeededRng sampler(cfg.seed ^ 0x9E3779B97F4A7C15ull);
  const int batch = std::min<int>(cfg.batch_size, static_cast<int>(crops.size()));
  std::vector<int> index(crops.size());
  std::iota(index.begin(), index.end(), 0);

  ParamStore& store = model.params();
  // Optimizer state is not checkpointed, so every run starts from zero
  // moments whether the model came from memory or from a file.
  for (Parameter& p : store.all()) {
    p.adam_m.fill(0.0);
    p.adam_v.fill(0.0);
  }
  std::vector<TraceRow> trace;
  for (int it = 1; it <= cfg.iterations; ++it) {
    if (static_cast<int>(crops.size()) > batch) {
      for (int i = 0; i < batch; ++i) {
        const auto j = i + sampler.below(index.size() - i);
        std::swap(index[i], index[j]);
      }
    }
    store.zero_grad();
    TraceRow row;
    row.iteration = it;
    for (int b = 0; b < batch; ++b) {
      Tape tape;
      LossTerms t = training_loss(tape, model, crops[index[b]], cfg, noise);
      check_finite(it, "distortion", t.distortion.value()[0]);
      check_finite(it, "latent rate", t.bpp_latent.value()[0]);
      check_finite(it, "z rate", t.bpp_z.value()[0]);
      check_finite(it, "loss", t.loss.value()[0]);
      row.loss += t.loss.value()[0] / batch;
      row.distortion += t.distortion.value()[0] / batch;
      row.bpp_latent += t.bpp_latent.value()[0] / batch;
      row.bpp_z += t.bpp_z.value()[0] / batch;
      tape.backward(ad::scale(t.loss, 1.0 / batch));
    }
    for (const Parameter& p : store.all()) {
      if (!p.grad.all_finite()) {
        throw NumericError("iteration " + std::to_string(it) +
                           ": non-finite gradient in " + p.name);
      }
    }
    if (cfg.grad_clip > 0.0) clip_grad_norm(store, cfg.grad_clip);
    AdamConfig adam;
    adam.lr = cfg.schedule.at(it - 1);
    adam_step(store, adam, it);
    trace.push_back(row);
    if (on_step) on_step(row);
  }
  return trace;
}

void write_trace_csv(std::ostream& out, std::span<const TraceRow> trace) {
  out << "iteration,loss,D,bpp_latent,bpp_z\n";
  const auto old = out.precision(10);
  for (const TraceRow& r : trace) {
    out << r.iteration << ',' << r.loss << ',' << r.distortion << ','
        << r.bpp_latent << ',' << r.bpp_z << '\n';
  }
  out.precision(old);
}

double moving_average(std::span<const TraceRow> trace, std::size_t end,
                      std::size_t window) {
  if (window == 0 || end < window || end > trace.size()) {
    throw ArgumentError("moving_average: window outside the trace");
  }
  double s = 0.0;
  for (std::size_t i = end - window; i < end; ++i) s += trace[i].loss;
  return s / static_cast<double>(window);
}

namespace {

double smoothstep(double e0, double e1, double v) {
  const double t = std::clamp((v - e0) / (e1 - e0), 0.0, 1.0);
  return t * t * (3.0 - 2.0 * t);
}

}  // namespace

std::vector<Image> synthetic_crops(int count, int size, std::uint64_t seed) {
  if (count < 0 || size < 1) throw ArgumentError("synthetic_crops: bad size");
  SeededRng rng(seed);
  std::vector<Image> out;
  for (int n = 0; n < count; ++n) {
    double c0[3], c1[3];
    for (int c = 0; c < 3; ++c) {
      c0[c] = rng.uniform(0.1, 0.9);
      c1[c] = rng.uniform(0.1, 0.9);
    }
    const double angle = rng.uniform(0.0, 2.0 * M_PI);
    const double dx = std::cos(angle) / size;
    const double dy = std::sin(angle) / size;
    Tensor3 img(3, size, size);
    for (int y = 0; y < size; ++y) {
      for (int x = 0; x < size; ++x) {
        const double t = std::clamp(0.5 + (x - size / 2) * dx + (y - size / 2) * dy,
                                    0.0, 1.0);
        for (int c = 0; c < 3; ++c) img(c, y, x) = c0[c] + t * (c1[c] - c0[c]);
      }
    }
    const int shapes = 3 + static_cast<int>(rng.below(4));
    for (int s = 0; s < shapes; ++s) {
      const bool ellipse = rng.uniform01() < 0.5;
      const double cx = rng.uniform(0, size);
      const double cy = rng.uniform(0, size);
      const double rx = rng.uniform(0.08, 0.35) * size;
      const double ry = rng.uniform(0.08, 0.35) * size;
      const double alpha = rng.uniform(0.6, 1.0);
      double col[3];
      for (double& v : col) v = rng.uniform(0.0, 1.0);
      for (int y = 0; y < size; ++y) {
        for (int x = 0; x < size; ++x) {
          const double u = (x + 0.5 - cx) / rx;
          const double v = (y + 0.5 - cy) / ry;
          // Signed distance in pixels, approximately.
          const double d = ellipse
                               ? (std::sqrt(u * u + v * v) - 1.0) * std::min(rx, ry)
                               : std::max((std::abs(u) - 1.0) * rx,
                                          (std::abs(v) - 1.0) * ry);
          const double a = alpha * (1.0 - smoothstep(-0.75, 0.75, d));
          if (a <= 0.0) continue;
          for (int c = 0; c < 3; ++c) {
            img(c, y, x) += a * (col[c] - img(c, y, x));
          }
        }
      }
    }
    const double amp = rng.uniform(0.01, 0.04);
    const double fx = rng.uniform(0.1, 0.5);
    const double fy = rng.uniform(0.1, 0.5);
    const double phase = rng.uniform(0.0, 2.0 * M_PI);
    for (int y = 0; y < size; ++y) {
      for (int x = 0; x < size; ++x) {
        const double tex = amp * std::sin(fx * x + fy * y + phase);
        for (int c = 0; c < 3; ++c) {
          img(c, y, x) += tex + rng.normal() * (1.5 / 255.0);
        }
      }
    }
    out.push_back(tensor_to_image(img));
  }
  return out;
}

std::vector<Image> load_crops(const std::string& dir, int size) {
  namespace fs = std::filesystem;
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) throw IoError("not a directory: " + dir);
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir)) {
    const std::string ext = e.path().extension().string();
    if (e.is_regular_file() && (ext == ".png" || ext == ".ppm")) {
      files.push_back(e.path());
    }
  }
  std::sort(files.begin(), files.end());
  std::vector<Image> out;
  for (const fs::path& f : files) {
    const Image img = read_image(f.string());
    for (int y0 = 0; y0 + size <= img.height; y0 += size) {
      for (int x0 = 0; x0 + size <= img.width; x0 += size) {
        Image tile(size, size);
        for (int y = 0; y < size; ++y) {
          std::copy_n(&img.rgb[((y0 + y) * img.width + x0) * 3], 3 * size,
                      &tile.rgb[y * size * 3]);
        }
        out.push_back(std::move(tile));
      }
    }
  }
  if (out.empty()) throw IoError("no " + std::to_string(size) + "px crops in " + dir);
  return out;
}

std::vector<Tensor3> to_tensors(std::span<const Image> images) {
  std::vector<Tensor3> out;
  for (const Image& i : images) out.push_back(image_to_tensor(i));
  return out;
}

double low_frequency_share(const CodecModel& model,
                           std::span<const Image> images) {
  if (images.empty()) throw ArgumentError("low_frequency_share: no images");
  std::vector<std::string> low;
  for (const SliceSpec& s : model.entropy_model().plan().slices) {
    if (low_frequency_subband(s.subband)) low.push_back(s.subband);
  }
  double total = 0.0;
  for (const Image& img : images) {
    const auto bytes = encode_image(img, model);
    total += report_subbands(bytes, model).latent_share(low);
  }
  return total / static_cast<double>(images.size());
}

}  // namespace wecodec
