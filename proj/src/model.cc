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

#include "wecodec/model.h"

#include <algorithm>
#include <cmath>

#include "wecodec/byte_io.h"
#include "wecodec/errors.h"

namespace wecodec {

std::string_view profile_name(Profile p) {
  return p == Profile::kToy ? "toy" : "paper";
}

Profile parse_profile(std::string_view name) {
  if (name == "toy") return Profile::kToy;
  if (name == "paper") return Profile::kPaper;
  throw ArgumentError("unknown profile '" + std::string(name) + "'");
}

std::uint8_t lambda_index(double lambda) {
  for (std::size_t i = 0; i < std::size(kLambdaGrid); ++i) {
    if (kLambdaGrid[i] == lambda) return static_cast<std::uint8_t>(i);
  }
  return kNoLambdaIndex;
}

ModelConfig toy_config() { return ModelConfig{}; }

ModelConfig paper_config() {
  ModelConfig cfg;
  cfg.profile = Profile::kPaper;
  cfg.filters = 128;
  cfg.latent_channels = 320;
  cfg.res_blocks = 3;
  return cfg;
}

void validate(const ModelConfig& cfg) {
  if (cfg.filters < 2 || cfg.filters % 2 != 0) {
    throw ConfigError("model: filter count must be even and positive");
  }
  if (cfg.latent_channels < 4 || cfg.latent_channels % 4 != 0) {
    throw ConfigError("model: latent channels must be a positive multiple of 4");
  }
  if (cfg.res_blocks < 0) throw ConfigError("model: negative res_blocks");
  if (cfg.weconv_levels < 1 || cfg.weconv_levels > 2) {
    throw ConfigError("model: wavelet levels must be 1 or 2");
  }
  if (cfg.hf_kernel != 1 && cfg.hf_kernel != 3) {
    throw ConfigError("model: hf_kernel must be 1 or 3");
  }
  for (std::size_t i = 0; i < cfg.weconv_stages.size(); ++i) {
    const int s = cfg.weconv_stages[i];
    if (s < 2 || s > 4) throw ConfigError("model: wavelet stages must be 2..4");
    if (std::count(cfg.weconv_stages.begin(), cfg.weconv_stages.end(), s) != 1) {
      throw ConfigError("model: repeated wavelet stage");
    }
  }
  if (!(cfg.lambda > 0.0)) throw ConfigError("model: lambda must be positive");
  if (cfg.seed >= (1ull << 52)) throw ConfigError("model: seed must be below 2^52");
}

namespace {

// Layout of the config record values; bump kConfigLayout on change.
constexpr double kConfigLayout = 1;

bool has_stage(const ModelConfig& cfg, int s) {
  return std::find(cfg.weconv_stages.begin(), cfg.weconv_stages.end(), s) !=
         cfg.weconv_stages.end();
}

}  // namespace

CheckpointRecord config_record(const ModelConfig& cfg) {
  std::vector<double> v = {kConfigLayout,
                           static_cast<double>(cfg.profile),
                           static_cast<double>(cfg.filters),
                           static_cast<double>(cfg.latent_channels),
                           static_cast<double>(cfg.res_blocks),
                           static_cast<double>(cfg.channel_kind),
                           static_cast<double>(cfg.spatial_kind),
                           static_cast<double>(cfg.weconv_levels),
                           static_cast<double>(cfg.hf_kernel),
                           static_cast<double>(cfg.entropy_layout),
                           cfg.attention ? 1.0 : 0.0,
                           cfg.lambda,
                           static_cast<double>(cfg.seed),
                           static_cast<double>(cfg.weconv_stages.size())};
  for (int s : cfg.weconv_stages) v.push_back(s);
  return {kConfigRecordName, {static_cast<std::uint32_t>(v.size())}, v};
}

ModelConfig config_from_record(const CheckpointRecord& record) {
  const std::vector<double>& v = record.values;
  if (record.name != kConfigRecordName || v.size() < 14 || v[0] != kConfigLayout) {
    throw ConfigError("model: unsupported config record");
  }
  auto as_int = [&](std::size_t i, int lo, int hi) {
    const double d = v[i];
    if (!(d >= lo && d <= hi) || d != std::floor(d)) {
      throw ConfigError("model: config field out of range");
    }
    return static_cast<int>(d);
  };
  ModelConfig cfg;
  cfg.profile = static_cast<Profile>(as_int(1, 0, 1));
  cfg.filters = as_int(2, 1, 4096);
  cfg.latent_channels = as_int(3, 1, 4096);
  cfg.res_blocks = as_int(4, 0, 64);
  cfg.channel_kind = static_cast<WaveletKind>(as_int(5, 0, 2));
  cfg.spatial_kind = static_cast<WaveletKind>(as_int(6, 0, 2));
  cfg.weconv_levels = as_int(7, 1, 8);
  cfg.hf_kernel = as_int(8, 1, 15);
  cfg.entropy_layout = static_cast<EntropyLayout>(as_int(9, 0, 1));
  cfg.attention = as_int(10, 0, 1) == 1;
  cfg.lambda = v[11];
  if (!(v[12] >= 0 && v[12] < 0x1p52) || v[12] != std::floor(v[12])) {
    throw ConfigError("model: config seed out of range");
  }
  cfg.seed = static_cast<std::uint64_t>(v[12]);
  const int stages = as_int(13, 0, 3);
  if (v.size() != 14u + stages) throw ConfigError("model: config record size");
  cfg.weconv_stages.clear();
  for (int i = 0; i < stages; ++i) cfg.weconv_stages.push_back(as_int(14 + i, 2, 4));
  validate(cfg);
  return cfg;
}

Var CodecModel::Stage::apply(Tape& tape, Var x) const {
  return weconv ? wavelet(tape, x) : conv(tape, x);
}

std::size_t CodecModel::Stage::resample_params() const {
  return weconv ? wavelet.param_count() : wecodec::param_count(conv.spec());
}

CodecModel::CodecModel(const ModelConfig& cfg) : cfg_(cfg) {
  validate(cfg_);
  SeededRng rng(cfg_.seed);
  const int n = cfg_.filters;
  const int m = cfg_.latent_channels;
  auto make_stage = [&](const std::string& name, int stage, int in, int out,
                        bool transposed, int res_channels, bool res) {
    Stage s;
    s.weconv = has_stage(cfg_, stage);
    if (s.weconv) {
      WeConvConfig wc;
      wc.in_channels = in;
      wc.out_channels = out;
      wc.stride = 2;
      wc.channel_kind = cfg_.channel_kind;
      wc.spatial_kind = cfg_.spatial_kind;
      wc.levels = cfg_.weconv_levels;
      wc.hf_kernel = cfg_.hf_kernel;
      wc.transposed = transposed;
      s.wavelet = WeConv(store_, name + ".weconv", wc, rng);
    } else {
      s.conv = Conv2d(store_, name + ".conv", ConvSpec{3, 2, in, out, transposed},
                      rng);
    }
    if (res) {
      s.res = ResGroup(store_, name + ".res", res_channels, cfg_.res_blocks, rng);
    }
    return s;
  };
  for (int i = 1; i <= 4; ++i) {
    const int in = i == 1 ? 3 : n;
    const int out = i == 4 ? m : n;
    analysis_.push_back(make_stage("g_a.stage" + std::to_string(i), i, in, out,
                                   false, n, i < 4));
  }
  // Synthesis stage i undoes analysis stage i; the res group comes first.
  for (int i = 4; i >= 1; --i) {
    const int in = i == 4 ? m : n;
    const int out = i == 1 ? 3 : n;
    synthesis_.push_back(make_stage("g_s.stage" + std::to_string(i), i, in, out,
                                    true, n, i < 4));
  }
  ha_[0] = Conv2d(store_, "h_a.conv1", ConvSpec{3, 1, m, n}, rng);
  ha_[1] = Conv2d(store_, "h_a.conv2", ConvSpec{3, 2, n, n}, rng);
  ha_[2] = Conv2d(store_, "h_a.conv3", ConvSpec{3, 2, n, n}, rng);
  hs_[0] = Conv2d(store_, "h_s.conv1", ConvSpec{3, 2, n, n, true}, rng);
  hs_[1] = Conv2d(store_, "h_s.conv2", ConvSpec{3, 2, n, n, true}, rng);
  hs_[2] = Conv2d(store_, "h_s.conv3", ConvSpec{3, 1, n, 2 * m}, rng);
  prior_ = FactorizedPrior(store_, "prior", n);
  WeCharmConfig wc;
  wc.latent_channels = m;
  wc.hyper_channels = 2 * m;
  wc.layout = cfg_.entropy_layout;
  wc.channel_kind = WaveletKind::kHaar;
  wc.spatial_kind = cfg_.spatial_kind;
  wc.attention = cfg_.attention;
  charm_ = WeCharm(store_, "charm", wc, rng);
}

Var CodecModel::analysis(Tape& tape, Var x) const {
  const Tensor3& v = x.value();
  if (v.channels() != 3 || v.height() % 16 != 0 || v.width() % 16 != 0) {
    throw ShapeError("analysis: expected 3 x H x W with H, W multiples of 16");
  }
  for (const Stage& s : analysis_) x = s.res(tape, s.apply(tape, x));
  return x;
}

Var CodecModel::synthesis(Tape& tape, Var y) const {
  for (const Stage& s : synthesis_) y = s.apply(tape, s.res(tape, y));
  return y;
}

Var CodecModel::hyper_analysis(Tape& tape, Var y) const {
  Var h = ad::leaky_relu(ha_[0](tape, y), kDefaultLeakySlope);
  h = ad::leaky_relu(ha_[1](tape, h), kDefaultLeakySlope);
  return ha_[2](tape, h);
}

Var CodecModel::hyper_synthesis(Tape& tape, Var z) const {
  Var h = ad::leaky_relu(hs_[0](tape, z), kDefaultLeakySlope);
  h = ad::leaky_relu(hs_[1](tape, h), kDefaultLeakySlope);
  return hs_[2](tape, h);
}

TrainForward CodecModel::forward_train(Tape& tape, Var x,
                                       SeededRng& noise) const {
  const Tensor3& v = x.value();
  if (v.height() % kSizeMultiple != 0 || v.width() % kSizeMultiple != 0) {
    throw ShapeError("forward_train: sizes must be multiples of 64");
  }
  TrainForward out;
  out.y = analysis(tape, x);
  Var z = hyper_analysis(tape, out.y);
  const Tensor3& zv = z.value();
  Var z_noisy = ad::add(
      z, tape.constant(quantize_noise(
             Tensor3(zv.channels(), zv.height(), zv.width()), noise)));
  out.z_bits = gaussian_bits(z_noisy, prior_.mu(tape, zv.height(), zv.width()),
                             prior_.sigma(tape, zv.height(), zv.width()));
  Var hyper = hyper_synthesis(tape, z_noisy);
  CharmTrainOutput charm = charm_.forward_train(tape, out.y, hyper, noise);
  out.slice_bits = std::move(charm.slice_bits);
  out.x_hat = synthesis(tape, charm.y_hat);
  return out;
}

std::vector<LayerCount> CodecModel::layer_counts() const {
  std::vector<LayerCount> out;
  auto add_stages = [&](const std::vector<Stage>& stages, const char* prefix,
                        bool descending) {
    for (std::size_t i = 0; i < stages.size(); ++i) {
      const int idx = descending ? 4 - static_cast<int>(i) : 1 + static_cast<int>(i);
      const std::string base = std::string(prefix) + ".stage" + std::to_string(idx);
      const Stage& s = stages[i];
      out.push_back({base + (s.weconv ? ".weconv" : ".conv"), s.resample_params()});
      if (s.res.size() > 0) out.push_back({base + ".res", s.res.param_count()});
    }
  };
  add_stages(analysis_, "g_a", false);
  add_stages(synthesis_, "g_s", true);
  for (int i = 0; i < 3; ++i) {
    out.push_back({"h_a.conv" + std::to_string(i + 1), wecodec::param_count(ha_[i].spec())});
  }
  for (int i = 0; i < 3; ++i) {
    out.push_back({"h_s.conv" + std::to_string(i + 1), wecodec::param_count(hs_[i].spec())});
  }
  out.push_back({"prior", 2u * static_cast<std::size_t>(prior_.channels())});
  out.push_back({"charm", charm_.param_count()});
  return out;
}

std::vector<std::uint8_t> CodecModel::serialize() const {
  std::vector<CheckpointRecord> records{config_record(cfg_)};
  for (CheckpointRecord& r : store_records(store_)) records.push_back(std::move(r));
  return encode_checkpoint(records);
}

std::uint64_t CodecModel::checksum() const { return fnv1a64(serialize()); }

std::unique_ptr<CodecModel> load_model(std::span<const std::uint8_t> bytes) {
  const std::vector<CheckpointRecord> records = decode_checkpoint(bytes);
  if (records.empty() || records.front().name != kConfigRecordName) {
    throw ConfigError("model: checkpoint has no config record");
  }
  auto model = std::make_unique<CodecModel>(config_from_record(records.front()));
  load_records(model->params(), records);
  return model;
}

std::unique_ptr<CodecModel> load_model_file(const std::string& path) {
  return load_model(read_file(path));
}

void save_model_file(const std::string& path, const CodecModel& model) {
  write_file(path, model.serialize());
}

}  // namespace wecodec
