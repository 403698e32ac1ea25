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

// Command-line front end for the codec library.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "wecodec/codec.h"
#include "wecodec/errors.h"
#include "wecodec/image.h"
#include "wecodec/metrics.h"
#include "wecodec/model.h"
#include "wecodec/trainer.h"
#include "wecodec/wavelet.h"

namespace {

using namespace wecodec;

constexpr int kExitOk = 0;
constexpr int kExitArgument = 2;
constexpr int kExitIo = 3;
constexpr int kExitDecode = 4;
constexpr int kExitConfig = 5;
constexpr int kExitInternal = 1;

std::vector<std::uint8_t> read_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError("read failed for '" + path + "'");
  return bytes;
}

void write_bytes(const std::string& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot create '" + path + "'");
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed for '" + path + "'");
}

std::string format_number(double v) {
  if (std::isinf(v)) return "inf";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.4f", v);
  return buf;
}

struct CompressArgs {
  std::string input, output, model, profile;
};

int run_compress(const CompressArgs& a) {
  const auto model = load_model_file(a.model);
  if (!a.profile.empty()) require_profile(*model, parse_profile(a.profile));
  const Image img = read_image(a.input);
  const std::vector<std::uint8_t> bytes = encode_image(img, *model);
  write_bytes(a.output, bytes);
  std::cout << "bytes\t" << bytes.size() << "\n"
            << "bpp\t"
            << format_number(8.0 * static_cast<double>(bytes.size()) /
                             (static_cast<double>(img.width) * img.height))
            << "\n";
  return kExitOk;
}

struct DecompressArgs {
  std::string input, output, model;
};

int run_decompress(const DecompressArgs& a) {
  const auto model = load_model_file(a.model);
  const std::vector<std::uint8_t> bytes = read_bytes(a.input);
  write_image(a.output, decode_image(bytes, *model));
  return kExitOk;
}

struct EvalArgs {
  std::string ref, dec;
  bool msssim = false;
};

int run_eval(const EvalArgs& a) {
  const Image ref = read_image(a.ref);
  const Image dec = read_image(a.dec);
  if (ref.width != dec.width || ref.height != dec.height) {
    throw ArgumentError("eval: images differ in size");
  }
  const Tensor3 x = image_to_tensor(ref);
  const Tensor3 y = image_to_tensor(dec);
  std::cout << "PSNR_dB\t" << format_number(psnr(x, y)) << "\n";
  if (a.msssim) {
    if (std::min(ref.width, ref.height) < kMsSsimMinSide) {
      std::cout << "MS-SSIM\tn/a\nMS-SSIM_dB\tn/a\n";
    } else {
      const double v = ms_ssim(x, y);
      std::cout << "MS-SSIM\t" << format_number(v) << "\n"
                << "MS-SSIM_dB\t" << format_number(ms_ssim_db(v)) << "\n";
    }
  }
  return kExitOk;
}

struct DwtArgs {
  std::string input, wavelet = "9/7", channel_wavelet = "haar";
  int levels = 2;
  bool report = false;
};

// Coefficients are in 8-bit pixel units. Sides are edge-padded to a multiple
// of 2^levels; an odd channel count is padded by repeating the last channel
// when a channel transform is requested.
int run_dwt(const DwtArgs& a) {
  if (a.levels < 1 || a.levels > 6) throw ArgumentError("dwt: levels must be 1..6");
  const WaveletKind spatial = parse_wavelet(a.wavelet);
  const bool channel = a.channel_wavelet != "none";
  const WaveletKind channel_kind =
      channel ? parse_wavelet(a.channel_wavelet) : WaveletKind::kHaar;
  const Image img = read_image(a.input);
  Tensor3 x = image_to_tensor(img);
  for (double& v : x.data()) v = std::round(v * 255.0);
  const int multiple = 1 << a.levels;
  x = pad_replicate(x, padded_size(img.height, multiple),
                    padded_size(img.width, multiple));
  if (channel && x.channels() % 2 != 0) {
    const Tensor3 last = slice_channels(x, x.channels() - 1, x.channels());
    const Tensor3 parts[] = {x, last};
    x = concat_channels(parts);
  }

  std::vector<BandStats> stats;
  double error = 0.0;
  if (channel) {
    const SubbandTensor s = dwt3d(x, channel_kind, spatial, a.levels);
    stats = subband_stats(s);
    const Tensor3 back = idwt3d(s, channel_kind, spatial);
    for (std::size_t i = 0; i < x.size(); ++i) {
      error = std::max(error, std::abs(back.data()[i] - x.data()[i]));
    }
  } else {
    const SpatialPyramid p = dwt2d_multi(x, spatial, a.levels);
    stats = pyramid_stats(p);
    const Tensor3 back = idwt2d_multi(p, spatial);
    for (std::size_t i = 0; i < x.size(); ++i) {
      error = std::max(error, std::abs(back.data()[i] - x.data()[i]));
    }
  }

  if (a.report) {
    double total = 0.0;
    for (const BandStats& b : stats) total += b.energy;
    std::cout << "subband\tcoefficients\tenergy\tenergy_percent\tentropy_bits\n";
    for (const BandStats& b : stats) {
      char line[256];
      std::snprintf(line, sizeof(line), "%s\t%zu\t%.6g\t%.4f\t%.4f\n",
                    b.label.c_str(), b.count, b.energy,
                    total > 0.0 ? 100.0 * b.energy / total : 0.0,
                    b.entropy_bits);
      std::cout << line;
    }
  }
  char line[64];
  std::snprintf(line, sizeof(line), "%.3g", error);
  std::cout << "max_reconstruction_error\t" << line << "\n";
  return kExitOk;
}

struct ReportArgs {
  std::string input, model, reference;
};

int run_report(const ReportArgs& a) {
  const auto model = load_model_file(a.model);
  const std::vector<std::uint8_t> bytes = read_bytes(a.input);
  std::unique_ptr<Image> ref;
  if (!a.reference.empty()) ref = std::make_unique<Image>(read_image(a.reference));
  std::cout << format_report(report_subbands(bytes, *model, ref.get()));
  return kExitOk;
}

struct ModelArgs {
  std::string profile = "toy", output;
  int hf_kernel = 0;
  int levels = 0;
  std::string layout;
  std::uint64_t seed = 42;
  double lambda = 0.013;
};

ModelConfig build_config(const ModelArgs& a) {
  ModelConfig cfg =
      parse_profile(a.profile) == Profile::kToy ? toy_config() : paper_config();
  if (a.hf_kernel != 0) cfg.hf_kernel = a.hf_kernel;
  if (a.levels != 0) cfg.weconv_levels = a.levels;
  if (a.layout == "channel-spatial") {
    cfg.entropy_layout = EntropyLayout::kChannelSpatial;
  } else if (a.layout == "spatial") {
    cfg.entropy_layout = EntropyLayout::kSpatialOnly;
  } else if (!a.layout.empty()) {
    throw ArgumentError("unknown entropy layout '" + a.layout + "'");
  }
  cfg.seed = a.seed;
  cfg.lambda = a.lambda;
  validate(cfg);
  return cfg;
}

int run_init(const ModelArgs& a) {
  CodecModel model(build_config(a));
  save_model_file(a.output, model);
  return kExitOk;
}

struct ParamsArgs {
  ModelArgs model;
  std::string path;
};

int run_params(const ParamsArgs& a) {
  std::unique_ptr<CodecModel> model;
  if (!a.path.empty()) {
    model = load_model_file(a.path);
  } else {
    model = std::make_unique<CodecModel>(build_config(a.model));
  }
  std::size_t total = 0;
  std::cout << "layer\tparams\n";
  for (const LayerCount& l : model->layer_counts()) {
    std::cout << l.name << "\t" << l.params << "\n";
    total += l.params;
  }
  std::cout << "total\t" << total << "\n";
  char mb[32];
  std::snprintf(mb, sizeof(mb), "%.3f", total * 4.0 / 1e6);
  std::cout << "float32_MB\t" << mb << "\n";
  return kExitOk;
}

struct TrainArgs {
  int stage = 1;
  double lambda = 0.013;
  double w1 = 1.2;
  double w2 = 0.8;
  int iters = 2000;
  std::uint64_t seed = 42;
  std::string data, output, resume, trace;
  int crops = 8;
  int crop_size = 64;
  double lr = 0.0;
  std::string metric = "mse";
};

int run_train(const TrainArgs& a) {
  TrainConfig cfg;
  cfg.stage = a.stage;
  cfg.lambda = a.lambda;
  cfg.w1 = a.w1;
  cfg.w2 = a.w2;
  cfg.iterations = a.iters;
  cfg.seed = a.seed;
  cfg.crop_size = a.crop_size;
  if (a.lr > 0.0) cfg.schedule.initial = a.lr;
  if (a.metric == "msssim") {
    cfg.metric = Distortion::kMsSsim;
  } else if (a.metric != "mse") {
    throw ArgumentError("unknown metric '" + a.metric + "'");
  }
  validate(cfg);

  std::unique_ptr<CodecModel> model;
  if (!a.resume.empty()) {
    model = load_model_file(a.resume);
  } else {
    ModelConfig mc = toy_config();
    mc.lambda = a.lambda;
    mc.seed = a.seed;
    model = std::make_unique<CodecModel>(mc);
  }

  std::vector<Image> images = a.data.empty()
                                  ? synthetic_crops(a.crops, a.crop_size, a.seed)
                                  : load_crops(a.data, a.crop_size);
  if (static_cast<int>(images.size()) > a.crops) images.resize(a.crops);
  const std::vector<Tensor3> crops = to_tensors(images);

  const std::vector<TraceRow> trace = train_loop(*model, crops, cfg);
  save_model_file(a.output, *model);
  if (a.trace.empty() || a.trace == "-") {
    write_trace_csv(std::cout, trace);
  } else {
    std::ofstream out(a.trace);
    if (!out) throw IoError("cannot create '" + a.trace + "'");
    write_trace_csv(out, trace);
    if (!out) throw IoError("write failed for '" + a.trace + "'");
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Wavelet-domain learned image codec"};
  app.require_subcommand(1);

  CompressArgs compress;
  auto* c = app.add_subcommand("compress", "Encode an image");
  c->add_option("-i,--input", compress.input, "PNG or PPM image")->required();
  c->add_option("-o,--output", compress.output, "Bitstream path")->required();
  c->add_option("--model", compress.model, "Model file")->required();
  c->add_option("--profile", compress.profile, "Expected profile (toy|paper)");

  DecompressArgs decompress;
  auto* d = app.add_subcommand("decompress", "Decode a bitstream");
  d->add_option("-i,--input", decompress.input, "Bitstream path")->required();
  d->add_option("-o,--output", decompress.output, "Output image (.png or .ppm)")
      ->required();
  d->add_option("--model", decompress.model, "Model file")->required();

  EvalArgs eval;
  auto* e = app.add_subcommand("eval", "Quality of a decoded image");
  e->add_option("-a", eval.ref, "Reference image")->required();
  e->add_option("-b", eval.dec, "Decoded image")->required();
  e->add_flag("--msssim", eval.msssim, "Also report MS-SSIM");

  DwtArgs dwt;
  auto* w = app.add_subcommand("dwt", "Wavelet decomposition of an image");
  w->add_option("-i,--input", dwt.input, "PNG or PPM image")->required();
  w->add_option("--wavelet", dwt.wavelet, "Spatial wavelet (haar|5/3|9/7)");
  w->add_option("--levels", dwt.levels, "Spatial levels");
  w->add_option("--channel-wavelet", dwt.channel_wavelet,
                "Channel wavelet, or 'none'");
  w->add_flag("--report", dwt.report, "Print per-subband statistics");

  ReportArgs report;
  auto* r = app.add_subcommand("report", "Per-subband rate report");
  r->add_option("-i,--input", report.input, "Bitstream path")->required();
  r->add_option("--model", report.model, "Model file")->required();
  r->add_option("--reference", report.reference, "Original image for quality");

  TrainArgs train;
  auto* t = app.add_subcommand("train-toy", "Train a toy-profile model");
  t->add_option("--stage", train.stage, "1 or 2");
  t->add_option("--lambda", train.lambda, "Rate-distortion weight");
  t->add_option("--w1", train.w1, "Stage-2 low-frequency weight");
  t->add_option("--w2", train.w2, "Stage-2 weight for other subbands");
  t->add_option("--iters", train.iters, "Iterations");
  t->add_option("--seed", train.seed, "Seed");
  t->add_option("--data", train.data,
                "Directory of training images (synthetic crops if omitted)");
  t->add_option("--crops", train.crops, "Number of crops");
  t->add_option("--crop-size", train.crop_size, "Crop side");
  t->add_option("--lr", train.lr, "Learning rate override");
  t->add_option("--metric", train.metric, "mse or msssim");
  t->add_option("--out", train.output, "Output model file")->required();
  t->add_option("--resume", train.resume, "Start from this model file");
  t->add_option("--trace", train.trace, "Loss trace CSV (stdout if omitted)");

  ModelArgs init;
  auto* in = app.add_subcommand("init", "Write a freshly initialized model");
  auto add_model_opts = [](CLI::App* sub, ModelArgs& m) {
    sub->add_option("--profile", m.profile, "toy or paper");
    sub->add_option("--hf-kernel", m.hf_kernel, "High-frequency kernel (1|3)");
    sub->add_option("--levels", m.levels, "Wavelet levels in conv layers");
    sub->add_option("--layout", m.layout, "channel-spatial or spatial");
    sub->add_option("--seed", m.seed, "Initialization seed");
    sub->add_option("--lambda", m.lambda, "Rate-distortion weight");
  };
  add_model_opts(in, init);
  in->add_option("--out", init.output, "Output model file")->required();

  ParamsArgs params;
  auto* p = app.add_subcommand("params", "Per-layer parameter counts");
  p->alias("info");
  add_model_opts(p, params.model);
  p->add_option("--model", params.path, "Model file (overrides --profile)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    const int code = app.exit(err);
    return code == 0 ? kExitOk : kExitArgument;
  }

  try {
    if (*c) return run_compress(compress);
    if (*d) return run_decompress(decompress);
    if (*e) return run_eval(eval);
    if (*w) return run_dwt(dwt);
    if (*r) return run_report(report);
    if (*t) return run_train(train);
    if (*in) return run_init(init);
    if (*p) return run_params(params);
  } catch (const IoError& err) {
    std::cerr << "error: " << err.what() << "\n";
    return kExitIo;
  } catch (const DecodeError& err) {
    std::cerr << "error: " << err.what() << "\n";
    return kExitDecode;
  } catch (const ConfigError& err) {
    std::cerr << "error: " << err.what() << "\n";
    return kExitConfig;
  } catch (const ArgumentError& err) {
    std::cerr << "error: " << err.what() << "\n";
    return kExitArgument;
  } catch (const ShapeError& err) {
    std::cerr << "error: " << err.what() << "\n";
    return kExitArgument;
  } catch (const RangeError& err) {
    std::cerr << "error: " << err.what() << "\n";
    return kExitArgument;
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << "\n";
    return kExitInternal;
  }
  return kExitArgument;
}
