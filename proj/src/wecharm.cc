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

#include "wecodec/wecharm.h"

#include "wecodec/errors.h"

namespace wecodec {

std::string SliceSpec::name() const {
  return split ? subband + std::to_string(part) : subband;
}

SlicePlan make_slice_plan(int m, EntropyLayout layout) {
  if (m < 4 || m % 4 != 0) {
    throw ShapeError("slice plan: latent channels must be a multiple of 4");
  }
  const int half = m / 2;
  const int quarter = m / 4;
  SlicePlan plan;
  plan.layout = layout;
  plan.latent_channels = m;
  auto add = [&plan](std::string label, int part, bool split, int c0, int c1,
                     SpatialBand band) {
    SliceSpec s;
    s.index = static_cast<int>(plan.slices.size());
    s.subband = std::move(label);
    s.part = part;
    s.split = split;
    s.c0 = c0;
    s.c1 = c1;
    s.band = band;
    plan.slices.push_back(std::move(s));
  };
  if (layout == EntropyLayout::kChannelSpatial) {
    add("LLL", 0, true, 0, quarter, SpatialBand::kLL);
    add("LLL", 1, true, quarter, half, SpatialBand::kLL);
    add("HLL", 0, true, half, half + quarter, SpatialBand::kLL);
    add("HLL", 1, true, half + quarter, m, SpatialBand::kLL);
    for (char g : {'L', 'H'}) {
      const int c0 = g == 'L' ? 0 : half;
      for (SpatialBand b :
           {SpatialBand::kLH, SpatialBand::kHL, SpatialBand::kHH}) {
        add(std::string(1, g) + std::string(band_name(b)), 0, false, c0,
            c0 + half, b);
      }
    }
  } else {
    for (int p = 0; p < 4; ++p) {
      add("LL", p, true, p * quarter, (p + 1) * quarter, SpatialBand::kLL);
    }
    for (SpatialBand b : {SpatialBand::kLH, SpatialBand::kHL, SpatialBand::kHH}) {
      add(std::string(band_name(b)), 0, true, 0, half, b);
      add(std::string(band_name(b)), 1, true, half, m, b);
    }
  }
  return plan;
}

std::vector<Tensor3> split_packed(const Tensor3& packed, const SlicePlan& plan) {
  if (packed.channels() != plan.latent_channels || packed.height() % 2 != 0 ||
      packed.width() % 2 != 0) {
    throw ShapeError("split_packed: latent does not match the plan");
  }
  std::vector<Tensor3> out;
  for (const SliceSpec& s : plan.slices) {
    const BandRegion r = band_region(packed.height(), packed.width(), s.band, 1);
    Tensor3 t(s.channels(), r.height, r.width);
    for (int c = 0; c < s.channels(); ++c) {
      for (int y = 0; y < r.height; ++y) {
        for (int x = 0; x < r.width; ++x) {
          t(c, y, x) = packed(s.c0 + c, r.y0 + y, r.x0 + x);
        }
      }
    }
    out.push_back(std::move(t));
  }
  return out;
}

Tensor3 assemble_packed(std::span<const Tensor3> slices, const SlicePlan& plan,
                        int height, int width) {
  if (slices.size() != plan.slices.size()) {
    throw StateError("assemble: slice count does not match the plan");
  }
  Tensor3 out(plan.latent_channels, height, width);
  for (std::size_t i = 0; i < slices.size(); ++i) {
    const SliceSpec& s = plan.slices[i];
    const Tensor3& t = slices[i];
    if (t.empty()) throw StateError("assemble: slice " + s.name() + " missing");
    const BandRegion r = band_region(height, width, s.band, 1);
    if (t.channels() != s.channels() || t.height() != r.height ||
        t.width() != r.width) {
      throw ShapeError("assemble: slice " + s.name() + " has the wrong shape");
    }
    for (int c = 0; c < s.channels(); ++c) {
      for (int y = 0; y < r.height; ++y) {
        for (int x = 0; x < r.width; ++x) {
          out(s.c0 + c, r.y0 + y, r.x0 + x) = t(c, y, x);
        }
      }
    }
  }
  return out;
}

Partition partition_slices(const SubbandTensor& ydwt, int latent_channels) {
  Partition p;
  p.plan = make_slice_plan(latent_channels);
  if (ydwt.spatial_levels() != 1) {
    throw ShapeError("partition: expected a one-level spatial decomposition");
  }
  const Tensor3 packed = pack_subbands(ydwt);
  p.slices = split_packed(packed, p.plan);
  return p;
}

WeCharm::WeCharm(ParamStore& store, const std::string& name,
                 const WeCharmConfig& cfg, SeededRng& rng)
    : cfg_(cfg), plan_(make_slice_plan(cfg.latent_channels, cfg.layout)) {
  if (cfg.hyper_channels < 1) throw ArgumentError("wecharm: no hyper channels");
  int ctx = cfg.hyper_channels;
  for (const SliceSpec& s : plan_.slices) {
    const std::string p = name + ".slice" + std::to_string(s.index);
    const int c = s.channels();
    const int hidden = 2 * c;
    SliceNets n;
    if (cfg.attention) n.gate = Conv2d(store, p + ".attn", {1, 1, ctx, ctx}, rng);
    n.hidden1 = Conv2d(store, p + ".param1", {1, 1, ctx, hidden}, rng);
    n.hidden2 = Conv2d(store, p + ".param2", {1, 1, hidden, hidden}, rng);
    n.mu = Conv2d(store, p + ".mu", {1, 1, hidden, c}, rng, 0.1);
    n.log_sigma = Conv2d(store, p + ".log_sigma", {1, 1, hidden, c}, rng, 0.1);
    n.lrp1 = Conv2d(store, p + ".lrp1", {1, 1, ctx + c, hidden}, rng);
    n.lrp2 = Conv2d(store, p + ".lrp2", {1, 1, hidden, c}, rng, 0.1);
    nets_.push_back(std::move(n));
    ctx += c;
  }
}

std::size_t WeCharm::param_count() const {
  std::size_t n = 0;
  for (const SliceNets& s : nets_) {
    if (cfg_.attention) n += wecodec::param_count(s.gate.spec());
    for (const Conv2d* c : {&s.hidden1, &s.hidden2, &s.mu, &s.log_sigma,
                            &s.lrp1, &s.lrp2}) {
      n += wecodec::param_count(c->spec());
    }
  }
  return n;
}

Var WeCharm::to_wavelet(Var y) const {
  if (cfg_.layout == EntropyLayout::kChannelSpatial) {
    return ad::dwt3d(y, cfg_.channel_kind, cfg_.spatial_kind, 1,
                     Pass::kForward);
  }
  return ad::dwt2d(y, cfg_.spatial_kind, 1, Pass::kForward);
}

Var WeCharm::from_wavelet(Var packed) const {
  if (cfg_.layout == EntropyLayout::kChannelSpatial) {
    return ad::dwt3d(packed, cfg_.channel_kind, cfg_.spatial_kind, 1,
                     Pass::kInverse);
  }
  return ad::dwt2d(packed, cfg_.spatial_kind, 1, Pass::kInverse);
}

Tensor3 WeCharm::to_wavelet(const Tensor3& y) const {
  Tensor3 t = y;
  if (cfg_.layout == EntropyLayout::kChannelSpatial) {
    dwt3d_packed(t, cfg_.channel_kind, cfg_.spatial_kind, 1, Pass::kForward,
                 LiftingMode::kLinear);
  } else {
    dwt2d_packed(t, cfg_.spatial_kind, 1, Pass::kForward, LiftingMode::kLinear);
  }
  return t;
}

Tensor3 WeCharm::from_wavelet(const Tensor3& packed) const {
  Tensor3 t = packed;
  if (cfg_.layout == EntropyLayout::kChannelSpatial) {
    dwt3d_packed(t, cfg_.channel_kind, cfg_.spatial_kind, 1, Pass::kInverse,
                 LiftingMode::kLinear);
  } else {
    dwt2d_packed(t, cfg_.spatial_kind, 1, Pass::kInverse, LiftingMode::kLinear);
  }
  return t;
}

Var WeCharm::context_tensor(Tape& tape, const SliceContext& ctx, int k) const {
  (void)tape;
  if (k < 0 || k >= kSliceCount) throw RangeError("slice index out of range");
  if (static_cast<int>(ctx.slices.size()) != k) {
    throw ContractError("slice " + std::to_string(k) +
                        " needs exactly the slices coded before it");
  }
  std::vector<Var> parts{ctx.hyper};
  for (int j = 0; j < k; ++j) {
    if (ctx.slices[j].value().channels() != plan_.slices[j].channels()) {
      throw ContractError("context slice " + std::to_string(j) +
                          " does not match the plan");
    }
    parts.push_back(ctx.slices[j]);
  }
  return parts.size() == 1 ? parts[0] : ad::concat(parts);
}

SliceGaussian WeCharm::predict_slice_params(Tape& tape, const SliceContext& ctx,
                                            int k) const {
  Var c = context_tensor(tape, ctx, k);
  const SliceNets& n = nets_[k];
  if (cfg_.attention) {
    Var gate = ad::sigmoid(n.gate(tape, ad::global_avg_pool(c)));
    c = ad::channel_scale(c, gate);
  }
  Var h = ad::leaky_relu(n.hidden1(tape, c), cfg_.slope);
  h = ad::leaky_relu(n.hidden2(tape, h), cfg_.slope);
  SliceGaussian g;
  g.mu = n.mu(tape, h);
  g.sigma = ad::clamp(ad::exp(n.log_sigma(tape, h)), kSigmaMin, kSigmaMax);
  return g;
}

Var WeCharm::lrp_refine(Tape& tape, const SliceContext& ctx, int k,
                        Var dequant) const {
  Var c = context_tensor(tape, ctx, k);
  const Tensor3& d = dequant.value();
  const Tensor3& cv = c.value();
  if (d.channels() != plan_.slices[k].channels() ||
      d.height() != cv.height() || d.width() != cv.width()) {
    throw ShapeError("lrp: dequantized slice does not match its context");
  }
  const SliceNets& n = nets_[k];
  const Var parts[] = {c, dequant};
  Var h = ad::leaky_relu(n.lrp1(tape, ad::concat(parts)), cfg_.slope);
  Var r = n.lrp2(tape, h);
  return ad::add(dequant, ad::scale(ad::tanh(r), 0.5));
}

CharmTrainOutput WeCharm::forward_train(Tape& tape, Var y, Var hyper,
                                        SeededRng& noise) const {
  const Tensor3& yv = y.value();
  if (yv.channels() != cfg_.latent_channels) {
    throw ShapeError("wecharm: latent channel mismatch");
  }
  const int h = yv.height();
  const int w = yv.width();
  Var packed = to_wavelet(y);
  SliceContext ctx{pool_hyper(hyper), {}};
  if (ctx.hyper.value().channels() != cfg_.hyper_channels ||
      ctx.hyper.value().height() * 2 != h) {
    throw ShapeError("wecharm: hyper features do not match the latent");
  }
  CharmTrainOutput out;
  std::vector<ad::Placed> blocks;
  for (int k = 0; k < kSliceCount; ++k) {
    const SliceSpec& s = plan_.slices[k];
    const BandRegion r = band_region(h, w, s.band, 1);
    Var slice = ad::crop(packed, s.c0, s.c1, r);
    SliceGaussian g = predict_slice_params(tape, ctx, k);
    Var noisy = ad::add(slice, tape.constant(quantize_noise(
                                   Tensor3(s.channels(), r.height, r.width),
                                   noise)));
    out.slice_bits.push_back(gaussian_bits(noisy, g.mu, g.sigma));
    Var refined = lrp_refine(tape, ctx, k, noisy);
    ctx.slices.push_back(refined);
    blocks.push_back({refined, s.c0, r.y0, r.x0});
  }
  out.y_hat = from_wavelet(ad::assemble(cfg_.latent_channels, h, w, blocks));
  return out;
}

namespace {

SliceContext constant_context(Tape& tape, const Tensor3& pooled,
                              std::span<const Tensor3> previous) {
  SliceContext ctx{tape.constant(pooled), {}};
  for (const Tensor3& t : previous) ctx.slices.push_back(tape.constant(t));
  return ctx;
}

}  // namespace

std::vector<std::uint8_t> WeCharm::encode_slice(
    const Tensor3& pooled_hyper, std::span<const Tensor3> previous, int k,
    const Tensor3& slice, Tensor3* refined, double* estimated_bits) const {
  Tape tape;
  SliceContext ctx = constant_context(tape, pooled_hyper, previous);
  SliceGaussian g = predict_slice_params(tape, ctx, k);
  if (!slice.same_shape(g.mu.value())) {
    throw ShapeError("encode_slice: slice shape mismatch");
  }
  Quantized q = quantize(slice, g.mu.value());
  TableBank tables(g.sigma.value().data());
  std::vector<std::uint8_t> bytes = range_encode(q.symbols, tables);
  if (estimated_bits != nullptr) *estimated_bits = estimate_rate(q.symbols, tables);
  if (refined != nullptr) {
    *refined = lrp_refine(tape, ctx, k, tape.constant(q.dequant)).value();
  }
  return bytes;
}

Tensor3 WeCharm::decode_slice(const Tensor3& pooled_hyper,
                              std::span<const Tensor3> previous, int k,
                              std::span<const std::uint8_t> chunk) const {
  Tape tape;
  SliceContext ctx = constant_context(tape, pooled_hyper, previous);
  SliceGaussian g = predict_slice_params(tape, ctx, k);
  const Tensor3& mu = g.mu.value();
  TableBank tables(g.sigma.value().data());
  std::vector<std::int32_t> symbols = range_decode(chunk, tables, mu.size());
  Tensor3 dequant = dequantize(symbols, mu);
  return lrp_refine(tape, ctx, k, tape.constant(std::move(dequant))).value();
}

CharmEncoded WeCharm::encode(const Tensor3& y, const Tensor3& hyper) const {
  Tape tape;
  const Tensor3 pooled = pool_hyper(tape.constant(hyper)).value();
  const std::vector<Tensor3> slices = split_packed(to_wavelet(y), plan_);
  CharmEncoded out;
  for (int k = 0; k < kSliceCount; ++k) {
    Tensor3 refined;
    double bits = 0.0;
    out.chunks.push_back(
        encode_slice(pooled, out.refined, k, slices[k], &refined, &bits));
    out.refined.push_back(std::move(refined));
    out.estimated_bits.push_back(bits);
  }
  out.y_hat = reconstruct_latent(out.refined, y.height(), y.width());
  return out;
}

Tensor3 WeCharm::decode(std::span<const std::span<const std::uint8_t>> chunks,
                        const Tensor3& hyper, int height, int width,
                        std::vector<Tensor3>* refined) const {
  if (chunks.size() != static_cast<std::size_t>(kSliceCount)) {
    throw DecodeError("expected " + std::to_string(kSliceCount) +
                      " slice chunks");
  }
  Tape tape;
  const Tensor3 pooled = pool_hyper(tape.constant(hyper)).value();
  std::vector<Tensor3> done;
  for (int k = 0; k < kSliceCount; ++k) {
    done.push_back(decode_slice(pooled, done, k, chunks[k]));
  }
  Tensor3 y_hat = reconstruct_latent(done, height, width);
  if (refined != nullptr) *refined = std::move(done);
  return y_hat;
}

Tensor3 WeCharm::reconstruct_latent(std::span<const Tensor3> refined,
                                    int height, int width) const {
  return from_wavelet(assemble_packed(refined, plan_, height, width));
}

}  // namespace wecodec
