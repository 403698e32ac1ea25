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

#include <map>
#include <string>

#include "doctest.h"
#include "wecodec/checkpoint.h"
#include "wecodec/errors.h"
#include "wecodec/model.h"

namespace wecodec {
namespace {

// Parameters stored under `prefix.` summed from the store itself.
std::size_t stored_under(const ParamStore& store, const std::string& prefix) {
  std::size_t n = 0;
  for (const Parameter& p : store.all()) {
    if (p.name.rfind(prefix + ".", 0) == 0) n += p.count();
  }
  return n;
}

}  // namespace

TEST_CASE("layer accounting") {
  for (const ModelConfig& cfg : {toy_config(), paper_config()}) {
    CodecModel model(cfg);
    std::size_t total = 0;
    for (const LayerCount& l : model.layer_counts()) {
      INFO(l.name);
      CHECK(stored_under(model.params(), l.name) == l.params);
      total += l.params;
    }
    CHECK(total == model.param_count());
  }
}

TEST_CASE("ablation totals") {
  ModelConfig a = toy_config();
  ModelConfig b = toy_config();
  b.hf_kernel = 3;
  CHECK(CodecModel(a).param_count() < CodecModel(b).param_count());

  ModelConfig one_level = toy_config();
  one_level.weconv_levels = 1;
  ModelConfig fallback = toy_config();
  fallback.entropy_layout = EntropyLayout::kSpatialOnly;
  CHECK(CodecModel(one_level).param_count() > 0);
  CHECK(CodecModel(fallback).param_count() > 0);
}

TEST_CASE("config validation and record") {
  ModelConfig cfg = toy_config();
  cfg.latent_channels = 6;
  CHECK_THROWS_AS(validate(cfg), ConfigError);
  cfg = toy_config();
  cfg.weconv_stages = {1};
  CHECK_THROWS_AS(validate(cfg), ConfigError);
  cfg = toy_config();
  cfg.weconv_stages = {2, 2};
  CHECK_THROWS_AS(validate(cfg), ConfigError);
  cfg = toy_config();
  cfg.hf_kernel = 2;
  CHECK_THROWS_AS(CodecModel{cfg}, ConfigError);

  ModelConfig custom = paper_config();
  custom.weconv_stages = {2, 3, 4};
  custom.hf_kernel = 3;
  custom.spatial_kind = WaveletKind::kLeGall53;
  custom.entropy_layout = EntropyLayout::kSpatialOnly;
  custom.attention = false;
  custom.lambda = 0.0035;
  custom.seed = 123456789012ull;
  CHECK(config_from_record(config_record(custom)) == custom);

  CheckpointRecord bad = config_record(custom);
  bad.values[1] = 7;
  CHECK_THROWS_AS(config_from_record(bad), ConfigError);
  bad = config_record(custom);
  bad.values.pop_back();
  CHECK_THROWS_AS(config_from_record(bad), ConfigError);

  CHECK(parse_profile("toy") == Profile::kToy);
  CHECK_THROWS_AS(parse_profile("huge"), ArgumentError);
  CHECK(lambda_index(0.013) == 3);
  CHECK(lambda_index(0.02) == kNoLambdaIndex);
}

TEST_CASE("model files") {
  CodecModel model(toy_config());
  const auto bytes = model.serialize();
  const auto loaded = load_model(bytes);
  CHECK(loaded->config() == model.config());
  CHECK(loaded->checksum() == model.checksum());
  CHECK(loaded->serialize() == bytes);

  ModelConfig other = toy_config();
  other.seed = 43;
  CHECK(CodecModel(other).checksum() != model.checksum());

  // Parameters without the config record.
  CHECK_THROWS_AS(load_model(encode_checkpoint(store_records(model.params()))),
                  ConfigError);
  // Config record for a different architecture.
  std::vector<CheckpointRecord> records{config_record(paper_config())};
  for (auto& r : store_records(model.params())) records.push_back(r);
  CHECK_THROWS_AS(load_model(encode_checkpoint(records)), ConfigError);
}

TEST_CASE("transform shapes") {
  CodecModel model(toy_config());
  Tape tape;
  SeededRng rng(1);
  Var x = tape.constant(seeded_uniform(rng, 3, 128, 64, 0, 1));
  Var y = model.analysis(tape, x);
  CHECK(y.value().channels() == 64);
  CHECK(y.value().height() == 8);
  CHECK(y.value().width() == 4);
  Var z = model.hyper_analysis(tape, y);
  CHECK(z.value().channels() == 32);
  CHECK(z.value().height() == 2);
  Var hyper = model.hyper_synthesis(tape, z);
  CHECK(hyper.value().channels() == 128);
  CHECK(hyper.value().height() == 8);
  Var x_hat = model.synthesis(tape, y);
  CHECK(x_hat.value().same_shape(x.value()));
  CHECK_THROWS_AS(model.analysis(tape, tape.constant(Tensor3(3, 40, 64))),
                  ShapeError);
}

TEST_CASE("paper profile forward and backward") {
  CodecModel model(paper_config());
  CHECK(model.config().filters == 128);
  CHECK(model.config().latent_channels == 320);
  Tape tape;
  SeededRng rng(2);
  SeededRng noise(3);
  Var x = tape.input(seeded_uniform(rng, 3, 64, 64, 0, 1));
  TrainForward f = model.forward_train(tape, x, noise);
  CHECK(f.x_hat.value().same_shape(x.value()));
  CHECK(f.slice_bits.size() == 10);
  std::vector<Var> terms = f.slice_bits;
  terms.push_back(f.z_bits);
  terms.push_back(ad::mse(f.x_hat, x));
  tape.backward(ad::weighted_sum(terms, std::vector<double>(terms.size(), 1.0)));
  for (const Parameter& p : model.params().all()) {
    CHECK(p.has_grad);
    CHECK(p.grad.all_finite());
  }
}

}  // namespace wecodec
