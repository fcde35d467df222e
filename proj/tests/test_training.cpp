#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <vector>

#include "drue/backbone.hpp"
#include "drue/checkpoint.hpp"
#include "drue/datasets.hpp"
#include "drue/decoders.hpp"
#include "drue/errors.hpp"
#include "drue/training.hpp"

using drue::EarlyStopper;
using drue::Encoder;
using drue::EncoderConfig;
using drue::DecoderPair;
using drue::Rng;
using drue::Sample;
using drue::Tensor;
using drue::TrainConfig;
namespace fs = std::filesystem;

namespace {

EncoderConfig toy_config() {
  EncoderConfig cfg;
  cfg.image_size = 16;
  cfg.stem_channels = 4;
  cfg.channels = {4, 8};
  cfg.downsample = {false, true};
  return cfg;
}

// Bright images vs dark images: separable by mean intensity alone.
std::vector<Sample> blob_samples(int n, uint64_t seed, const char* tag) {
  std::vector<Sample> out;
  Rng rng(seed);
  for (int i = 0; i < n; ++i) {
    const int label = i % 2;
    Tensor img({3, 16, 16});
    const double base = label == 0 ? 0.25 : 0.75;
    for (size_t j = 0; j < img.size(); ++j)
      img[j] = base + rng.uniform(-0.05, 0.05);
    out.push_back(Sample{std::string(tag) + std::to_string(i), std::move(img),
                         label, "blob"});
  }
  return out;
}

TrainConfig stage_cfg(const char* stage, double lr, int batch, int epochs,
                      int patience, uint64_t seed) {
  TrainConfig cfg;
  cfg.stage = stage;
  cfg.learning_rate = lr;
  cfg.batch_size = batch;
  cfg.max_epochs = epochs;
  cfg.patience = patience;
  cfg.seed = seed;
  return cfg;
}

std::vector<Tensor> param_values(std::vector<drue::nn::Param*>& params) {
  std::vector<Tensor> vals;
  for (auto* p : params) vals.push_back(p->value);
  return vals;
}

double max_drift(const std::vector<Tensor>& before,
                 std::vector<drue::nn::Param*>& params) {
  double d = 0;
  for (size_t i = 0; i < params.size(); ++i)
    for (size_t j = 0; j < params[i]->value.size(); ++j)
      d = std::max(d, std::fabs(params[i]->value[j] - before[i][j]));
  return d;
}

}  // namespace

TEST_CASE("early stopper halts after patience epochs without improvement") {
  EarlyStopper s(1);
  CHECK(!s.update(1.0));
  CHECK(s.update(1.1));
  CHECK(s.best_epoch() == 0);
  CHECK(s.best_loss() == 1.0);

  EarlyStopper t(2);
  CHECK(!t.update(3.0));
  CHECK(!t.update(2.0));
  CHECK(!t.update(2.5));
  CHECK(!t.update(1.9));  // improvement resets the counter
  CHECK(!t.update(2.2));
  CHECK(t.update(2.3));
  CHECK(t.best_epoch() == 3);
}

TEST_CASE("classifier separates the two-blob toy task") {
  Encoder enc(toy_config());
  enc.init(100);
  auto train = blob_samples(24, 101, "tr");
  auto val = blob_samples(8, 102, "va");
  auto result = drue::train_classifier(
      enc, train, val, stage_cfg("classifier", 1e-3, 4, 40, 10, 103));
  CHECK(!result.history.empty());
  CHECK(drue::accuracy(enc, val) == 1.0);
}

TEST_CASE("classifier training is seed deterministic") {
  auto train = blob_samples(12, 111, "tr");
  auto val = blob_samples(4, 112, "va");
  auto run = [&](uint64_t seed) {
    Encoder enc(toy_config());
    enc.init(seed);
    drue::train_classifier(enc, train, val,
                           stage_cfg("classifier", 1e-3, 4, 4, 5, 42));
    std::vector<drue::nn::Param*> params;
    enc.collect(params);
    std::vector<Tensor> vals;
    for (auto* p : params) vals.push_back(p->value);
    return vals;
  };
  auto a = run(7), b = run(7), c = run(8);
  bool same = true, differs = false;
  for (size_t i = 0; i < a.size(); ++i) {
    same = same && drue::bitwise_equal(a[i], b[i]);
    differs = differs || !drue::bitwise_equal(a[i], c[i]);
  }
  CHECK(same);
  CHECK(differs);
}

TEST_CASE("shallow decoder stage leaves the encoder untouched and overfits one image") {
  auto cfg = toy_config();
  Encoder enc(cfg);
  enc.init(120);
  DecoderPair dec(cfg, drue::nn::Act::relu);
  dec.init(121);

  auto set = drue::generate_synthetic(10, 16, 122);
  std::vector<Sample> one = {set.train[0]};

  std::vector<drue::nn::Param*> enc_params;
  enc.collect(enc_params);
  const auto enc_before = param_values(enc_params);

  auto result = drue::train_g1(enc, dec, one, one,
                               stage_cfg("g1", 5e-3, 8, 1200, 1200, 123));
  CHECK(max_drift(enc_before, enc_params) == 0.0);

  double best_train = 1e9;
  for (const auto& r : result.history) best_train = std::min(best_train, r.train_loss);
  CHECK(best_train < 1e-3);
}

TEST_CASE("deep decoder stage respects the freeze flag") {
  auto cfg = toy_config();
  auto set = drue::generate_synthetic(10, 16, 130);
  std::vector<Sample> train(set.train.begin(), set.train.begin() + 4);
  std::vector<Sample> val(set.val.begin(), set.val.end());

  auto make = [&](uint64_t s) {
    auto enc = std::make_unique<Encoder>(cfg);
    enc->init(s);
    auto dec = std::make_unique<DecoderPair>(cfg, drue::nn::Act::relu);
    dec->init(s + 1);
    return std::pair{std::move(enc), std::move(dec)};
  };

  SUBCASE("freeze on: tail bitwise still, head moves") {
    auto [enc, dec] = make(131);
    std::vector<drue::nn::Param*> tail, head;
    dec->collect_tail(tail);
    dec->collect_head(head);
    const auto tail_before = param_values(tail);
    const auto head_before = param_values(head);

    auto result = drue::train_g0(*enc, *dec, train, val,
                                 stage_cfg("g0", 1e-3, 8, 2, 5, 132), true);
    CHECK(result.freeze_report == 0.0);
    CHECK(max_drift(tail_before, tail) == 0.0);
    CHECK(max_drift(head_before, head) > 0.0);
  }

  SUBCASE("freeze off: tail drifts after one step") {
    auto [enc, dec] = make(133);
    std::vector<drue::nn::Param*> tail;
    dec->collect_tail(tail);
    const auto tail_before = param_values(tail);
    auto result = drue::train_g0(*enc, *dec, train, val,
                                 stage_cfg("g0", 1e-3, 8, 1, 5, 134), false);
    CHECK(result.freeze_report > 0.0);
    CHECK(max_drift(tail_before, tail) > 0.0);
  }
}

TEST_CASE("training validates its config") {
  auto cfg = toy_config();
  Encoder enc(cfg);
  enc.init(1);
  auto s = blob_samples(4, 2, "x");
  CHECK_THROWS_AS(
      drue::train_classifier(enc, s, s, stage_cfg("classifier", -1.0, 4, 1, 1, 3)),
      drue::ConfigError);
  CHECK_THROWS_AS(
      drue::train_classifier(enc, s, s, stage_cfg("g1", 1e-3, 4, 1, 1, 3)),
      drue::ContractViolation);
  CHECK_THROWS_AS(
      drue::train_classifier(enc, {}, s, stage_cfg("classifier", 1e-3, 4, 1, 1, 3)),
      drue::ConfigError);
}

TEST_CASE("checkpoints round trip params and meta") {
  const fs::path dir = fs::temp_directory_path() / "drue_test_ckpt";
  fs::remove_all(dir);
  fs::create_directories(dir);
  const std::string path = (dir / "model.ckpt").string();

  auto cfg = toy_config();
  Encoder a(cfg);
  a.init(200);
  std::vector<drue::nn::Param*> pa;
  a.collect(pa);

  drue::CheckpointMeta meta;
  meta.stage = "classifier";
  meta.seed = 200;
  meta.arch_hash = drue::fnv1a64(cfg.canonical_json());
  meta.model_config = cfg.canonical_json();
  drue::save_checkpoint(path, meta, pa);

  Encoder b(cfg);
  b.init(999);
  std::vector<drue::nn::Param*> pb;
  b.collect(pb);
  const auto got = drue::load_checkpoint(path, pb);
  CHECK(got.stage == "classifier");
  CHECK(got.seed == 200);
  CHECK(got.arch_hash == meta.arch_hash);
  for (size_t i = 0; i < pa.size(); ++i)
    CHECK(drue::bitwise_equal(pa[i]->value, pb[i]->value));

  const auto peeked = drue::peek_checkpoint(path);
  CHECK(peeked.arch_hash == meta.arch_hash);

  SUBCASE("wrong param set is rejected") {
    DecoderPair dec(cfg, drue::nn::Act::relu);
    std::vector<drue::nn::Param*> pd;
    dec.collect_tail(pd);
    CHECK_THROWS_AS(drue::load_checkpoint(path, pd), drue::ComputeError);
  }

  SUBCASE("missing and truncated files fail loudly") {
    CHECK_THROWS_AS(drue::load_checkpoint((dir / "none.ckpt").string(), pb),
                    drue::DependencyError);
    std::ifstream in(path, std::ios::binary);
    std::string bytes((std::istreambuf_iterator<char>(in)), {});
    in.close();
    const std::string cut = (dir / "cut.ckpt").string();
    std::ofstream out(cut, std::ios::binary);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size() / 2));
    out.close();
    CHECK_THROWS_AS(drue::load_checkpoint(cut, pb), drue::ComputeError);
  }
  fs::remove_all(dir);
}
