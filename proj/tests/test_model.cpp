#include <doctest.h>

#include <cmath>
#include <vector>

#include "drue/backbone.hpp"
#include "drue/decoders.hpp"
#include "drue/errors.hpp"
#include "drue/nn.hpp"

using drue::DecoderPair;
using drue::DecoderPlan;
using drue::Encoder;
using drue::EncoderConfig;
using drue::Rng;
using drue::Tensor;
namespace nn = drue::nn;

namespace {

Tensor rand_tensor(std::vector<int> shape, uint64_t seed, double lo = 0.0,
                   double hi = 1.0) {
  Tensor t(shape);
  Rng rng(seed);
  for (size_t i = 0; i < t.size(); ++i) t[i] = rng.uniform(lo, hi);
  return t;
}

double dot(const Tensor& a, const Tensor& b) {
  double s = 0;
  for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

bool grad_close(double a, double n) {
  return std::fabs(a - n) <= 1e-6 + 1e-5 * std::max(std::fabs(a), std::fabs(n));
}

template <typename F>
double fd(F&& f, double* slot, double h = 1e-5) {
  const double orig = *slot;
  *slot = orig + h;
  const double fp = f();
  *slot = orig - h;
  const double fm = f();
  *slot = orig;
  return (fp - fm) / (2 * h);
}

EncoderConfig tiny_config() {
  EncoderConfig cfg;
  cfg.image_size = 8;
  cfg.stem_channels = 4;
  cfg.channels = {4, 6};
  cfg.downsample = {false, true};
  cfg.act = "softplus";
  return cfg;
}

}  // namespace

TEST_CASE("encoder taps halve as configured on a 64x64 input") {
  EncoderConfig cfg;  // defaults: stem 8, channels 8/16/32/64
  Encoder enc(cfg);
  enc.init(1);
  Tensor x = rand_tensor({3, 64, 64}, 2);
  auto fp = enc.forward_features(x);
  CHECK(fp.m1.shape() == std::vector<int>{32, 8, 8});
  CHECK(fp.m0.shape() == std::vector<int>{64, 4, 4});
  CHECK(cfg.stage_size(2) == 8);
  CHECK(cfg.stage_size(3) == 4);

  Tensor m0_again = enc.final_stage(fp.m1);
  CHECK(drue::bitwise_equal(m0_again, fp.m0));
}

TEST_CASE("encoder config validation rejects bad shapes") {
  EncoderConfig cfg;
  cfg.image_size = 63;
  CHECK_THROWS_AS(cfg.validate(), drue::ConfigError);
  cfg = EncoderConfig();
  cfg.downsample = {false, true};
  CHECK_THROWS_AS(cfg.validate(), drue::ConfigError);
  cfg = EncoderConfig();
  cfg.channels = {8};
  cfg.downsample = {false};
  CHECK_THROWS_AS(cfg.validate(), drue::ConfigError);
  cfg = EncoderConfig();
  cfg.image_size = 8;  // too small for three downsamples after the stem
  CHECK_THROWS_AS(cfg.validate(), drue::ConfigError);
  cfg = EncoderConfig();
  cfg.act = "tanh";
  CHECK_THROWS_AS(cfg.validate(), drue::ConfigError);
}

TEST_CASE("predict returns a probability simplex and is deterministic") {
  Encoder a(tiny_config()), b(tiny_config()), c(tiny_config());
  a.init(7);
  b.init(7);
  c.init(8);
  Tensor x = rand_tensor({3, 8, 8}, 3);
  Tensor pa = a.predict(x), pb = b.predict(x), pc = c.predict(x);
  double sum = 0;
  for (size_t i = 0; i < pa.size(); ++i) {
    CHECK(pa[i] >= 0.0);
    sum += pa[i];
  }
  CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(drue::bitwise_equal(pa, pb));
  CHECK(!drue::bitwise_equal(pa, pc));
}

TEST_CASE("classifier gradients match finite differences end to end") {
  Encoder enc(tiny_config());
  enc.init(11);
  Tensor x = rand_tensor({3, 8, 8}, 12);

  Tensor logits = enc.forward_logits(x, true);
  Tensor dlogits;
  nn::softmax_ce(logits, 1, &dlogits);
  enc.backward_from_logits(dlogits);

  auto loss = [&]() { return nn::softmax_ce(enc.forward_logits(x, false), 1, nullptr); };
  std::vector<nn::Param*> params;
  enc.collect(params);
  for (auto* p : params)
    for (size_t i = 0; i < p->value.size(); i += 13)
      CHECK(grad_close(p->grad[i], fd(loss, &p->value[i])));
}

TEST_CASE("decoder mirror plan walks the encoder backwards") {
  EncoderConfig enc;
  enc.image_size = 128;
  enc.stem_channels = 32;
  enc.channels = {32, 64, 128, 256};
  enc.downsample = {false, true, true, true};
  auto plan = DecoderPlan::mirror(enc);

  CHECK(plan.g0_head.ci == 256);
  CHECK(plan.g0_head.co == 128);
  CHECK(plan.g0_head.upsample);
  REQUIRE(plan.tail_blocks.size() == 3);
  CHECK(plan.tail_blocks[0].ci == 128);
  CHECK(plan.tail_blocks[0].co == 64);
  CHECK(plan.tail_blocks[0].upsample);
  CHECK(plan.tail_blocks[1].ci == 64);
  CHECK(plan.tail_blocks[1].co == 32);
  CHECK(plan.tail_blocks[1].upsample);
  CHECK(plan.tail_blocks[2].ci == 32);
  CHECK(plan.tail_blocks[2].co == 32);
  CHECK(!plan.tail_blocks[2].upsample);
  CHECK(plan.stem_channels == 32);
  CHECK(plan.out_channels == 3);
}

TEST_CASE("both decode paths emit input-shaped images in the unit interval") {
  EncoderConfig cfg;  // 64x64 defaults
  Encoder enc(cfg);
  enc.init(21);
  DecoderPair dec(cfg, nn::Act::relu);
  dec.init(22);

  Tensor x = rand_tensor({3, 64, 64}, 23);
  auto fp = enc.forward_features(x);
  Tensor xhat = dec.reconstruct_from_penultimate(fp.m1);
  Tensor xhat2 = dec.reconstruct_from_final(fp.m0);
  CHECK(xhat.shape() == x.shape());
  CHECK(xhat2.shape() == x.shape());
  for (size_t i = 0; i < xhat.size(); ++i) {
    CHECK(xhat[i] >= 0.0);
    CHECK(xhat[i] <= 1.0);
  }
  CHECK(!drue::bitwise_equal(xhat, xhat2));
}

TEST_CASE("the two decode paths run through one shared tail") {
  EncoderConfig cfg;
  cfg.image_size = 8;
  cfg.stem_channels = 4;
  cfg.channels = {4, 6, 6};
  cfg.downsample = {false, true, false};
  DecoderPair dec(cfg, nn::Act::relu);
  dec.init(31);

  // Feed the same features into both paths with the head silenced: the block
  // becomes y = relu(conv2(..) + x), so zeroing conv2 makes it the identity
  // on nonnegative input and the paths must coincide bit for bit.
  CHECK(!dec.g0_head.block.has_projection());
  CHECK(!dec.g0_head.up.has_value());
  dec.g0_head.block.conv2.w.value.zero();
  dec.g0_head.block.conv2.b.value.zero();

  Tensor z = rand_tensor({6, 2, 2}, 32);  // nonnegative
  Tensor via_head = dec.reconstruct_from_final(z);
  Tensor direct = dec.reconstruct_from_penultimate(z);
  CHECK(drue::bitwise_equal(via_head, direct));

  // And nudging one shared weight moves both outputs.
  std::vector<nn::Param*> shared;
  dec.collect_tail(shared);
  shared[0]->value[0] += 0.25;
  CHECK(!drue::bitwise_equal(dec.reconstruct_from_final(z), via_head));
  CHECK(!drue::bitwise_equal(dec.reconstruct_from_penultimate(z), direct));
}

TEST_CASE("shared manifest lists tail and output params only") {
  auto cfg = tiny_config();
  DecoderPair dec(cfg, nn::Act::relu);
  const std::string manifest = dec.shared_manifest();
  CHECK(manifest.find("tail0.conv1.w") != std::string::npos);
  CHECK(manifest.find("out.w") != std::string::npos);
  CHECK(manifest.find("g0_head") == std::string::npos);
}

TEST_CASE("decoder gradients match finite differences on both paths") {
  auto cfg = tiny_config();
  DecoderPair dec(cfg, nn::Act::softplus);
  dec.init(41);
  Tensor m0 = rand_tensor({6, 2, 2}, 42);
  Tensor target = rand_tensor({3, 8, 8}, 43);

  Tensor recon = dec.reconstruct_from_final(m0, true);
  CHECK(recon.shape() == target.shape());
  Tensor dxhat;
  nn::mse(recon, target, &dxhat);
  dec.backward_from_final(dxhat);

  auto loss = [&]() {
    return nn::mse(dec.reconstruct_from_final(m0, false), target, nullptr);
  };
  std::vector<nn::Param*> params;
  dec.collect_head(params);
  dec.collect_tail(params);
  for (auto* p : params)
    for (size_t i = 0; i < p->value.size(); i += 17)
      CHECK(grad_close(p->grad[i], fd(loss, &p->value[i])));

  // Shallow path: fresh grads, backward through the tail only.
  for (auto* p : params) p->grad.zero();
  Tensor m1 = rand_tensor({4, 4, 4}, 44);
  Tensor recon1 = dec.reconstruct_from_penultimate(m1, true);
  Tensor d1;
  nn::mse(recon1, target, &d1);
  Tensor dm1 = dec.backward_tail(d1);
  CHECK(dm1.shape() == m1.shape());

  auto loss1 = [&]() {
    return nn::mse(dec.reconstruct_from_penultimate(m1, false), target, nullptr);
  };
  std::vector<nn::Param*> tail_params;
  dec.collect_tail(tail_params);
  for (auto* p : tail_params)
    for (size_t i = 0; i < p->value.size(); i += 17)
      CHECK(grad_close(p->grad[i], fd(loss1, &p->value[i])));
  for (size_t i = 0; i < m1.size(); i += 5)
    CHECK(grad_close(dm1[i], fd(loss1, &m1[i])));
}

TEST_CASE("tail jvp agrees with directional finite differences") {
  auto cfg = tiny_config();
  DecoderPair dec(cfg, nn::Act::softplus);
  dec.init(51);
  Tensor m1 = rand_tensor({4, 4, 4}, 52);
  Tensor t = rand_tensor({4, 4, 4}, 53, -1.0, 1.0);

  dec.reconstruct_from_penultimate(m1, true);
  Tensor jt = dec.jvp_tail(t);

  const double h = 1e-6;
  Tensor xp(m1.shape()), xm(m1.shape());
  for (size_t i = 0; i < m1.size(); ++i) {
    xp[i] = m1[i] + h * t[i];
    xm[i] = m1[i] - h * t[i];
  }
  Tensor fp = dec.reconstruct_from_penultimate(xp, false);
  Tensor fm = dec.reconstruct_from_penultimate(xm, false);
  for (size_t i = 0; i < jt.size(); ++i) {
    const double num = (fp[i] - fm[i]) / (2 * h);
    CHECK(std::fabs(jt[i] - num) <= 1e-7 + 1e-5 * std::fabs(num));
  }
}
