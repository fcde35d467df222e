#include <doctest.h>

#include <cmath>

#include "drue/backbone.hpp"
#include "drue/decoders.hpp"
#include "drue/errors.hpp"
#include "drue/rng.hpp"
#include "drue/theory.hpp"

using namespace drue;

namespace {

Tensor vec(std::initializer_list<double> vals) {
  Tensor t({static_cast<int>(vals.size())});
  size_t i = 0;
  for (double v : vals) t[i++] = v;
  return t;
}

// Mixing affine map R^3 -> R^2.
Tensor affine3to2(const Tensor& z) {
  Tensor y({2});
  y[0] = 2.0 * z[0] - z[1] + 0.5 * z[2] + 1.0;
  y[1] = z[0] + 3.0 * z[2] - 2.0;
  return y;
}

DiffMap square_map() {
  DiffMap map;
  map.f = [](const Tensor& z) {
    Tensor y = z;
    for (size_t i = 0; i < y.size(); ++i) y[i] = z[i] * z[i];
    return y;
  };
  map.jvp = [](const Tensor& z, const Tensor& dz) {
    Tensor y = z;
    for (size_t i = 0; i < y.size(); ++i) y[i] = 2.0 * z[i] * dz[i];
    return y;
  };
  map.jvp_method = "analytic-forward";
  return map;
}

DiffMap cube_map_fd() {
  return fd_map([](const Tensor& z) {
    Tensor y = z;
    for (size_t i = 0; i < y.size(); ++i) y[i] = z[i] * z[i] * z[i];
    return y;
  });
}

double l1(const Tensor& t) {
  double acc = 0.0;
  for (size_t i = 0; i < t.size(); ++i) acc += std::fabs(t[i]);
  return acc;
}

EncoderConfig smooth_config() {
  EncoderConfig cfg;
  cfg.image_size = 8;
  cfg.stem_channels = 4;
  cfg.channels = {4, 6, 6};
  cfg.downsample = {false, true, false};
  cfg.act = "softplus";
  return cfg;
}

Tensor random_tensor(const std::vector<int>& shape, uint64_t seed,
                     double scale) {
  Tensor t(shape);
  Rng rng(seed);
  for (size_t i = 0; i < t.size(); ++i) t[i] = rng.normal(0.0, scale);
  return t;
}

}  // namespace

TEST_CASE("directional derivative of an affine map is the secant exactly") {
  DiffMap map = fd_map(affine3to2);
  Tensor z = vec({0.3, -0.7, 1.2});
  Tensor dz = vec({0.5, 1.0, -0.25});

  Tensor tangent = jvp_apply(map, z, dz);
  Tensor fz = affine3to2(z);
  Tensor moved = z;
  for (size_t i = 0; i < z.size(); ++i) moved[i] = z[i] + dz[i];
  Tensor fmoved = affine3to2(moved);
  for (size_t i = 0; i < tangent.size(); ++i)
    CHECK(std::fabs(tangent[i] - (fmoved[i] - fz[i])) < 1e-10);

  CHECK(taylor_residual(map, z, dz, 1.0) < 1e-9);
  CHECK(taylor_residual(map, z, dz, 0.01) < 1e-9);
}

TEST_CASE("affine maps report an exact fit instead of a slope") {
  DiffMap map;
  map.f = affine3to2;
  map.jvp = [](const Tensor&, const Tensor& dz) {
    Tensor y({2});
    y[0] = 2.0 * dz[0] - dz[1] + 0.5 * dz[2];
    y[1] = dz[0] + 3.0 * dz[2];
    return y;
  };
  map.jvp_method = "analytic-forward";

  PerturbationProbe probe;
  probe.z = vec({0.3, -0.7, 1.2});
  probe.dz = vec({0.5, 1.0, -0.25});
  probe.scales = {1e-1, 1e-2, 1e-3};

  ScalingFit fit = residual_scaling_exponent(map, probe);
  CHECK(fit.exact);
  CHECK(fit.points.empty());
  CHECK(fit.jvp_method == "analytic-forward");
}

TEST_CASE("quadratic toy reproduces its closed-form derivative and residual") {
  DiffMap map = square_map();
  Tensor z = vec({1.0});
  Tensor dz = vec({1.0});

  Tensor tangent = jvp_apply(map, z, dz);
  CHECK(tangent[0] == doctest::Approx(2.0).epsilon(1e-12));

  // f(1.1) - f(1) = 0.21, minus the linear part 0.2 leaves 0.01.
  CHECK(std::fabs(taylor_residual(map, z, dz, 0.1) - 0.01 / 0.21) < 1e-6);

  PerturbationProbe probe;
  probe.z = z;
  probe.dz = dz;
  probe.scales = {1e-1, 1e-2, 1e-3};
  ScalingFit fit = residual_scaling_exponent(map, probe);
  CHECK(!fit.exact);
  REQUIRE(fit.points.size() == 3);
  CHECK(std::fabs(fit.slope - 2.0) < 1e-3);

  // Central differences are exact on quadratics, so the fd route agrees.
  DiffMap fd = fd_map(map.f);
  ScalingFit fd_fit = residual_scaling_exponent(fd, probe);
  CHECK(std::fabs(fd_fit.slope - 2.0) < 1e-3);
}

TEST_CASE("probe validation rejects malformed inputs") {
  PerturbationProbe p;
  p.z = vec({1.0, 2.0});
  p.dz = vec({1.0, 0.0});
  p.scales = {1e-1, 1e-2, 1e-3};
  CHECK_NOTHROW(p.validate());

  PerturbationProbe bad = p;
  bad.dz = vec({0.0, 0.0});
  CHECK_THROWS_AS(bad.validate(), ContractViolation);

  bad = p;
  bad.dz = vec({1.0});
  CHECK_THROWS_AS(bad.validate(), ContractViolation);

  bad = p;
  bad.scales = {1e-1, 1e-2};
  CHECK_THROWS_AS(bad.validate(), ContractViolation);

  bad = p;
  bad.scales = {1e-1, 1e-1, 1e-3};
  CHECK_THROWS_AS(bad.validate(), ContractViolation);

  bad = p;
  bad.scales = {1e-1, 5e-2, 2e-2};  // spans less than 2 decades
  CHECK_THROWS_AS(bad.validate(), ContractViolation);

  bad = p;
  bad.scales = {1e-1, 1e-2, -1e-3};
  CHECK_THROWS_AS(bad.validate(), ContractViolation);

  CHECK_THROWS_AS(taylor_residual(square_map(), vec({1.0}), vec({1.0}), 0.0),
                  ContractViolation);
}

TEST_CASE("underflowing scales are dropped, and too few survivors abort") {
  DiffMap map = cube_map_fd();
  PerturbationProbe probe;
  probe.z = vec({1.0});
  probe.dz = vec({1.0});

  probe.scales = {1e-1, 1e-2, 1e-3, 1e-12};
  ScalingFit fit = residual_scaling_exponent(map, probe);
  REQUIRE(fit.points.size() == 3);
  REQUIRE(fit.warnings.size() == 1);
  CHECK(fit.warnings[0].find("underflow") != std::string::npos);
  CHECK(fit.slope > 1.8);
  CHECK(fit.slope < 2.2);

  probe.scales = {1e-1, 1e-2, 1e-12, 1e-13};
  CHECK_THROWS_AS(residual_scaling_exponent(map, probe), ComputeError);
}

TEST_CASE("smooth decoder shows a quadratic remainder and a linear tangent") {
  EncoderConfig cfg = smooth_config();
  DecoderPair dec(cfg, nn::Act::softplus);
  dec.init(97);
  DiffMap map = tail_map(dec);

  PerturbationProbe probe;
  probe.z = random_tensor({6, 2, 2}, 5, 1.0);
  probe.dz = random_tensor({6, 2, 2}, 6, 1.0);
  probe.scales = {1e-1, 1e-2, 1e-3};

  ScalingFit fit = residual_scaling_exponent(map, probe);
  CHECK(!fit.exact);
  CHECK(fit.jvp_method == "analytic-forward");
  CHECK(fit.slope > 1.8);
  CHECK(fit.slope < 2.2);

  CHECK(taylor_residual(map, probe.z, probe.dz, 1e-3) <= 1e-2);

  // Halving the step divides the absolute remainder by about four.
  auto remainder = [&](double s) {
    Tensor base = map.f(probe.z);
    Tensor moved = probe.z;
    for (size_t i = 0; i < moved.size(); ++i)
      moved[i] = probe.z[i] + s * probe.dz[i];
    Tensor fm = map.f(moved);
    Tensor tangent = jvp_apply(map, probe.z, probe.dz);
    double rem = 0.0;
    for (size_t i = 0; i < fm.size(); ++i)
      rem += std::fabs(fm[i] - base[i] - s * tangent[i]);
    return rem;
  };
  const double ratio = remainder(0.02) / remainder(0.01);
  CHECK(ratio > 3.5);
  CHECK(ratio < 4.5);

  // Linearity of the tangent in its direction argument.
  Tensor u = random_tensor({6, 2, 2}, 7, 1.0);
  Tensor v = random_tensor({6, 2, 2}, 8, 1.0);
  Tensor combo = u;
  for (size_t i = 0; i < combo.size(); ++i) combo[i] = 2.0 * u[i] + 0.5 * v[i];
  Tensor lhs = jvp_apply(map, probe.z, combo);
  Tensor ju = jvp_apply(map, probe.z, u);
  Tensor jv = jvp_apply(map, probe.z, v);
  double gap = 0.0, mag = 0.0;
  for (size_t i = 0; i < lhs.size(); ++i) {
    const double rhs = 2.0 * ju[i] + 0.5 * jv[i];
    gap += std::fabs(lhs[i] - rhs);
    mag += std::fabs(rhs);
  }
  CHECK(gap / std::max(mag, 1e-12) < 1e-6);
}

TEST_CASE("dual-decode gap vanishes when the feature gap is zero") {
  EncoderConfig cfg = smooth_config();
  cfg.act = "relu";
  Encoder enc(cfg);
  enc.init(11);
  DecoderPair dec(cfg, nn::Act::relu);
  dec.init(12);
  // Same silencing trick as the scorer tests: last stage and decode head
  // become identities, so projected features equal m1 and the gap is zero.
  enc.stages_.back().conv2.w.value.zero();
  enc.stages_.back().conv2.b.value.zero();
  dec.g0_head.block.conv2.w.value.zero();
  dec.g0_head.block.conv2.b.value.zero();

  ModelBundle b;
  b.enc = &enc;
  b.dec = &dec;
  b.classifier_done = b.g1_done = b.g0_done = true;

  Tensor x = random_tensor({3, 8, 8}, 13, 0.25);
  for (size_t i = 0; i < x.size(); ++i) x[i] = 0.5 + x[i] * 0.5;

  JvpGapResult r = drue_vs_jvp_check(x, b);
  CHECK(r.u_d == 0.0);
  CHECK(r.jvp_estimate == 0.0);
  CHECK(r.relative_gap == 0.0);
}

TEST_CASE("dual-decode linearization gap shrinks with the feature gap") {
  EncoderConfig cfg = smooth_config();
  cfg.act = "relu";
  Encoder enc(cfg);
  enc.init(21);
  DecoderPair dec(cfg, nn::Act::relu);
  dec.init(22);

  ModelBundle b;
  b.enc = &enc;
  b.dec = &dec;
  b.classifier_done = b.g1_done = b.g0_done = true;

  Rng rng(77);
  Tensor x({3, 8, 8});
  for (size_t i = 0; i < x.size(); ++i) x[i] = rng.uniform(0.0, 1.0);

  double prev = 2.0;
  for (double s : {1.0, 1e-1, 1e-2, 1e-3}) {
    JvpGapResult r = drue_vs_jvp_check(x, b, s);
    CHECK(r.u_d >= 0.0);
    CHECK(r.relative_gap < prev);
    prev = r.relative_gap;
  }

  ModelBundle incomplete = b;
  incomplete.g0_done = false;
  CHECK_THROWS_AS(drue_vs_jvp_check(x, incomplete), ConfigError);
  CHECK_THROWS_AS(drue_vs_jvp_check(x, b, 0.0), ContractViolation);
}
