#pragma once

#include <functional>
#include <string>
#include <vector>

#include "drue/tensor.hpp"
#include "drue/uncertainty.hpp"

namespace drue {

// A differentiable map bundled with its directional-derivative routine. When
// no analytic tangent is supplied, a central finite difference with step
// 1e-4 * |z| / |dz| stands in; jvp_method records which one answered.
struct DiffMap {
  std::function<Tensor(const Tensor&)> f;
  std::function<Tensor(const Tensor&, const Tensor&)> jvp;  // may be empty
  std::string jvp_method;
};

// The shallow-tap decode path with its forward-mode tangent.
DiffMap tail_map(DecoderPair& dec);

// Wraps any map with the finite-difference tangent.
DiffMap fd_map(std::function<Tensor(const Tensor&)> f);

// Directional derivative of the map at z along dz.
Tensor jvp_apply(const DiffMap& map, const Tensor& z, const Tensor& dz);

// Relative first-order Taylor remainder at step s:
//   |f(z + s dz) - f(z) - s jvp|_1 / max(|f(z + s dz) - f(z)|_1, 1e-12)
double taylor_residual(const DiffMap& map, const Tensor& z, const Tensor& dz,
                       double scale);

struct PerturbationProbe {
  Tensor z;
  Tensor dz;
  std::vector<double> scales;  // strictly decreasing, all positive

  void validate() const;
};

struct ProbePoint {
  double scale = 0.0;
  double abs_remainder = 0.0;       // |f(z+s dz) - f(z) - s jvp|_1
  double relative_residual = 0.0;
};

struct ScalingFit {
  bool exact = false;   // every remainder vanished (affine map)
  double slope = 0.0;   // log-log least-squares slope, ~2 for smooth maps
  std::vector<ProbePoint> points;  // surviving points used in the fit
  std::vector<std::string> warnings;
  std::string jvp_method;
};

// Fits log(absolute remainder) against log(scale). Points whose remainder
// underflows are dropped with a warning; at least 3 must survive unless every
// one of them vanished.
ScalingFit residual_scaling_exponent(const DiffMap& map,
                                     const PerturbationProbe& probe);

struct JvpGapResult {
  double u_d = 0.0;           // mean-abs difference of the two decodes
  double jvp_estimate = 0.0;  // mean-abs of the linearized difference
  double relative_gap = 0.0;  // |u_d - estimate| / max of the two, 0 if both 0
};

// Measures how well the first-order term explains the dual-decode
// discrepancy on a real model; dz_scale shrinks the feature gap to probe the
// small-perturbation regime.
JvpGapResult drue_vs_jvp_check(const Tensor& x, ModelBundle& bundle,
                               double dz_scale = 1.0);

}  // namespace drue
