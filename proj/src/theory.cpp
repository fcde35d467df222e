#include "drue/theory.hpp"

#include <cmath>

#include "drue/errors.hpp"

namespace drue {

namespace {

double l1(const Tensor& t) {
  double acc = 0.0;
  for (size_t i = 0; i < t.size(); ++i) acc += std::fabs(t[i]);
  return acc;
}

double l2(const Tensor& t) {
  double acc = 0.0;
  for (size_t i = 0; i < t.size(); ++i) acc += t[i] * t[i];
  return std::sqrt(acc);
}

void check_finite(const Tensor& t, const char* who) {
  for (size_t i = 0; i < t.size(); ++i)
    if (!std::isfinite(t[i]))
      throw ComputeError(std::string(who) + ": non-finite value at index " +
                         std::to_string(i));
}

Tensor axpy_copy(const Tensor& z, double s, const Tensor& dz) {
  Tensor out = z;
  for (size_t i = 0; i < out.size(); ++i) out[i] += s * dz[i];
  return out;
}

}  // namespace

DiffMap tail_map(DecoderPair& dec) {
  DiffMap map;
  map.f = [&dec](const Tensor& z) {
    return dec.reconstruct_from_penultimate(z, false);
  };
  // The tangent needs the forward caches at the same point, so it reruns the
  // cached forward itself rather than trusting call order.
  map.jvp = [&dec](const Tensor& z, const Tensor& dz) {
    dec.reconstruct_from_penultimate(z, true);
    return dec.jvp_tail(dz);
  };
  map.jvp_method = "analytic-forward";
  return map;
}

DiffMap fd_map(std::function<Tensor(const Tensor&)> f) {
  DiffMap map;
  map.f = std::move(f);
  map.jvp_method = "central-fd";
  return map;
}

Tensor jvp_apply(const DiffMap& map, const Tensor& z, const Tensor& dz) {
  if (z.size() != dz.size())
    throw ContractViolation("jvp: z and dz shapes differ");
  Tensor out;
  if (map.jvp) {
    out = map.jvp(z, dz);
  } else {
    const double dz_norm = l2(dz);
    if (dz_norm == 0.0) {
      Tensor probe = map.f(z);
      probe.zero();
      return probe;
    }
    const double h = 1e-4 * std::max(l2(z), 1e-8) / dz_norm;
    Tensor hi = map.f(axpy_copy(z, h, dz));
    Tensor lo = map.f(axpy_copy(z, -h, dz));
    out = hi;
    for (size_t i = 0; i < out.size(); ++i)
      out[i] = (hi[i] - lo[i]) / (2.0 * h);
  }
  check_finite(out, "jvp");
  return out;
}

double taylor_residual(const DiffMap& map, const Tensor& z, const Tensor& dz,
                       double scale) {
  if (!(scale > 0.0)) throw ContractViolation("taylor_residual: scale <= 0");
  Tensor base = map.f(z);
  Tensor moved = map.f(axpy_copy(z, scale, dz));
  check_finite(moved, "taylor_residual");
  Tensor tangent = jvp_apply(map, z, dz);

  double rem = 0.0, diff = 0.0;
  for (size_t i = 0; i < base.size(); ++i) {
    const double d = moved[i] - base[i];
    diff += std::fabs(d);
    rem += std::fabs(d - scale * tangent[i]);
  }
  return rem / std::max(diff, 1e-12);
}

void PerturbationProbe::validate() const {
  if (z.size() == 0 || z.size() != dz.size())
    throw ContractViolation("probe: z and dz must share a nonempty shape");
  if (l2(dz) == 0.0) throw ContractViolation("probe: dz must be nonzero");
  if (scales.size() < 3)
    throw ContractViolation("probe: need at least 3 scales");
  for (size_t i = 0; i < scales.size(); ++i) {
    if (!(scales[i] > 0.0)) throw ContractViolation("probe: scales must be positive");
    if (i > 0 && !(scales[i] < scales[i - 1]))
      throw ContractViolation("probe: scales must be strictly decreasing");
  }
  if (scales.front() / scales.back() < 100.0)
    throw ContractViolation("probe: scales must span at least 2 decades");
}

ScalingFit residual_scaling_exponent(const DiffMap& map,
                                     const PerturbationProbe& probe) {
  probe.validate();

  ScalingFit fit;
  fit.jvp_method = map.jvp_method;
  Tensor base = map.f(probe.z);
  Tensor tangent = jvp_apply(map, probe.z, probe.dz);
  const double floor = 1e-14 * std::max(l1(base), 1.0);

  for (double s : probe.scales) {
    Tensor moved = map.f(axpy_copy(probe.z, s, probe.dz));
    check_finite(moved, "residual_scaling_exponent");
    double rem = 0.0, diff = 0.0;
    for (size_t i = 0; i < base.size(); ++i) {
      const double d = moved[i] - base[i];
      diff += std::fabs(d);
      rem += std::fabs(d - s * tangent[i]);
    }
    if (rem <= floor) {
      char msg[96];
      std::snprintf(msg, sizeof(msg),
                    "remainder underflow at scale %.3g, point dropped", s);
      fit.warnings.push_back(msg);
      continue;
    }
    fit.points.push_back({s, rem, rem / std::max(diff, 1e-12)});
  }

  if (fit.points.empty()) {
    fit.exact = true;  // affine map: no remainder anywhere
    return fit;
  }
  if (fit.points.size() < 3)
    throw ComputeError(
        "residual_scaling_exponent: fewer than 3 scales survive underflow");

  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  const double n = static_cast<double>(fit.points.size());
  for (const ProbePoint& p : fit.points) {
    const double x = std::log(p.scale), y = std::log(p.abs_remainder);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  fit.slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  return fit;
}

JvpGapResult drue_vs_jvp_check(const Tensor& x, ModelBundle& bundle,
                               double dz_scale) {
  if (!bundle.enc || !bundle.dec || !bundle.g1_done || !bundle.g0_done)
    throw ConfigError("drue_vs_jvp_check: bundle missing decoder stages");
  if (!(dz_scale > 0.0))
    throw ContractViolation("drue_vs_jvp_check: dz_scale <= 0");

  FeaturePair fp = bundle.enc->forward_features(x, false);
  Tensor projected = bundle.dec->head_forward(fp.m0, false);
  Tensor dz = projected;
  for (size_t i = 0; i < dz.size(); ++i)
    dz[i] = (projected[i] - fp.m1[i]) * dz_scale;

  DiffMap map = tail_map(*bundle.dec);
  Tensor base = map.f(fp.m1);
  Tensor moved = map.f(axpy_copy(fp.m1, 1.0, dz));
  Tensor tangent = jvp_apply(map, fp.m1, dz);

  double diff = 0.0, lin = 0.0;
  for (size_t i = 0; i < base.size(); ++i) {
    diff += std::fabs(moved[i] - base[i]);
    lin += std::fabs(tangent[i]);
  }
  const double n = static_cast<double>(base.size());

  JvpGapResult r;
  r.u_d = diff / n;
  r.jvp_estimate = lin / n;
  const double denom = std::max(r.u_d, r.jvp_estimate);
  r.relative_gap = denom > 0.0 ? std::fabs(r.u_d - r.jvp_estimate) / denom : 0.0;
  return r;
}

}  // namespace drue
