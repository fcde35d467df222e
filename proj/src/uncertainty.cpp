#include "drue/uncertainty.hpp"

#include <cmath>

#include "drue/errors.hpp"
#include "drue/rng.hpp"

namespace drue {

namespace {

void need(const ModelBundle& b, bool g1, bool g0, bool classifier,
          const char* who) {
  if (!b.enc || !b.dec) throw ConfigError(std::string(who) + ": empty bundle");
  if (classifier && !b.classifier_done)
    throw ConfigError(std::string(who) + ": classifier stage not trained");
  if (g1 && !b.g1_done)
    throw ConfigError(std::string(who) + ": g1 stage not trained");
  if (g0 && !b.g0_done)
    throw ConfigError(std::string(who) + ": g0 stage not trained");
}

}  // namespace

ReconPair reconstruction_pair(const Tensor& x, ModelBundle& b) {
  need(b, true, true, false, "reconstruction_pair");
  FeaturePair fp = b.enc->forward_features(x, false);
  ReconPair out;
  out.from_penultimate = b.dec->reconstruct_from_penultimate(fp.m1, false);
  out.from_final = b.dec->reconstruct_from_final(fp.m0, false);
  return out;
}

double drue_score(const Tensor& x, ModelBundle& b) {
  ReconPair r = reconstruction_pair(x, b);
  return mean_abs_diff(r.from_penultimate, r.from_final);
}

double rue_score(const Tensor& x, ModelBundle& b, Tap tap) {
  if (tap == Tap::final) {
    // The deep-tap decode runs through the shared tail too, so both decoder
    // stages must be trained.
    need(b, true, true, false, "rue_score");
    FeaturePair fp = b.enc->forward_features(x, false);
    return mean_abs_diff(x, b.dec->reconstruct_from_final(fp.m0, false));
  }
  need(b, true, false, false, "rue_score");
  FeaturePair fp = b.enc->forward_features(x, false);
  return mean_abs_diff(x, b.dec->reconstruct_from_penultimate(fp.m1, false));
}

double entropy_score(const Tensor& probs) {
  double sum = 0.0, h = 0.0;
  for (size_t i = 0; i < probs.size(); ++i) {
    const double p = probs[i];
    if (p < 0.0) throw ContractViolation("entropy_score: negative probability");
    sum += p;
    if (p > 0.0) h -= p * std::log(p);
  }
  if (std::fabs(sum - 1.0) > 1e-4)
    throw ContractViolation("entropy_score: probabilities sum to " +
                            std::to_string(sum));
  return h;
}

double mc_dropout_score(const Tensor& x, ModelBundle& b, int n_passes,
                        double dropout_rate, uint64_t seed) {
  need(b, false, false, true, "mc_dropout_score");
  if (n_passes < 1)
    throw ContractViolation("mc_dropout_score: n_passes must be >= 1");
  Tensor mean;
  for (int i = 0; i < n_passes; ++i) {
    Rng rng(mix_seed(seed, "mc:" + std::to_string(i)));
    Tensor p = b.enc->predict_dropout(x, dropout_rate, rng);
    if (mean.empty())
      mean = std::move(p);
    else
      for (size_t j = 0; j < mean.size(); ++j) mean[j] += p[j];
  }
  for (size_t j = 0; j < mean.size(); ++j)
    mean[j] /= static_cast<double>(n_passes);
  return entropy_score(mean);
}

Tensor normalize_map(const Tensor& raw) {
  double lo = raw[0], hi = raw[0];
  for (size_t i = 1; i < raw.size(); ++i) {
    lo = std::min(lo, raw[i]);
    hi = std::max(hi, raw[i]);
  }
  Tensor norm(raw.shape());
  if (hi - lo <= 0.0) return norm;  // constant map -> all zeros
  for (size_t i = 0; i < raw.size(); ++i) norm[i] = (raw[i] - lo) / (hi - lo);
  return norm;
}

UncertaintyMap uncertainty_map(const Tensor& x, ModelBundle& b) {
  ReconPair r = reconstruction_pair(x, b);
  const int c = r.from_final.dim(0), h = r.from_final.dim(1),
            w = r.from_final.dim(2);
  Tensor raw({h, w});
  for (int y = 0; y < h; ++y)
    for (int xx = 0; xx < w; ++xx) {
      double acc = 0.0;
      for (int ch = 0; ch < c; ++ch)
        acc += std::fabs(r.from_penultimate.at(ch, y, xx) -
                         r.from_final.at(ch, y, xx));
      raw[static_cast<size_t>(y) * w + xx] = acc / c;
    }
  return UncertaintyMap{raw, normalize_map(raw)};
}

}  // namespace drue
