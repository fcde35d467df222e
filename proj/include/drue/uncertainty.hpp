#pragma once

#include <cstdint>

#include "drue/backbone.hpp"
#include "drue/decoders.hpp"
#include "drue/tensor.hpp"

namespace drue {

// A trained model with flags for which stages actually completed; scorers
// refuse to run on missing stages.
struct ModelBundle {
  Encoder* enc = nullptr;
  DecoderPair* dec = nullptr;
  bool classifier_done = false;
  bool g1_done = false;
  bool g0_done = false;
};

enum class Tap { penultimate, final };

// Mean absolute gap between the two decode paths' reconstructions.
double drue_score(const Tensor& x, ModelBundle& b);

// Mean absolute gap between the input and one reconstruction.
double rue_score(const Tensor& x, ModelBundle& b, Tap tap = Tap::final);

// Shannon entropy in nats over a probability vector; 0 ln 0 := 0.
double entropy_score(const Tensor& probs);

// Predictive entropy of the mean probability vector over stochastic passes.
double mc_dropout_score(const Tensor& x, ModelBundle& b, int n_passes,
                        double dropout_rate, uint64_t seed);

struct UncertaintyMap {
  Tensor raw;   // [H,W] channel-mean |xhat - xhat2|; mean equals drue_score
  Tensor norm;  // min-max normalized to [0,1]; constant raw -> all zeros
};

UncertaintyMap uncertainty_map(const Tensor& x, ModelBundle& b);
Tensor normalize_map(const Tensor& raw);

struct ReconPair {
  Tensor from_penultimate;
  Tensor from_final;
};

ReconPair reconstruction_pair(const Tensor& x, ModelBundle& b);

}  // namespace drue
