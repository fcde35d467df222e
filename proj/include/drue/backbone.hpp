#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "drue/nn.hpp"
#include "drue/rng.hpp"
#include "drue/tensor.hpp"

namespace drue {

struct EncoderConfig {
  int image_size = 64;
  int in_channels = 3;
  int stem_channels = 8;
  std::vector<int> channels = {8, 16, 32, 64};
  std::vector<bool> downsample = {false, true, true, true};
  int num_classes = 2;
  std::string act = "relu";

  void validate() const;  // throws ConfigError
  std::string canonical_json() const;
  nn::Act act_kind() const;
  // Spatial side length of stage i's output (i = -1 gives the stem output).
  int stage_size(int i) const;
};

// Feature taps: m1 after the next-to-last stage, m0 after the last one.
struct FeaturePair {
  Tensor m1;
  Tensor m0;
};

// Stride-2 stem conv, a chain of residual stages, global average pooling and
// a linear head.
class Encoder {
 public:
  explicit Encoder(const EncoderConfig& cfg);
  void init(uint64_t seed);

  FeaturePair forward_features(const Tensor& x, bool cache = false);
  // The last stage alone, for replaying the deeper tap from m1.
  Tensor final_stage(const Tensor& m1, bool cache = false);
  Tensor logits_from(const Tensor& m0, bool cache = false);
  Tensor forward_logits(const Tensor& x, bool cache = false);
  Tensor backward_from_logits(const Tensor& dlogits);

  Tensor predict(const Tensor& x);  // softmax probabilities
  // One stochastic pass with inverted dropout after every stage.
  Tensor predict_dropout(const Tensor& x, double rate, Rng& rng);

  void collect(std::vector<nn::Param*>& out);
  const EncoderConfig& config() const { return cfg_; }
  int num_stages() const { return static_cast<int>(stages_.size()); }

  nn::Conv2d stem_conv;
  nn::Activation stem_act;
  std::vector<nn::ResidualBlock> stages_;
  nn::GlobalAvgPool gap;
  nn::Linear head;

 private:
  EncoderConfig cfg_;
};

}  // namespace drue
