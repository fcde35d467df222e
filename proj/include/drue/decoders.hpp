#pragma once

#include <string>
#include <vector>

#include "drue/backbone.hpp"
#include "drue/nn.hpp"
#include "drue/tensor.hpp"

namespace drue {

struct DecoderBlockSpec {
  int ci;
  int co;
  bool upsample;
};

// Mirror plan derived from an encoder: one block per encoder stage, walked
// deepest-first, plus a stem mirror (upsample + conv to the input channels +
// sigmoid). The deepest mirror block doubles as the g0 head; the rest form
// the tail shared by both decode paths.
struct DecoderPlan {
  DecoderBlockSpec g0_head;
  std::vector<DecoderBlockSpec> tail_blocks;
  int stem_channels;
  int out_channels;

  static DecoderPlan mirror(const EncoderConfig& enc);
  std::string canonical_json() const;
};

// Two reconstruction paths sharing one set of tail weights:
//   from_penultimate: m1 -> tail -> image        (the shallow-tap decoder)
//   from_final:       m0 -> g0 head -> tail -> image
class DecoderPair {
 public:
  DecoderPair(const EncoderConfig& enc, nn::Act act);
  void init(uint64_t seed);

  Tensor reconstruct_from_penultimate(const Tensor& m1, bool cache = false);
  Tensor reconstruct_from_final(const Tensor& m0, bool cache = false);
  // g0 head alone (m0 -> m1-shaped features).
  Tensor head_forward(const Tensor& m0, bool cache = false);

  // Gradients flow through every layer they pass; freezing is the trainer's
  // choice of which params it steps.
  Tensor backward_tail(const Tensor& dxhat);
  Tensor backward_from_final(const Tensor& dxhat);

  // Tangent through the shallow-tap path at the last cached forward.
  Tensor jvp_tail(const Tensor& tm1);

  void collect_tail(std::vector<nn::Param*>& out);
  void collect_head(std::vector<nn::Param*>& out);
  // Names of the params the two paths share, as a JSON array string.
  std::string shared_manifest();

  nn::DecoderBlock g0_head;
  std::vector<nn::DecoderBlock> tail;
  nn::Upsample2x out_up;
  nn::Conv2d out_conv;
  nn::Sigmoid out_sig;

 private:
  Tensor tail_forward(const Tensor& m1, bool cache);
};

}  // namespace drue
