#include "drue/decoders.hpp"

#include <json.hpp>

#include "drue/errors.hpp"

namespace drue {

DecoderPlan DecoderPlan::mirror(const EncoderConfig& enc) {
  enc.validate();
  const auto& ch = enc.channels;
  const size_t n = ch.size();
  DecoderPlan plan;
  plan.g0_head = {ch[n - 1], ch[n - 2], enc.downsample[n - 1]};
  for (size_t i = n - 1; i-- > 0;) {
    const int co = i == 0 ? enc.stem_channels : ch[i - 1];
    plan.tail_blocks.push_back({ch[i], co, enc.downsample[i]});
  }
  plan.stem_channels = enc.stem_channels;
  plan.out_channels = enc.in_channels;
  return plan;
}

std::string DecoderPlan::canonical_json() const {
  nlohmann::json j;
  auto spec = [](const DecoderBlockSpec& s) {
    return nlohmann::json{{"ci", s.ci}, {"co", s.co}, {"upsample", s.upsample}};
  };
  j["g0_head"] = spec(g0_head);
  nlohmann::json blocks = nlohmann::json::array();
  for (const auto& b : tail_blocks) blocks.push_back(spec(b));
  j["tail_blocks"] = blocks;
  j["stem_channels"] = stem_channels;
  j["out_channels"] = out_channels;
  return j.dump();
}

namespace {

nn::DecoderBlock make_block(const DecoderBlockSpec& s, nn::Act act) {
  return nn::DecoderBlock(s.ci, s.co, s.upsample, act);
}

}  // namespace

DecoderPair::DecoderPair(const EncoderConfig& enc, nn::Act act)
    : g0_head(make_block(DecoderPlan::mirror(enc).g0_head, act)),
      out_conv(enc.stem_channels, enc.in_channels, 3, 1) {
  const DecoderPlan plan = DecoderPlan::mirror(enc);
  for (const auto& s : plan.tail_blocks) tail.push_back(make_block(s, act));
}

void DecoderPair::init(uint64_t seed) {
  Rng rng(mix_seed(seed, "decoder"));
  g0_head.init_he(rng);
  for (auto& b : tail) b.init_he(rng);
  out_conv.init_he(rng, 1.0);
}

Tensor DecoderPair::tail_forward(const Tensor& m1, bool cache) {
  Tensor h = m1;
  for (auto& b : tail) h = b.forward(h, cache);
  return out_sig.forward(out_conv.forward(out_up.forward(h), cache), cache);
}

Tensor DecoderPair::reconstruct_from_penultimate(const Tensor& m1, bool cache) {
  return tail_forward(m1, cache);
}

Tensor DecoderPair::head_forward(const Tensor& m0, bool cache) {
  return g0_head.forward(m0, cache);
}

Tensor DecoderPair::reconstruct_from_final(const Tensor& m0, bool cache) {
  return tail_forward(g0_head.forward(m0, cache), cache);
}

Tensor DecoderPair::backward_tail(const Tensor& dxhat) {
  Tensor d = out_up.backward(out_conv.backward(out_sig.backward(dxhat)));
  for (size_t i = tail.size(); i-- > 0;) d = tail[i].backward(d);
  return d;
}

Tensor DecoderPair::backward_from_final(const Tensor& dxhat) {
  return g0_head.backward(backward_tail(dxhat));
}

Tensor DecoderPair::jvp_tail(const Tensor& tm1) {
  Tensor t = tm1;
  for (auto& b : tail) t = b.jvp(t);
  return out_sig.jvp(out_conv.jvp(out_up.jvp(t)));
}

void DecoderPair::collect_tail(std::vector<nn::Param*>& out) {
  for (size_t i = 0; i < tail.size(); ++i)
    tail[i].collect("tail" + std::to_string(i), out);
  out_conv.collect("out", out);
}

void DecoderPair::collect_head(std::vector<nn::Param*>& out) {
  g0_head.collect("g0_head", out);
}

std::string DecoderPair::shared_manifest() {
  std::vector<nn::Param*> params;
  collect_tail(params);
  nlohmann::json names = nlohmann::json::array();
  for (const auto* p : params) names.push_back(p->name);
  return names.dump();
}

}  // namespace drue
