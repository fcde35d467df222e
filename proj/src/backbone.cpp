#include "drue/backbone.hpp"

#include <json.hpp>

#include "drue/errors.hpp"

namespace drue {

void EncoderConfig::validate() const {
  if (image_size < 4) throw ConfigError("model.image_size must be >= 4");
  if (in_channels < 1) throw ConfigError("model.in_channels must be >= 1");
  if (stem_channels < 1) throw ConfigError("model.stem_channels must be >= 1");
  if (channels.empty()) throw ConfigError("model.channels must not be empty");
  if (channels.size() != downsample.size())
    throw ConfigError("model.channels and model.downsample lengths differ");
  if (channels.size() < 2)
    throw ConfigError("model.channels needs at least two stages for dual taps");
  for (int c : channels)
    if (c < 1) throw ConfigError("model.channels entries must be >= 1");
  if (num_classes < 2) throw ConfigError("model.num_classes must be >= 2");
  if (act != "relu" && act != "softplus")
    throw ConfigError("model.act must be relu or softplus");
  int size = image_size;
  if (size % 2 != 0) throw ConfigError("model.image_size must be even");
  size /= 2;  // stem
  for (size_t i = 0; i < channels.size(); ++i) {
    if (downsample[i]) {
      if (size % 2 != 0 || size < 2)
        throw ConfigError("model.image_size too small for the downsample chain");
      size /= 2;
    }
  }
}

nn::Act EncoderConfig::act_kind() const {
  return act == "softplus" ? nn::Act::softplus : nn::Act::relu;
}

int EncoderConfig::stage_size(int i) const {
  int size = image_size / 2;
  for (int s = 0; s <= i; ++s)
    if (downsample[static_cast<size_t>(s)]) size /= 2;
  return size;
}

std::string EncoderConfig::canonical_json() const {
  nlohmann::json j;
  j["image_size"] = image_size;
  j["in_channels"] = in_channels;
  j["stem_channels"] = stem_channels;
  j["channels"] = channels;
  j["downsample"] = downsample;
  j["num_classes"] = num_classes;
  j["act"] = act;
  return j.dump();
}

Encoder::Encoder(const EncoderConfig& cfg)
    : stem_conv(cfg.in_channels, cfg.stem_channels, 3, 2),
      stem_act(cfg.act_kind()),
      gap(),
      head(cfg.channels.back(), cfg.num_classes),
      cfg_(cfg) {
  cfg.validate();
  int ci = cfg.stem_channels;
  for (size_t i = 0; i < cfg.channels.size(); ++i) {
    stages_.emplace_back(ci, cfg.channels[i], cfg.downsample[i], cfg.act_kind());
    ci = cfg.channels[i];
  }
}

void Encoder::init(uint64_t seed) {
  Rng rng(mix_seed(seed, "encoder"));
  stem_conv.init_he(rng);
  for (auto& s : stages_) s.init_he(rng);
  head.init_he(rng, 1.0);
}

FeaturePair Encoder::forward_features(const Tensor& x, bool cache) {
  Tensor h = stem_act.forward(stem_conv.forward(x, cache), cache);
  FeaturePair fp;
  const size_t n = stages_.size();
  for (size_t i = 0; i + 1 < n; ++i) h = stages_[i].forward(h, cache);
  fp.m1 = h;
  fp.m0 = stages_[n - 1].forward(h, cache);
  return fp;
}

Tensor Encoder::final_stage(const Tensor& m1, bool cache) {
  return stages_.back().forward(m1, cache);
}

Tensor Encoder::logits_from(const Tensor& m0, bool cache) {
  return head.forward(gap.forward(m0, cache), cache);
}

Tensor Encoder::forward_logits(const Tensor& x, bool cache) {
  return logits_from(forward_features(x, cache).m0, cache);
}

Tensor Encoder::backward_from_logits(const Tensor& dlogits) {
  Tensor d = gap.backward(head.backward(dlogits));
  for (size_t i = stages_.size(); i-- > 0;) d = stages_[i].backward(d);
  return stem_conv.backward(stem_act.backward(d));
}

Tensor Encoder::predict(const Tensor& x) {
  return nn::softmax(forward_logits(x, false));
}

Tensor Encoder::predict_dropout(const Tensor& x, double rate, Rng& rng) {
  Tensor h = stem_act.forward(stem_conv.forward(x, false), false);
  for (auto& s : stages_) h = nn::dropout(s.forward(h, false), rate, rng);
  return nn::softmax(logits_from(h, false));
}

void Encoder::collect(std::vector<nn::Param*>& out) {
  stem_conv.collect("stem", out);
  for (size_t i = 0; i < stages_.size(); ++i)
    stages_[i].collect("stage" + std::to_string(i), out);
  head.collect("head", out);
}

}  // namespace drue
