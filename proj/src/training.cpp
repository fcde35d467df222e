#include "drue/training.hpp"

#include <cmath>
#include <functional>
#include <limits>

#include "drue/errors.hpp"
#include "drue/nn.hpp"
#include "drue/rng.hpp"

namespace drue {

void TrainConfig::validate() const {
  if (learning_rate <= 0.0) throw ConfigError("training.learning_rate must be > 0");
  if (batch_size < 1) throw ConfigError("training.batch_size must be >= 1");
  if (max_epochs < 1) throw ConfigError("training.max_epochs must be >= 1");
  if (patience < 1) throw ConfigError("training.patience must be >= 1");
  if (stage != "classifier" && stage != "g1" && stage != "g0")
    throw ConfigError("training.stage must be classifier, g1 or g0");
}

EarlyStopper::EarlyStopper(int patience)
    : patience_(patience), best_(std::numeric_limits<double>::infinity()) {
  if (patience < 1) throw ContractViolation("patience must be >= 1");
}

bool EarlyStopper::update(double val_loss) {
  ++epoch_;
  if (val_loss < best_) {
    best_ = val_loss;
    best_epoch_ = epoch_;
    since_best_ = 0;
    improved_ = true;
    return false;
  }
  improved_ = false;
  return ++since_best_ >= patience_;
}

namespace {

// Shared stage skeleton: shuffled minibatches, per-epoch validation, early
// stopping, restore of the best epoch's stepped parameters.
StageResult run_stage(
    const TrainConfig& cfg, size_t n_train, size_t n_val,
    std::vector<nn::Param*>& stepped, std::vector<nn::Param*>& zeroed,
    const std::function<double(size_t, double)>& grad_one,
    const std::function<double(size_t)>& val_one) {
  cfg.validate();
  if (n_train == 0 || n_val == 0)
    throw ConfigError("training needs non-empty train and val sets");

  nn::Adam opt(stepped, cfg.learning_rate);
  EarlyStopper stopper(cfg.patience);
  StageResult result;
  std::vector<Tensor> best_values(stepped.size());

  std::vector<size_t> order(n_train);
  for (size_t i = 0; i < n_train; ++i) order[i] = i;

  for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
    Rng rng(mix_seed(cfg.seed, "epoch:" + std::to_string(epoch)));
    rng.shuffle(order);

    double train_loss = 0.0;
    for (size_t start = 0; start < n_train; start += cfg.batch_size) {
      const size_t stop = std::min(n_train, start + cfg.batch_size);
      const double scale = 1.0 / static_cast<double>(stop - start);
      for (auto* p : zeroed) p->grad.zero();
      for (size_t i = start; i < stop; ++i)
        train_loss += grad_one(order[i], scale);
      opt.step();
    }
    train_loss /= static_cast<double>(n_train);

    double val_loss = 0.0;
    for (size_t i = 0; i < n_val; ++i) val_loss += val_one(i);
    val_loss /= static_cast<double>(n_val);

    if (!std::isfinite(train_loss) || !std::isfinite(val_loss))
      throw ComputeError("stage " + cfg.stage + " diverged at epoch " +
                         std::to_string(epoch));

    result.history.push_back({epoch, train_loss, val_loss});
    const bool stop_now = stopper.update(val_loss);
    if (stopper.improved())
      for (size_t i = 0; i < stepped.size(); ++i)
        best_values[i] = stepped[i]->value;
    if (stop_now) break;
  }

  for (size_t i = 0; i < stepped.size(); ++i)
    if (!best_values[i].empty()) stepped[i]->value = best_values[i];
  result.best_epoch = stopper.best_epoch();
  result.best_val_loss = stopper.best_loss();
  return result;
}

void scale_inplace(Tensor& t, double s) {
  for (size_t i = 0; i < t.size(); ++i) t[i] *= s;
}

}  // namespace

StageResult train_classifier(Encoder& enc, const std::vector<Sample>& train,
                             const std::vector<Sample>& val,
                             const TrainConfig& cfg) {
  if (cfg.stage != "classifier")
    throw ContractViolation("train_classifier got stage " + cfg.stage);
  std::vector<nn::Param*> params;
  enc.collect(params);
  std::vector<nn::Param*> zeroed = params;

  auto grad_one = [&](size_t i, double scale) {
    Tensor logits = enc.forward_logits(train[i].image, true);
    Tensor dlogits;
    const double loss = nn::softmax_ce(logits, train[i].label, &dlogits);
    scale_inplace(dlogits, scale);
    enc.backward_from_logits(dlogits);
    return loss;
  };
  auto val_one = [&](size_t i) {
    return nn::softmax_ce(enc.forward_logits(val[i].image, false), val[i].label,
                          nullptr);
  };
  return run_stage(cfg, train.size(), val.size(), params, zeroed, grad_one,
                   val_one);
}

namespace {

std::vector<Tensor> tap_features(Encoder& enc, const std::vector<Sample>& set,
                                 bool deep) {
  std::vector<Tensor> out;
  out.reserve(set.size());
  for (const auto& s : set) {
    FeaturePair fp = enc.forward_features(s.image, false);
    out.push_back(deep ? std::move(fp.m0) : std::move(fp.m1));
  }
  return out;
}

}  // namespace

StageResult train_g1(Encoder& enc, DecoderPair& dec,
                     const std::vector<Sample>& train,
                     const std::vector<Sample>& val, const TrainConfig& cfg) {
  if (cfg.stage != "g1") throw ContractViolation("train_g1 got stage " + cfg.stage);
  const auto feat_train = tap_features(enc, train, false);
  const auto feat_val = tap_features(enc, val, false);

  std::vector<nn::Param*> params;
  dec.collect_tail(params);
  std::vector<nn::Param*> zeroed = params;

  auto grad_one = [&](size_t i, double scale) {
    Tensor recon = dec.reconstruct_from_penultimate(feat_train[i], true);
    Tensor dpred;
    const double loss = nn::mse(recon, train[i].image, &dpred);
    scale_inplace(dpred, scale);
    dec.backward_tail(dpred);
    return loss;
  };
  auto val_one = [&](size_t i) {
    return nn::mse(dec.reconstruct_from_penultimate(feat_val[i], false),
                   val[i].image, nullptr);
  };
  return run_stage(cfg, train.size(), val.size(), params, zeroed, grad_one,
                   val_one);
}

StageResult train_g0(Encoder& enc, DecoderPair& dec,
                     const std::vector<Sample>& train,
                     const std::vector<Sample>& val, const TrainConfig& cfg,
                     bool freeze) {
  if (cfg.stage != "g0") throw ContractViolation("train_g0 got stage " + cfg.stage);
  const auto feat_train = tap_features(enc, train, true);
  const auto feat_val = tap_features(enc, val, true);

  std::vector<nn::Param*> head, tail;
  dec.collect_head(head);
  dec.collect_tail(tail);

  std::vector<Tensor> tail_before;
  tail_before.reserve(tail.size());
  for (auto* p : tail) tail_before.push_back(p->value);

  std::vector<nn::Param*> stepped = head;
  if (!freeze) stepped.insert(stepped.end(), tail.begin(), tail.end());
  std::vector<nn::Param*> zeroed = head;
  zeroed.insert(zeroed.end(), tail.begin(), tail.end());

  auto grad_one = [&](size_t i, double scale) {
    Tensor recon = dec.reconstruct_from_final(feat_train[i], true);
    Tensor dpred;
    const double loss = nn::mse(recon, train[i].image, &dpred);
    scale_inplace(dpred, scale);
    dec.backward_from_final(dpred);
    return loss;
  };
  auto val_one = [&](size_t i) {
    return nn::mse(dec.reconstruct_from_final(feat_val[i], false), val[i].image,
                   nullptr);
  };
  StageResult result = run_stage(cfg, train.size(), val.size(), stepped, zeroed,
                                 grad_one, val_one);

  double drift = 0.0;
  for (size_t i = 0; i < tail.size(); ++i)
    for (size_t j = 0; j < tail[i]->value.size(); ++j)
      drift = std::max(drift,
                       std::fabs(tail[i]->value[j] - tail_before[i][j]));
  result.freeze_report = drift;
  if (freeze && drift != 0.0)
    throw ComputeError("shared tail drifted during a frozen g0 stage");
  return result;
}

double accuracy(Encoder& enc, const std::vector<Sample>& samples) {
  if (samples.empty()) throw ContractViolation("accuracy over an empty set");
  int hits = 0;
  for (const auto& s : samples) {
    const Tensor p = enc.predict(s.image);
    size_t arg = 0;
    for (size_t i = 1; i < p.size(); ++i)
      if (p[i] > p[arg]) arg = i;
    hits += static_cast<int>(arg) == s.label ? 1 : 0;
  }
  return static_cast<double>(hits) / static_cast<double>(samples.size());
}

}  // namespace drue
