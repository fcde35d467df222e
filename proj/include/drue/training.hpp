#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "drue/backbone.hpp"
#include "drue/datasets.hpp"
#include "drue/decoders.hpp"

namespace drue {

struct TrainConfig {
  double learning_rate = 1e-5;
  int batch_size = 8;
  int max_epochs = 50;
  int patience = 5;
  uint64_t seed = 0;
  std::string stage;  // classifier | g1 | g0

  void validate() const;
};

struct EpochRecord {
  int epoch;
  double train_loss;
  double val_loss;
};

struct StageResult {
  std::vector<EpochRecord> history;
  int best_epoch = -1;
  double best_val_loss = 0.0;
  // Max absolute drift of the shared tail across the g0 stage.
  double freeze_report = 0.0;
};

// Stops once val loss has not improved for `patience` consecutive epochs.
class EarlyStopper {
 public:
  explicit EarlyStopper(int patience);
  bool update(double val_loss);  // true = stop now
  bool improved() const { return improved_; }
  int best_epoch() const { return best_epoch_; }
  double best_loss() const { return best_; }

 private:
  int patience_;
  int epoch_ = -1;
  int best_epoch_ = -1;
  int since_best_ = 0;
  double best_;
  bool improved_ = false;
};

// Each stage steps exactly its own parameter set and restores the
// best-validation epoch before returning. Divergence (non-finite loss)
// aborts with ComputeError.
StageResult train_classifier(Encoder& enc, const std::vector<Sample>& train,
                             const std::vector<Sample>& val,
                             const TrainConfig& cfg);

// Shallow-tap decoder stage: encoder frozen, tail + output layers learn to
// reconstruct the input from m1.
StageResult train_g1(Encoder& enc, DecoderPair& dec,
                     const std::vector<Sample>& train,
                     const std::vector<Sample>& val, const TrainConfig& cfg);

// Deep-tap stage: g0 head learns to reconstruct through the tail; the tail
// itself moves only when freeze is off.
StageResult train_g0(Encoder& enc, DecoderPair& dec,
                     const std::vector<Sample>& train,
                     const std::vector<Sample>& val, const TrainConfig& cfg,
                     bool freeze);

double accuracy(Encoder& enc, const std::vector<Sample>& samples);

}  // namespace drue
