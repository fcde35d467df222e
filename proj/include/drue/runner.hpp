#pragma once

#include <memory>
#include <string>
#include <vector>

#include "drue/config.hpp"

namespace drue {

// Advisory lock on <run_dir>/.lock. A second concurrent holder throws
// ComputeError; the lock dies with the process, so stale files are harmless.
class RunLock {
 public:
  explicit RunLock(const std::string& run_dir);
  ~RunLock();
  RunLock(const RunLock&) = delete;
  RunLock& operator=(const RunLock&) = delete;

 private:
  int fd_ = -1;
};

// A model pair restored from the most advanced checkpoint available for one
// seed, with bundle flags matching the stage that produced it.
struct LoadedModel {
  std::unique_ptr<Encoder> enc;
  std::unique_ptr<DecoderPair> dec;
  ModelBundle bundle;
  std::string stage;           // checkpoint stage string
  double freeze_report = 0.0;  // from the checkpoint meta
  uint64_t seed = 0;
};

// Commands. Each validates the config, takes the run-directory lock, checks
// its prerequisites (DependencyError names the command to run first) and is
// idempotent: rerunning with the same config rewrites identical artifacts.
void cmd_prepare(const RunConfig& cfg);
void cmd_train(const RunConfig& cfg, const std::string& stage);  // all|classifier|g1|g0
void cmd_score(const RunConfig& cfg, const std::string& method,
               const std::string& dataset);
void cmd_evaluate(const RunConfig& cfg);
void cmd_ablate(const RunConfig& cfg);
// scales: override for the remainder-slope probe; empty keeps theory.scales.
void cmd_theory(const RunConfig& cfg, const std::vector<double>& scales);
void cmd_plot(const RunConfig& cfg);

// Exposed for tests and the theory/plot paths.
LoadedModel load_model(const RunConfig& cfg, uint64_t seed,
                       const std::string& min_stage);
std::string checkpoint_path(const RunConfig& cfg, const std::string& stage,
                            uint64_t seed);

}  // namespace drue
