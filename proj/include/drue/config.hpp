#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "drue/backbone.hpp"
#include "drue/evaluation.hpp"
#include "drue/training.hpp"

namespace drue {

struct DatasetSection {
  int n_per_class = 200;
  int image_size = 64;
  uint64_t seed = 7;
  std::vector<std::string> ladder_kinds = {"gaussian_noise",
                                           "uniform_noise_replace"};
  std::vector<double> ladder_severities = {0.0, 0.25, 0.5, 0.75, 1.0};
  std::vector<std::string> external;  // extra image directories, scored only
};

struct TrainingSection {
  uint64_t base_seed = 100;
  bool freeze = true;
  TrainConfig classifier;
  TrainConfig g1;
  TrainConfig g0;
};

struct EvalSection {
  std::vector<std::string> methods = {"drue", "rue", "entropy", "mc_dropout"};
  int n_seeds = 3;
  int mc_passes = 20;
  double mc_dropout_rate = 0.3;
  int histogram_bins = 40;
};

struct TheorySection {
  std::vector<double> scales = {1e-1, 1e-2, 1e-3};
  std::vector<double> gap_scales = {1.0, 1e-1, 1e-2, 1e-3};
};

struct PathsSection {
  std::string run_dir = "runs/default";
};

// Whole-run settings. `model.image_size` always mirrors `dataset.image_size`;
// the model section has no key for it.
struct RunConfig {
  DatasetSection dataset;
  EncoderConfig model;
  TrainingSection training;
  EvalSection eval;
  TheorySection theory;
  PathsSection paths;

  void validate() const;  // throws ConfigError

  std::string canonical_json() const;  // every section, sorted keys
  // Canonical form minus paths and theory: the parts that shape datasets,
  // models and reports. The probe scales are diagnostic knobs.
  std::string semantic_json() const;
  // Hex digest of semantic_json(); paths or probe-scale changes never alter
  // the hash, so a moved run directory still matches its snapshot.
  std::string config_hash() const;

  uint64_t model_seed(int index) const;  // training.base_seed + index
  void override_seed(uint64_t s);        // dataset.seed and training.base_seed

  // `model` with image_size mirrored from the dataset section.
  EncoderConfig encoder_config() const;
  TrainConfig stage_config(const std::string& stage, uint64_t seed) const;
};

// Strict parse: unknown keys and wrong types throw ConfigError naming the
// offending path. Every key is optional; defaults above apply.
RunConfig parse_run_config(const std::string& text, const std::string& origin);
RunConfig load_run_config(const std::string& path);

// Eval-section methods resolved to specs (mc settings applied).
std::vector<MethodSpec> method_specs(const RunConfig& cfg);

}  // namespace drue
