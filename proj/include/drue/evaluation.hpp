#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "drue/datasets.hpp"
#include "drue/metrics.hpp"
#include "drue/uncertainty.hpp"

namespace drue {

enum class MethodKind { drue, rue, entropy, mc_dropout };

struct MethodSpec {
  MethodKind kind = MethodKind::drue;
  Tap tap = Tap::final;  // rue only
  int mc_passes = 20;    // mc_dropout only
  double mc_rate = 0.3;  // mc_dropout only

  std::string label() const;
};

MethodKind method_from_string(const std::string& name);

// One scored sample. (sample_id, dataset, method) is unique within a run.
struct ScoreRecord {
  std::string sample_id;
  std::string dataset;
  std::string method;
  double score = 0.0;
  bool is_ood = false;
};

// CSV with header exactly: sample_id,dataset,method,score,is_ood
void write_score_records(const std::string& path,
                         const std::vector<ScoreRecord>& records);
std::vector<ScoreRecord> read_score_records(const std::string& path);

double score_sample(ModelBundle& bundle, const MethodSpec& method,
                    const Sample& sample, uint64_t eval_seed);

struct SeedBundle {
  uint64_t seed = 0;
  ModelBundle bundle;
};

struct MetricSummary {
  std::vector<double> per_seed;
  double mean = 0.0;
  double std = 0.0;
};

struct EvalCell {
  std::string dataset;  // rung name
  std::string method;
  MetricSummary auc;
  MetricSummary aupr;
};

struct MethodError {
  std::string method;
  std::string message;
};

struct EvalReport {
  int schema_version = 1;
  std::string config_hash;
  std::vector<uint64_t> seeds;
  std::vector<EvalCell> cells;
  std::vector<MethodError> method_errors;

  std::string to_json() const;  // deterministic byte-stable serialization
};

// Scores the ID test set and every ladder rung with each method and model
// seed, persists one ScoreRecord CSV per seed (scores_seed<S>.csv in out_dir),
// and aggregates AUC/AUPR per (rung, method) across seeds. A method whose
// required training stages are missing is reported in method_errors and the
// others proceed.
EvalReport run_ood_eval(std::vector<SeedBundle>& bundles,
                        const std::vector<Rung>& ladder,
                        const std::vector<MethodSpec>& methods,
                        const std::vector<Sample>& id_test,
                        const std::string& config_hash,
                        const std::string& out_dir);

struct ClassifierMetrics {
  double accuracy = 0.0;
  double auc = 0.0;
};

// Argmax accuracy plus the ranking AUC of the class-1 probability against the
// true binary label.
ClassifierMetrics classifier_metrics(ModelBundle& bundle,
                                     const std::vector<Sample>& test);

// Per-seed models for the decoder ablation. `staged` carries the shallow-tap
// tail with the deep head trained frozen; `scratch` trained head and tail
// jointly at the deep tap.
struct AblationSeedModels {
  uint64_t seed = 0;
  Encoder* enc = nullptr;
  DecoderPair* staged = nullptr;
  DecoderPair* scratch = nullptr;
  double staged_freeze_report = 0.0;
  double scratch_freeze_report = 0.0;
};

struct AblationRow {
  int index = 0;
  std::string name;
  std::string method;  // "rue" or "drue"
  std::string tap;     // "final", "penultimate", or "" when both taps are used
  bool freeze = false;
  MetricSummary auc;
  MetricSummary aupr;
  std::vector<double> freeze_report_per_seed;
};

struct AblationTable {
  int schema_version = 1;
  std::string config_hash;
  std::vector<uint64_t> seeds;
  std::vector<std::string> pooled_rungs;  // severity > 0 rungs, in ladder order
  std::vector<AblationRow> rows;

  std::string to_json() const;
};

// Four decoder configurations, each scored against the ID test set with the
// positive-severity rungs pooled as the shifted side.
AblationTable run_ablation(std::vector<AblationSeedModels>& models,
                           const std::vector<Rung>& ladder,
                           const std::vector<Sample>& id_test,
                           const std::string& config_hash);

struct HistogramCell {
  std::string method;
  std::string dataset;
  std::vector<long long> counts;
  double q1 = 0.0;
  double median = 0.0;
  double q3 = 0.0;
};

struct HistogramExport {
  int schema_version = 1;
  int bins = 0;
  std::vector<double> edges;  // bins + 1 values, shared by every cell
  std::vector<HistogramCell> cells;

  std::string to_json() const;
};

// Pools the given ScoreRecord files and bins each (method, dataset) group on
// one shared set of bin edges; quartiles come from the raw scores.
HistogramExport export_distributions(const std::vector<std::string>& score_files,
                                     int bins);

}  // namespace drue
