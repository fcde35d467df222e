#include "drue/runner.hpp"

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <json.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "drue/checkpoint.hpp"
#include "drue/datasets.hpp"
#include "drue/errors.hpp"
#include "drue/figures.hpp"
#include "drue/image_io.hpp"
#include "drue/metrics.hpp"
#include "drue/rng.hpp"
#include "drue/theory.hpp"
#include "drue/training.hpp"
#include "drue/uncertainty.hpp"

namespace drue {

namespace fs = std::filesystem;

namespace {

using nlohmann::json;

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw ComputeError("cannot write " + path);
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ComputeError("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Validate, lock, and reconcile the config snapshot. Every command starts
// here; nothing touches the run directory before the checks pass.
std::unique_ptr<RunLock> open_run(const RunConfig& cfg) {
  cfg.validate();
  fs::create_directories(cfg.paths.run_dir);
  auto lock = std::make_unique<RunLock>(cfg.paths.run_dir);

  const fs::path snap = fs::path(cfg.paths.run_dir) / "config.snapshot.json";
  if (fs::exists(snap)) {
    RunConfig prev = load_run_config(snap.string());
    if (prev.config_hash() != cfg.config_hash())
      throw ConfigError(
          "config: run directory " + cfg.paths.run_dir +
          " was created from a different config (snapshot hash " +
          prev.config_hash() + ", current " + cfg.config_hash() +
          "); pick a fresh run directory or restore the config");
  }
  write_text(snap.string(), cfg.canonical_json());
  return lock;
}

// Numeric work always recomputes the splits from the config; the raster
// copies written by the prepare step are the inspection artifact and the
// dependency gate, not the source of truth (PNG quantizes to 8 bits).
SplitSet load_splits(const RunConfig& cfg, bool require_prepared) {
  if (require_prepared) {
    const fs::path m =
        fs::path(cfg.paths.run_dir) / "data" / "manifest_train.csv";
    if (!fs::exists(m))
      throw DependencyError("dataset missing under " + cfg.paths.run_dir +
                            " (run `drue prepare` first)");
  }
  return generate_synthetic(cfg.dataset.n_per_class, cfg.dataset.image_size,
                            cfg.dataset.seed);
}

std::vector<Rung> make_ladder(const RunConfig& cfg,
                              const std::vector<Sample>& test) {
  std::vector<Corruption> kinds;
  for (const auto& k : cfg.dataset.ladder_kinds)
    kinds.push_back(corruption_from_string(k));
  return build_ladder(test, kinds, cfg.dataset.ladder_severities,
                      cfg.dataset.seed);
}

std::vector<nn::Param*> all_params(Encoder& enc, DecoderPair& dec) {
  std::vector<nn::Param*> ps;
  enc.collect(ps);
  dec.collect_tail(ps);
  dec.collect_head(ps);
  return ps;
}

CheckpointMeta make_meta(const RunConfig& cfg, const std::string& stage,
                         uint64_t seed, double freeze_report,
                         DecoderPair& dec) {
  CheckpointMeta m;
  m.stage = stage;
  m.seed = seed;
  m.model_config = cfg.encoder_config().canonical_json();
  m.arch_hash = fnv1a64(m.model_config);
  m.freeze_report = freeze_report;
  m.shared_manifest = dec.shared_manifest();
  return m;
}

int stage_rank(const std::string& stage) {
  if (stage == "classifier") return 0;
  if (stage == "g1") return 1;
  if (stage == "g0" || stage == "g0_scratch") return 2;
  throw ContractViolation("unknown training stage \"" + stage + "\"");
}

void check_arch(const RunConfig& cfg, const CheckpointMeta& meta,
                const std::string& path) {
  if (meta.arch_hash != fnv1a64(cfg.encoder_config().canonical_json()))
    throw ConfigError("config: checkpoint " + path +
                      " was trained with a different model section");
}

void report_stage(uint64_t seed, const std::string& stage,
                  const StageResult& res, bool with_drift) {
  std::printf("train seed=%llu stage=%s epochs=%zu best_epoch=%d "
              "best_val_loss=%.6g",
              static_cast<unsigned long long>(seed), stage.c_str(),
              res.history.size(), res.best_epoch, res.best_val_loss);
  if (with_drift) std::printf(" tail_drift=%.3g", res.freeze_report);
  std::printf("\n");
  std::fflush(stdout);
}

std::string external_name(const std::string& dir) {
  fs::path p(dir);
  std::string name = p.filename().string();
  if (name.empty()) name = p.parent_path().filename().string();
  if (name.empty())
    throw ConfigError("config: cannot derive a name from external dir \"" +
                      dir + "\"");
  return name;
}

struct ResolvedSet {
  std::vector<Sample> samples;
  bool is_ood = false;
};

// id_test, any ladder rung by name, or a prepared external set.
ResolvedSet resolve_dataset(const RunConfig& cfg, const SplitSet& set,
                            const std::string& name) {
  if (name == "id_test") return {set.test, false};
  std::string known = "id_test";
  for (const Rung& r : make_ladder(cfg, set.test)) {
    if (r.name == name) return {r.samples, true};
    known += ", " + r.name;
  }
  for (const std::string& dir : cfg.dataset.external) {
    const std::string base = external_name(dir);
    if (base == name) {
      const fs::path sub =
          fs::path(cfg.paths.run_dir) / "data" / ("external_" + base);
      if (!fs::exists(sub))
        throw DependencyError("external set " + base +
                              " not prepared (run `drue prepare` first)");
      std::vector<std::string> warnings;
      auto samples =
          load_external(sub.string(), cfg.dataset.image_size, &warnings);
      for (const auto& w : warnings) std::cerr << "warning: " << w << "\n";
      return {std::move(samples), true};
    }
    known += ", " + base;
  }
  throw ConfigError("config: unknown dataset \"" + name + "\" (known: " +
                    known + ")");
}

json metric_block(const std::vector<double>& values) {
  const MeanStd ms = mean_std(values);
  json j;
  j["per_seed"] = values;
  j["mean"] = ms.mean;
  j["std"] = ms.std;
  return j;
}

}  // namespace

RunLock::RunLock(const std::string& run_dir) {
  const std::string path = run_dir + "/.lock";
  fd_ = ::open(path.c_str(), O_CREAT | O_RDWR, 0644);
  if (fd_ < 0) throw ComputeError("cannot open lock file " + path);
  if (::flock(fd_, LOCK_EX | LOCK_NB) != 0) {
    ::close(fd_);
    fd_ = -1;
    throw ComputeError("run directory " + run_dir +
                       " is in use by another command");
  }
}

RunLock::~RunLock() {
  if (fd_ >= 0) {
    ::flock(fd_, LOCK_UN);
    ::close(fd_);
  }
}

std::string checkpoint_path(const RunConfig& cfg, const std::string& stage,
                            uint64_t seed) {
  char name[64];
  std::snprintf(name, sizeof name, "%s_seed%llu.ckpt", stage.c_str(),
                static_cast<unsigned long long>(seed));
  return (fs::path(cfg.paths.run_dir) / "checkpoints" / name).string();
}

LoadedModel load_model(const RunConfig& cfg, uint64_t seed,
                       const std::string& min_stage) {
  static const char* kOrder[3] = {"g0", "g1", "classifier"};
  std::string found;
  for (const char* stage : kOrder)
    if (fs::exists(checkpoint_path(cfg, stage, seed))) {
      found = stage;
      break;
    }
  if (found.empty() || stage_rank(found) < stage_rank(min_stage))
    throw DependencyError(
        "no stage " + min_stage + " checkpoint for seed " +
        std::to_string(seed) + " (run `drue train --stage " + min_stage +
        "` first)");

  const EncoderConfig eff = cfg.encoder_config();
  LoadedModel lm;
  lm.enc = std::make_unique<Encoder>(eff);
  lm.enc->init(seed);
  lm.dec = std::make_unique<DecoderPair>(eff, eff.act_kind());
  lm.dec->init(seed);
  auto params = all_params(*lm.enc, *lm.dec);
  const std::string path = checkpoint_path(cfg, found, seed);
  const CheckpointMeta meta = load_checkpoint(path, params);
  check_arch(cfg, meta, path);

  const int rank = stage_rank(found);
  lm.bundle = {lm.enc.get(), lm.dec.get(), true, rank >= 1, rank >= 2};
  lm.stage = found;
  lm.freeze_report = meta.freeze_report;
  lm.seed = seed;
  return lm;
}

void cmd_prepare(const RunConfig& cfg) {
  auto lock = open_run(cfg);
  const fs::path run(cfg.paths.run_dir);
  fs::create_directories(run / "data" / "images");

  SplitSet set = generate_synthetic(cfg.dataset.n_per_class,
                                    cfg.dataset.image_size, cfg.dataset.seed);
  auto dump_split = [&](const char* name, const std::vector<Sample>& ss) {
    std::vector<ManifestRow> rows;
    for (const Sample& s : ss) {
      const std::string rel = "data/images/" + s.id + ".png";
      save_png((run / rel).string(), s.image);
      rows.push_back({s.id, s.source, s.label, rel});
    }
    save_manifest(
        (run / "data" / ("manifest_" + std::string(name) + ".csv")).string(),
        rows);
    return rows.size();
  };
  const size_t n_train = dump_split("train", set.train);
  const size_t n_val = dump_split("val", set.val);
  const size_t n_test = dump_split("test", set.test);

  for (const std::string& dir : cfg.dataset.external) {
    const std::string name = external_name(dir);
    std::vector<std::string> warnings;
    auto samples = load_external(dir, cfg.dataset.image_size, &warnings);
    for (const auto& w : warnings) std::cerr << "warning: " << w << "\n";
    fs::create_directories(run / "data" / ("external_" + name));
    std::vector<ManifestRow> rows;
    for (const Sample& s : samples) {
      const std::string rel = "data/external_" + name + "/" + s.id + ".png";
      save_png((run / rel).string(), s.image);
      rows.push_back({s.id, s.source, s.label, rel});
    }
    save_manifest(
        (run / "data" / ("manifest_external_" + name + ".csv")).string(),
        rows);
    std::cout << "prepared external set " << name << ": " << rows.size()
              << " images\n";
  }

  std::cout << "prepared " << (n_train + n_val + n_test)
            << " synthetic images (train " << n_train << ", val " << n_val
            << ", test " << n_test << ") under " << (run / "data").string()
            << "\n";
}

void cmd_train(const RunConfig& cfg, const std::string& stage) {
  if (stage != "all" && stage != "classifier" && stage != "g1" &&
      stage != "g0")
    throw ConfigError("config: --stage must be all, classifier, g1 or g0");
  auto lock = open_run(cfg);
  const SplitSet set = load_splits(cfg, true);
  fs::create_directories(fs::path(cfg.paths.run_dir) / "checkpoints");

  const EncoderConfig eff = cfg.encoder_config();
  const bool run_cls = stage == "all" || stage == "classifier";
  const bool run_g1 = stage == "all" || stage == "g1";
  const bool run_g0 = stage == "all" || stage == "g0";

  for (int i = 0; i < cfg.eval.n_seeds; ++i) {
    const uint64_t seed = cfg.model_seed(i);
    Encoder enc(eff);
    enc.init(seed);
    DecoderPair dec(eff, eff.act_kind());
    dec.init(seed);
    auto params = all_params(enc, dec);

    auto restore = [&](const char* prev_stage) {
      const std::string path = checkpoint_path(cfg, prev_stage, seed);
      if (!fs::exists(path))
        throw DependencyError("checkpoint " + path +
                              " missing (run `drue train --stage " +
                              prev_stage + "` first)");
      check_arch(cfg, load_checkpoint(path, params), path);
    };

    if (run_cls) {
      const StageResult res = train_classifier(
          enc, set.train, set.val, cfg.stage_config("classifier", seed));
      save_checkpoint(checkpoint_path(cfg, "classifier", seed),
                      make_meta(cfg, "classifier", seed, 0.0, dec), params);
      report_stage(seed, "classifier", res, false);
    }
    if (run_g1) {
      if (!run_cls) restore("classifier");
      const StageResult res = train_g1(enc, dec, set.train, set.val,
                                       cfg.stage_config("g1", seed));
      save_checkpoint(checkpoint_path(cfg, "g1", seed),
                      make_meta(cfg, "g1", seed, 0.0, dec), params);
      report_stage(seed, "g1", res, false);
    }
    if (run_g0) {
      if (!run_g1) restore("g1");
      const StageResult res =
          train_g0(enc, dec, set.train, set.val, cfg.stage_config("g0", seed),
                   cfg.training.freeze);
      save_checkpoint(checkpoint_path(cfg, "g0", seed),
                      make_meta(cfg, "g0", seed, res.freeze_report, dec),
                      params);
      report_stage(seed, "g0", res, true);
    }
  }
}

void cmd_score(const RunConfig& cfg, const std::string& method,
               const std::string& dataset) {
  MethodSpec spec;
  spec.kind = method_from_string(method);
  spec.mc_passes = cfg.eval.mc_passes;
  spec.mc_rate = cfg.eval.mc_dropout_rate;
  const bool needs_decoders =
      spec.kind == MethodKind::drue || spec.kind == MethodKind::rue;
  const std::string min_stage = needs_decoders ? "g0" : "classifier";

  auto lock = open_run(cfg);
  const SplitSet set = load_splits(cfg, true);
  const ResolvedSet resolved = resolve_dataset(cfg, set, dataset);
  if (resolved.samples.empty())
    throw ConfigError("config: dataset \"" + dataset + "\" holds no samples");

  fs::create_directories(fs::path(cfg.paths.run_dir) / "scores");
  for (int i = 0; i < cfg.eval.n_seeds; ++i) {
    const uint64_t seed = cfg.model_seed(i);
    LoadedModel lm = load_model(cfg, seed, min_stage);
    std::vector<ScoreRecord> records;
    for (const Sample& s : resolved.samples)
      records.push_back({s.id, dataset, spec.label(),
                         score_sample(lm.bundle, spec, s, seed),
                         resolved.is_ood});
    char name[160];
    std::snprintf(name, sizeof name, "%s_%s_seed%llu.csv",
                  spec.label().c_str(), dataset.c_str(),
                  static_cast<unsigned long long>(seed));
    const fs::path out = fs::path(cfg.paths.run_dir) / "scores" / name;
    write_score_records(out.string(), records);
    std::cout << "scored " << records.size() << " samples -> "
              << out.string() << "\n";
  }
}

void cmd_evaluate(const RunConfig& cfg) {
  auto lock = open_run(cfg);
  const SplitSet set = load_splits(cfg, true);
  const std::vector<Rung> ladder = make_ladder(cfg, set.test);

  std::vector<LoadedModel> models;
  std::vector<SeedBundle> bundles;
  for (int i = 0; i < cfg.eval.n_seeds; ++i)
    models.push_back(load_model(cfg, cfg.model_seed(i), "classifier"));
  for (LoadedModel& lm : models) bundles.push_back({lm.seed, lm.bundle});

  const fs::path eval_dir = fs::path(cfg.paths.run_dir) / "eval";
  fs::create_directories(eval_dir);

  const EvalReport report =
      run_ood_eval(bundles, ladder, method_specs(cfg), set.test,
                   cfg.config_hash(), eval_dir.string());
  write_text((eval_dir / "report.json").string(), report.to_json());

  json cm;
  cm["schema_version"] = 1;
  cm["config_hash"] = cfg.config_hash();
  cm["per_seed"] = json::array();
  std::vector<double> accs, aucs;
  for (LoadedModel& lm : models) {
    const ClassifierMetrics m = classifier_metrics(lm.bundle, set.test);
    json row;
    row["seed"] = lm.seed;
    row["accuracy"] = m.accuracy;
    row["auc"] = m.auc;
    cm["per_seed"].push_back(row);
    accs.push_back(m.accuracy);
    aucs.push_back(m.auc);
  }
  cm["accuracy"] = metric_block(accs);
  cm["auc"] = metric_block(aucs);
  write_text((eval_dir / "classifier_metrics.json").string(),
             cm.dump(2) + "\n");

  std::vector<std::string> score_files;
  for (const LoadedModel& lm : models) {
    char name[64];
    std::snprintf(name, sizeof name, "scores_seed%llu.csv",
                  static_cast<unsigned long long>(lm.seed));
    score_files.push_back((eval_dir / name).string());
  }
  const HistogramExport hist =
      export_distributions(score_files, cfg.eval.histogram_bins);
  write_text((eval_dir / "histograms.json").string(), hist.to_json());

  std::cout << "evaluate: " << report.cells.size() << " cells over "
            << ladder.size() << " rungs, " << report.method_errors.size()
            << " method errors -> " << (eval_dir / "report.json").string()
            << "\n";
  for (const MethodError& e : report.method_errors)
    std::cout << "evaluate: method " << e.method << " skipped: " << e.message
              << "\n";
}

void cmd_ablate(const RunConfig& cfg) {
  auto lock = open_run(cfg);
  const SplitSet set = load_splits(cfg, true);
  const std::vector<Rung> ladder = make_ladder(cfg, set.test);
  const EncoderConfig eff = cfg.encoder_config();

  struct SeedModels {
    LoadedModel staged;
    std::unique_ptr<DecoderPair> scratch;
    double scratch_report = 0.0;
  };
  std::vector<SeedModels> owned;
  fs::create_directories(fs::path(cfg.paths.run_dir) / "checkpoints");

  for (int i = 0; i < cfg.eval.n_seeds; ++i) {
    const uint64_t seed = cfg.model_seed(i);
    SeedModels sm;
    sm.staged = load_model(cfg, seed, "g0");
    sm.scratch = std::make_unique<DecoderPair>(eff, eff.act_kind());
    sm.scratch->init(seed);
    std::vector<nn::Param*> sp;
    sm.scratch->collect_tail(sp);
    sm.scratch->collect_head(sp);

    const std::string spath = checkpoint_path(cfg, "scratch", seed);
    if (fs::exists(spath)) {
      const CheckpointMeta meta = load_checkpoint(spath, sp);
      check_arch(cfg, meta, spath);
      sm.scratch_report = meta.freeze_report;
    } else {
      // Joint head-plus-tail training from a fresh decoder init, the
      // no-freeze single-decoder row of the comparison.
      const StageResult res =
          train_g0(*sm.staged.enc, *sm.scratch, set.train, set.val,
                   cfg.stage_config("g0", seed), /*freeze=*/false);
      sm.scratch_report = res.freeze_report;
      CheckpointMeta meta = make_meta(cfg, "g0_scratch", seed,
                                      res.freeze_report, *sm.scratch);
      save_checkpoint(spath, meta, sp);
      report_stage(seed, "g0_scratch", res, true);
    }
    owned.push_back(std::move(sm));
  }

  std::vector<AblationSeedModels> models;
  for (SeedModels& sm : owned)
    models.push_back({sm.staged.seed, sm.staged.enc.get(),
                      sm.staged.dec.get(), sm.scratch.get(),
                      sm.staged.freeze_report, sm.scratch_report});

  const AblationTable table =
      run_ablation(models, ladder, set.test, cfg.config_hash());
  const fs::path out_dir = fs::path(cfg.paths.run_dir) / "ablation";
  fs::create_directories(out_dir);
  write_text((out_dir / "ablation.json").string(), table.to_json());

  for (const AblationRow& row : table.rows)
    std::printf("ablation %-22s auc %.4f +/- %.4f  aupr %.4f +/- %.4f\n",
                row.name.c_str(), row.auc.mean, row.auc.std, row.aupr.mean,
                row.aupr.std);
  std::fflush(stdout);
}

void cmd_theory(const RunConfig& cfg, const std::vector<double>& scales) {
  RunConfig eff_cfg = cfg;
  if (!scales.empty()) eff_cfg.theory.scales = scales;
  auto lock = open_run(eff_cfg);
  const SplitSet set = load_splits(eff_cfg, true);
  LoadedModel lm = load_model(eff_cfg, eff_cfg.model_seed(0), "g0");

  // Remainder-slope probe runs on a softplus twin of the decoder: the fit
  // needs a twice-differentiable map, which relu is not.
  EncoderConfig smooth_cfg = eff_cfg.encoder_config();
  smooth_cfg.act = "softplus";
  DecoderPair smooth(smooth_cfg, nn::Act::softplus);
  smooth.init(mix_seed(eff_cfg.model_seed(0), "theory"));

  const Sample& probe_sample = set.test.front();
  const FeaturePair feats = lm.enc->forward_features(probe_sample.image);
  Tensor dz(feats.m1.shape());
  Rng rng(mix_seed(eff_cfg.dataset.seed, "theory:dz"));
  for (size_t i = 0; i < dz.size(); ++i) dz[i] = rng.normal(0.0, 1.0);

  DiffMap smooth_map = tail_map(smooth);
  PerturbationProbe probe{feats.m1, dz, eff_cfg.theory.scales};
  const ScalingFit fit = residual_scaling_exponent(smooth_map, probe);

  // Closed-form cross-check: elementwise square at z=1, dz=1, s=0.1 leaves
  // a relative remainder of exactly 0.01/0.21.
  DiffMap square;
  square.f = [](const Tensor& t) {
    Tensor out(t.shape());
    for (size_t i = 0; i < t.size(); ++i) out[i] = t[i] * t[i];
    return out;
  };
  square.jvp = [](const Tensor& t, const Tensor& d) {
    Tensor out(t.shape());
    for (size_t i = 0; i < t.size(); ++i) out[i] = 2.0 * t[i] * d[i];
    return out;
  };
  square.jvp_method = "analytic-forward";
  Tensor one({1});
  one.fill(1.0);
  const double toy_residual = taylor_residual(square, one, one, 0.1);

  json doc;
  doc["schema_version"] = 1;
  doc["config_hash"] = eff_cfg.config_hash();
  doc["probe_sample"] = probe_sample.id;
  doc["slope_fit"]["scales"] = eff_cfg.theory.scales;
  doc["slope_fit"]["jvp_method"] = fit.jvp_method;
  doc["slope_fit"]["exact"] = fit.exact;
  doc["slope_fit"]["slope"] = fit.slope;
  doc["slope_fit"]["points"] = json::array();
  for (const ProbePoint& p : fit.points) {
    json row;
    row["scale"] = p.scale;
    row["abs_remainder"] = p.abs_remainder;
    row["relative_residual"] = p.relative_residual;
    doc["slope_fit"]["points"].push_back(row);
  }
  doc["slope_fit"]["warnings"] = fit.warnings;
  doc["quadratic_toy"]["scale"] = 0.1;
  doc["quadratic_toy"]["residual"] = toy_residual;
  doc["quadratic_toy"]["target"] = 0.01 / 0.21;

  doc["gap_sweeps"] = json::array();
  const size_t n_sweep = std::min<size_t>(3, set.test.size());
  for (size_t s = 0; s < n_sweep; ++s) {
    const Sample& sample = set.test[s];
    json sweep;
    sweep["sample_id"] = sample.id;
    sweep["points"] = json::array();
    for (double scale : eff_cfg.theory.gap_scales) {
      const JvpGapResult r =
          drue_vs_jvp_check(sample.image, lm.bundle, scale);
      json row;
      row["dz_scale"] = scale;
      row["u_d"] = r.u_d;
      row["jvp_estimate"] = r.jvp_estimate;
      row["relative_gap"] = r.relative_gap;
      sweep["points"].push_back(row);
    }
    doc["gap_sweeps"].push_back(sweep);
  }

  const fs::path out_dir = fs::path(eff_cfg.paths.run_dir) / "theory";
  fs::create_directories(out_dir);
  write_text((out_dir / "theory.json").string(), doc.dump(2) + "\n");

  std::printf("theory: slope=%.4f (%s, %zu points), toy residual %.9g, "
              "%zu gap sweeps -> %s\n",
              fit.slope, fit.jvp_method.c_str(), fit.points.size(),
              toy_residual, n_sweep,
              (out_dir / "theory.json").string().c_str());
  std::fflush(stdout);
}

void cmd_plot(const RunConfig& cfg) {
  auto lock = open_run(cfg);
  const fs::path run(cfg.paths.run_dir);
  const fs::path report_path = run / "eval" / "report.json";
  const fs::path hist_path = run / "eval" / "histograms.json";
  if (!fs::exists(report_path) || !fs::exists(hist_path))
    throw DependencyError("evaluation artifacts missing under " +
                          (run / "eval").string() +
                          " (run `drue evaluate` first)");

  const fs::path fig_dir = run / "figures";
  fs::create_directories(fig_dir);
  figure_heat_table(read_text(report_path.string()),
                    (fig_dir / "heat_table.png").string());
  const auto panels = figure_distributions(read_text(hist_path.string()),
                                           fig_dir.string());

  // Reconstruction strips for the first test image, clean and at the top
  // severity of each corruption kind, through the first seed's model.
  const SplitSet set = load_splits(cfg, true);
  LoadedModel lm = load_model(cfg, cfg.model_seed(0), "g0");

  struct Target {
    std::string tag;
    Tensor image;
  };
  std::vector<Target> targets;
  const Sample& base = set.test.front();
  targets.push_back({"clean", base.image});
  const double top_sev = cfg.dataset.ladder_severities.back();
  if (top_sev > 0.0)
    for (const auto& kind_name : cfg.dataset.ladder_kinds) {
      char tag[96];
      std::snprintf(tag, sizeof tag, "%s@%.2f", kind_name.c_str(), top_sev);
      targets.push_back(
          {tag, apply_corruption(base.image, base.id,
                                 corruption_from_string(kind_name), top_sev,
                                 cfg.dataset.seed)});
    }

  size_t n_files = 1 + panels.size();
  for (const Target& t : targets) {
    const ReconPair recon = reconstruction_pair(t.image, lm.bundle);
    const UncertaintyMap map = uncertainty_map(t.image, lm.bundle);
    figure_panel_strip(t.image, recon.from_penultimate, recon.from_final,
                       map.norm, (fig_dir / ("panels_" + t.tag + ".png")).string());
    export_map(map.raw, map.norm, (fig_dir / ("map_" + t.tag + ".png")).string(),
               (fig_dir / ("map_" + t.tag + ".csv")).string());
    n_files += 3;
  }

  std::cout << "plot: wrote " << n_files << " files under "
            << fig_dir.string() << "\n";
}

}  // namespace drue
