#include "drue/evaluation.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "drue/errors.hpp"
#include "drue/rng.hpp"

namespace drue {

namespace {

using nlohmann::json;

constexpr const char* kScoreHeader = "sample_id,dataset,method,score,is_ood";
constexpr const char* kIdDataset = "id_test";

std::string format_score(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

json summary_json(const MetricSummary& s) {
  json j;
  j["mean"] = s.mean;
  j["std"] = s.std;
  j["per_seed"] = s.per_seed;
  return j;
}

MetricSummary summarize(std::vector<double> per_seed) {
  MetricSummary s;
  MeanStd ms = mean_std(per_seed);
  s.per_seed = std::move(per_seed);
  s.mean = ms.mean;
  s.std = ms.std;
  for (double v : s.per_seed)
    if (!(v >= 0.0 && v <= 1.0))
      throw ComputeError("metric value " + std::to_string(v) +
                         " escaped [0,1]");
  return s;
}

json conventions_json() {
  json c;
  c["score_orientation"] = "higher = more uncertain";
  c["auc_ties"] = "half credit per tied pair (rank statistic)";
  c["aupr_positive_class"] = "ood";
  c["aupr_interpolation"] = "none (step-wise average precision)";
  c["std_convention"] = "population (divide by n)";
  return c;
}

}  // namespace

std::string MethodSpec::label() const {
  switch (kind) {
    case MethodKind::drue:
      return "drue";
    case MethodKind::rue:
      return "rue";
    case MethodKind::entropy:
      return "entropy";
    case MethodKind::mc_dropout:
      return "mc_dropout";
  }
  throw ContractViolation("MethodSpec: unknown kind");
}

MethodKind method_from_string(const std::string& name) {
  if (name == "drue") return MethodKind::drue;
  if (name == "rue") return MethodKind::rue;
  if (name == "entropy") return MethodKind::entropy;
  if (name == "mc_dropout") return MethodKind::mc_dropout;
  throw ConfigError("unknown uncertainty method: " + name);
}

void write_score_records(const std::string& path,
                         const std::vector<ScoreRecord>& records) {
  std::set<std::string> seen;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ComputeError("cannot open " + path + " for writing");
  out << kScoreHeader << "\n";
  for (const ScoreRecord& r : records) {
    if (!std::isfinite(r.score))
      throw ContractViolation("score record " + r.sample_id +
                              " has a non-finite score");
    const std::string key = r.sample_id + "\x1f" + r.dataset + "\x1f" + r.method;
    if (!seen.insert(key).second)
      throw ContractViolation("duplicate score record: " + r.sample_id + "/" +
                              r.dataset + "/" + r.method);
    out << r.sample_id << ',' << r.dataset << ',' << r.method << ','
        << format_score(r.score) << ',' << (r.is_ood ? 1 : 0) << "\n";
  }
  if (!out.good()) throw ComputeError("short write to " + path);
}

std::vector<ScoreRecord> read_score_records(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DependencyError("score file not found: " + path);
  std::string line;
  int lineno = 0;
  auto fail = [&](const std::string& msg) {
    throw ContractViolation(path + ":" + std::to_string(lineno) + ": " + msg);
  };
  if (!std::getline(in, line)) fail("empty file");
  lineno = 1;
  if (line != kScoreHeader) fail("bad header");

  std::vector<ScoreRecord> records;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) fail("blank line");
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (fields.size() != 5) fail("expected 5 fields, got " +
                                 std::to_string(fields.size()));
    ScoreRecord r;
    r.sample_id = fields[0];
    r.dataset = fields[1];
    r.method = fields[2];
    char* end = nullptr;
    r.score = std::strtod(fields[3].c_str(), &end);
    if (end == fields[3].c_str() || *end != '\0' || !std::isfinite(r.score))
      fail("bad score: " + fields[3]);
    if (fields[4] == "0")
      r.is_ood = false;
    else if (fields[4] == "1")
      r.is_ood = true;
    else
      fail("bad is_ood flag: " + fields[4]);
    records.push_back(std::move(r));
  }
  return records;
}

double score_sample(ModelBundle& bundle, const MethodSpec& method,
                    const Sample& sample, uint64_t eval_seed) {
  double score = 0.0;
  switch (method.kind) {
    case MethodKind::drue:
      score = drue_score(sample.image, bundle);
      break;
    case MethodKind::rue:
      score = rue_score(sample.image, bundle, method.tap);
      break;
    case MethodKind::entropy:
      if (!bundle.enc || !bundle.classifier_done)
        throw ConfigError("entropy: classifier stage not trained");
      score = entropy_score(bundle.enc->predict(sample.image));
      break;
    case MethodKind::mc_dropout:
      score = mc_dropout_score(sample.image, bundle, method.mc_passes,
                               method.mc_rate,
                               mix_seed(mix_seed(eval_seed, "mc"), sample.id));
      break;
  }
  if (!std::isfinite(score))
    throw ComputeError("non-finite score for sample " + sample.id);
  return score;
}

EvalReport run_ood_eval(std::vector<SeedBundle>& bundles,
                        const std::vector<Rung>& ladder,
                        const std::vector<MethodSpec>& methods,
                        const std::vector<Sample>& id_test,
                        const std::string& config_hash,
                        const std::string& out_dir) {
  if (bundles.empty()) throw ConfigError("run_ood_eval: no model seeds");
  if (id_test.empty()) throw ConfigError("run_ood_eval: empty ID test set");
  if (ladder.empty()) throw ConfigError("run_ood_eval: empty ladder");
  if (methods.empty()) throw ConfigError("run_ood_eval: no methods requested");

  EvalReport report;
  report.config_hash = config_hash;
  std::set<uint64_t> distinct;
  for (const SeedBundle& sb : bundles) {
    if (!distinct.insert(sb.seed).second)
      throw ConfigError("run_ood_eval: duplicate seed " +
                        std::to_string(sb.seed));
    report.seeds.push_back(sb.seed);
  }

  // seed -> records, in method-major deterministic order
  std::map<uint64_t, std::vector<ScoreRecord>> records;

  for (const MethodSpec& method : methods) {
    const std::string label = method.label();
    std::map<uint64_t, std::vector<ScoreRecord>> method_records;
    // per rung: per seed score lists
    std::vector<std::vector<std::vector<double>>> rung_scores(
        ladder.size(), std::vector<std::vector<double>>(bundles.size()));
    std::vector<std::vector<double>> id_scores(bundles.size());

    try {
      for (size_t b = 0; b < bundles.size(); ++b) {
        SeedBundle& sb = bundles[b];
        auto& recs = method_records[sb.seed];
        for (const Sample& s : id_test) {
          const double v = score_sample(sb.bundle, method, s, sb.seed);
          id_scores[b].push_back(v);
          recs.push_back({s.id, kIdDataset, label, v, false});
        }
        for (size_t r = 0; r < ladder.size(); ++r) {
          for (const Sample& s : ladder[r].samples) {
            const double v = score_sample(sb.bundle, method, s, sb.seed);
            rung_scores[r][b].push_back(v);
            recs.push_back({s.id, ladder[r].name, label, v, true});
          }
        }
      }
    } catch (const ConfigError& e) {
      report.method_errors.push_back({label, e.what()});
      continue;  // drop this method's partial records, others proceed
    }

    for (auto& [seed, recs] : method_records) {
      auto& dst = records[seed];
      dst.insert(dst.end(), recs.begin(), recs.end());
    }
    for (size_t r = 0; r < ladder.size(); ++r) {
      EvalCell cell;
      cell.dataset = ladder[r].name;
      cell.method = label;
      std::vector<double> aucs, auprs;
      for (size_t b = 0; b < bundles.size(); ++b) {
        aucs.push_back(auc(id_scores[b], rung_scores[r][b]));
        auprs.push_back(aupr(id_scores[b], rung_scores[r][b]));
      }
      cell.auc = summarize(std::move(aucs));
      cell.aupr = summarize(std::move(auprs));
      report.cells.push_back(std::move(cell));
    }
  }

  for (const SeedBundle& sb : bundles) {
    char name[64];
    std::snprintf(name, sizeof(name), "scores_seed%llu.csv",
                  static_cast<unsigned long long>(sb.seed));
    write_score_records(out_dir + "/" + name, records[sb.seed]);
  }
  return report;
}

std::string EvalReport::to_json() const {
  json j;
  j["schema_version"] = schema_version;
  j["config_hash"] = config_hash;
  j["seeds"] = seeds;
  j["id_dataset"] = kIdDataset;
  j["conventions"] = conventions_json();
  j["cells"] = json::array();
  for (const EvalCell& c : cells) {
    json cj;
    cj["dataset"] = c.dataset;
    cj["method"] = c.method;
    cj["auc"] = summary_json(c.auc);
    cj["aupr"] = summary_json(c.aupr);
    j["cells"].push_back(cj);
  }
  j["method_errors"] = json::array();
  for (const MethodError& e : method_errors) {
    json ej;
    ej["method"] = e.method;
    ej["message"] = e.message;
    j["method_errors"].push_back(ej);
  }
  return j.dump(2) + "\n";
}

ClassifierMetrics classifier_metrics(ModelBundle& bundle,
                                     const std::vector<Sample>& test) {
  if (!bundle.enc || !bundle.classifier_done)
    throw ConfigError("classifier_metrics: classifier stage not trained");
  if (test.empty())
    throw ContractViolation("classifier_metrics: empty test set");

  int correct = 0;
  std::vector<double> p1_label0, p1_label1;
  for (const Sample& s : test) {
    if (s.label != 0 && s.label != 1)
      throw ContractViolation("classifier_metrics: unlabeled sample " + s.id);
    Tensor probs = bundle.enc->predict(s.image);
    const int pred = probs[1] > probs[0] ? 1 : 0;
    if (pred == s.label) ++correct;
    (s.label == 1 ? p1_label1 : p1_label0).push_back(probs[1]);
  }
  ClassifierMetrics m;
  m.accuracy = static_cast<double>(correct) / static_cast<double>(test.size());
  m.auc = auc(p1_label0, p1_label1);
  return m;
}

AblationTable run_ablation(std::vector<AblationSeedModels>& models,
                           const std::vector<Rung>& ladder,
                           const std::vector<Sample>& id_test,
                           const std::string& config_hash) {
  if (models.empty()) throw ConfigError("run_ablation: no model seeds");
  if (id_test.empty()) throw ConfigError("run_ablation: empty ID test set");

  AblationTable table;
  table.config_hash = config_hash;
  for (const auto& m : models) {
    if (!m.enc || !m.staged || !m.scratch)
      throw ConfigError("run_ablation: incomplete models for seed " +
                        std::to_string(m.seed));
    table.seeds.push_back(m.seed);
  }
  std::vector<const Rung*> pooled;
  for (const Rung& r : ladder)
    if (r.severity > 0.0) {
      pooled.push_back(&r);
      table.pooled_rungs.push_back(r.name);
    }
  if (pooled.empty())
    throw ConfigError("run_ablation: ladder has no positive-severity rung");

  struct RowPlan {
    const char* name;
    MethodSpec method;
    bool freeze;
    bool use_scratch;
    bool report_drift;
  };
  const RowPlan plans[4] = {
      {"final_tap_no_freeze", {MethodKind::rue, Tap::final}, false, true, true},
      {"penultimate_tap", {MethodKind::rue, Tap::penultimate}, false, false,
       false},
      {"final_tap_freeze", {MethodKind::rue, Tap::final}, true, false, true},
      {"dual_decoder", {MethodKind::drue, Tap::final}, true, false, true},
  };

  for (int row = 0; row < 4; ++row) {
    const RowPlan& plan = plans[row];
    AblationRow out;
    out.index = row;
    out.name = plan.name;
    out.method = plan.method.label();
    out.tap = plan.method.kind == MethodKind::drue
                  ? ""
                  : (plan.method.tap == Tap::final ? "final" : "penultimate");
    out.freeze = plan.freeze;

    std::vector<double> aucs, auprs;
    for (const AblationSeedModels& m : models) {
      ModelBundle bundle;
      bundle.enc = m.enc;
      bundle.dec = plan.use_scratch ? m.scratch : m.staged;
      bundle.classifier_done = true;
      bundle.g1_done = true;
      // Row 1 scores the shallow tap only; its deep head never trained.
      bundle.g0_done = plan.method.tap == Tap::final ||
                       plan.method.kind == MethodKind::drue;

      std::vector<double> id_scores, ood_scores;
      for (const Sample& s : id_test)
        id_scores.push_back(score_sample(bundle, plan.method, s, m.seed));
      for (const Rung* r : pooled)
        for (const Sample& s : r->samples)
          ood_scores.push_back(score_sample(bundle, plan.method, s, m.seed));
      aucs.push_back(auc(id_scores, ood_scores));
      auprs.push_back(aupr(id_scores, ood_scores));
      if (plan.report_drift)
        out.freeze_report_per_seed.push_back(
            plan.use_scratch ? m.scratch_freeze_report
                             : m.staged_freeze_report);
    }
    out.auc = summarize(std::move(aucs));
    out.aupr = summarize(std::move(auprs));
    table.rows.push_back(std::move(out));
  }
  return table;
}

std::string AblationTable::to_json() const {
  json j;
  j["schema_version"] = schema_version;
  j["config_hash"] = config_hash;
  j["seeds"] = seeds;
  j["pooled_rungs"] = pooled_rungs;
  j["conventions"] = conventions_json();
  j["rows"] = json::array();
  for (const AblationRow& r : rows) {
    json rj;
    rj["index"] = r.index;
    rj["name"] = r.name;
    rj["method"] = r.method;
    rj["tap"] = r.tap;
    rj["freeze"] = r.freeze;
    rj["auc"] = summary_json(r.auc);
    rj["aupr"] = summary_json(r.aupr);
    rj["freeze_report_per_seed"] = r.freeze_report_per_seed;
    j["rows"].push_back(rj);
  }
  return j.dump(2) + "\n";
}

HistogramExport export_distributions(
    const std::vector<std::string>& score_files, int bins) {
  if (bins < 1) throw ConfigError("export_distributions: bins must be >= 1");
  if (score_files.empty())
    throw ConfigError("export_distributions: no score files");

  std::map<std::pair<std::string, std::string>, std::vector<double>> groups;
  double lo = 0.0, hi = 0.0;
  bool any = false;
  for (const std::string& path : score_files) {
    for (const ScoreRecord& r : read_score_records(path)) {
      groups[{r.method, r.dataset}].push_back(r.score);
      if (!any) {
        lo = hi = r.score;
        any = true;
      } else {
        lo = std::min(lo, r.score);
        hi = std::max(hi, r.score);
      }
    }
  }
  if (!any) throw ContractViolation("export_distributions: no score records");
  if (hi <= lo) hi = lo + 1.0;  // degenerate single-value span

  HistogramExport out;
  out.bins = bins;
  out.edges.resize(static_cast<size_t>(bins) + 1);
  for (int i = 0; i <= bins; ++i)
    out.edges[i] = lo + (hi - lo) * static_cast<double>(i) /
                            static_cast<double>(bins);

  for (auto& [key, scores] : groups) {
    HistogramCell cell;
    cell.method = key.first;
    cell.dataset = key.second;
    cell.counts.assign(static_cast<size_t>(bins), 0);
    for (double v : scores) {
      int b = static_cast<int>((v - lo) / (hi - lo) *
                               static_cast<double>(bins));
      b = std::min(std::max(b, 0), bins - 1);  // top edge joins the last bin
      ++cell.counts[static_cast<size_t>(b)];
    }
    Quartiles q = quartiles(scores);
    cell.q1 = q.q1;
    cell.median = q.median;
    cell.q3 = q.q3;
    out.cells.push_back(std::move(cell));
  }
  return out;
}

std::string HistogramExport::to_json() const {
  json j;
  j["schema_version"] = schema_version;
  j["bins"] = bins;
  j["bin_edges"] = edges;
  j["cells"] = json::array();
  for (const HistogramCell& c : cells) {
    json cj;
    cj["method"] = c.method;
    cj["dataset"] = c.dataset;
    cj["counts"] = c.counts;
    cj["q1"] = c.q1;
    cj["median"] = c.median;
    cj["q3"] = c.q3;
    j["cells"].push_back(cj);
  }
  return j.dump(2) + "\n";
}

}  // namespace drue
