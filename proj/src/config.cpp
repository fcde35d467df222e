#include "drue/config.hpp"

#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <initializer_list>
#include <set>
#include <sstream>

#include "drue/datasets.hpp"
#include "drue/errors.hpp"
#include "drue/rng.hpp"

namespace drue {

namespace {

using nlohmann::json;

[[noreturn]] void bad(const std::string& where, const std::string& what) {
  throw ConfigError("config: " + where + ": " + what);
}

void check_keys(const json& obj, const std::string& where,
                std::initializer_list<const char*> allowed) {
  std::set<std::string> ok(allowed.begin(), allowed.end());
  for (auto it = obj.begin(); it != obj.end(); ++it)
    if (!ok.count(it.key())) bad(where, "unknown key \"" + it.key() + "\"");
}

const json* section(const json& root, const char* name) {
  auto it = root.find(name);
  if (it == root.end()) return nullptr;
  if (!it->is_object()) bad(name, "expected an object");
  return &*it;
}

void read_int(const json& obj, const std::string& where, const char* key,
              int& out) {
  auto it = obj.find(key);
  if (it == obj.end()) return;
  if (!it->is_number_integer()) bad(where + "." + key, "expected an integer");
  out = it->get<int>();
}

void read_u64(const json& obj, const std::string& where, const char* key,
              uint64_t& out) {
  auto it = obj.find(key);
  if (it == obj.end()) return;
  if (!(it->is_number_unsigned() ||
        (it->is_number_integer() && it->get<int64_t>() >= 0)))
    bad(where + "." + key, "expected a non-negative integer");
  out = it->get<uint64_t>();
}

void read_double(const json& obj, const std::string& where, const char* key,
                 double& out) {
  auto it = obj.find(key);
  if (it == obj.end()) return;
  if (!it->is_number()) bad(where + "." + key, "expected a number");
  out = it->get<double>();
}

void read_bool(const json& obj, const std::string& where, const char* key,
               bool& out) {
  auto it = obj.find(key);
  if (it == obj.end()) return;
  if (!it->is_boolean()) bad(where + "." + key, "expected a boolean");
  out = it->get<bool>();
}

void read_string(const json& obj, const std::string& where, const char* key,
                 std::string& out) {
  auto it = obj.find(key);
  if (it == obj.end()) return;
  if (!it->is_string()) bad(where + "." + key, "expected a string");
  out = it->get<std::string>();
}

void read_string_list(const json& obj, const std::string& where,
                      const char* key, std::vector<std::string>& out) {
  auto it = obj.find(key);
  if (it == obj.end()) return;
  if (!it->is_array()) bad(where + "." + key, "expected an array of strings");
  std::vector<std::string> v;
  for (const auto& e : *it) {
    if (!e.is_string()) bad(where + "." + key, "expected an array of strings");
    v.push_back(e.get<std::string>());
  }
  out = std::move(v);
}

void read_double_list(const json& obj, const std::string& where,
                      const char* key, std::vector<double>& out) {
  auto it = obj.find(key);
  if (it == obj.end()) return;
  if (!it->is_array()) bad(where + "." + key, "expected an array of numbers");
  std::vector<double> v;
  for (const auto& e : *it) {
    if (!e.is_number()) bad(where + "." + key, "expected an array of numbers");
    v.push_back(e.get<double>());
  }
  out = std::move(v);
}

void read_int_list(const json& obj, const std::string& where, const char* key,
                   std::vector<int>& out) {
  auto it = obj.find(key);
  if (it == obj.end()) return;
  if (!it->is_array()) bad(where + "." + key, "expected an array of integers");
  std::vector<int> v;
  for (const auto& e : *it) {
    if (!e.is_number_integer())
      bad(where + "." + key, "expected an array of integers");
    v.push_back(e.get<int>());
  }
  out = std::move(v);
}

void read_bool_list(const json& obj, const std::string& where, const char* key,
                    std::vector<bool>& out) {
  auto it = obj.find(key);
  if (it == obj.end()) return;
  if (!it->is_array()) bad(where + "." + key, "expected an array of booleans");
  std::vector<bool> v;
  for (const auto& e : *it) {
    if (!e.is_boolean())
      bad(where + "." + key, "expected an array of booleans");
    v.push_back(e.get<bool>());
  }
  out = std::move(v);
}

void parse_stage(const json& obj, const std::string& where, TrainConfig& out) {
  check_keys(obj, where,
             {"learning_rate", "batch_size", "max_epochs", "patience"});
  read_double(obj, where, "learning_rate", out.learning_rate);
  read_int(obj, where, "batch_size", out.batch_size);
  read_int(obj, where, "max_epochs", out.max_epochs);
  read_int(obj, where, "patience", out.patience);
}

json stage_json(const TrainConfig& t) {
  json j;
  j["learning_rate"] = t.learning_rate;
  j["batch_size"] = t.batch_size;
  j["max_epochs"] = t.max_epochs;
  j["patience"] = t.patience;
  return j;
}

json semantic_tree(const RunConfig& c) {
  json j;
  j["dataset"]["n_per_class"] = c.dataset.n_per_class;
  j["dataset"]["image_size"] = c.dataset.image_size;
  j["dataset"]["seed"] = c.dataset.seed;
  j["dataset"]["ladder_kinds"] = c.dataset.ladder_kinds;
  j["dataset"]["ladder_severities"] = c.dataset.ladder_severities;
  j["dataset"]["external"] = c.dataset.external;
  j["model"]["in_channels"] = c.model.in_channels;
  j["model"]["stem_channels"] = c.model.stem_channels;
  j["model"]["channels"] = c.model.channels;
  j["model"]["downsample"] = c.model.downsample;
  j["model"]["num_classes"] = c.model.num_classes;
  j["model"]["act"] = c.model.act;
  j["training"]["base_seed"] = c.training.base_seed;
  j["training"]["freeze"] = c.training.freeze;
  j["training"]["classifier"] = stage_json(c.training.classifier);
  j["training"]["g1"] = stage_json(c.training.g1);
  j["training"]["g0"] = stage_json(c.training.g0);
  j["eval"]["methods"] = c.eval.methods;
  j["eval"]["n_seeds"] = c.eval.n_seeds;
  j["eval"]["mc_passes"] = c.eval.mc_passes;
  j["eval"]["mc_dropout_rate"] = c.eval.mc_dropout_rate;
  j["eval"]["histogram_bins"] = c.eval.histogram_bins;
  return j;
}

}  // namespace

void RunConfig::validate() const {
  if (dataset.n_per_class < 1)
    throw ConfigError("config: dataset.n_per_class must be >= 1");
  if (dataset.image_size < 16)
    throw ConfigError("config: dataset.image_size must be >= 16");
  if (dataset.ladder_kinds.empty())
    throw ConfigError("config: dataset.ladder_kinds must not be empty");
  for (const auto& k : dataset.ladder_kinds)
    corruption_from_string(k);  // throws on unknown names
  if (dataset.ladder_severities.empty())
    throw ConfigError("config: dataset.ladder_severities must not be empty");
  double prev = -1.0;
  for (double s : dataset.ladder_severities) {
    if (s < 0.0 || s > 1.0)
      throw ConfigError("config: ladder severities must lie in [0, 1]");
    if (s <= prev)
      throw ConfigError(
          "config: ladder severities must be strictly increasing");
    prev = s;
  }

  EncoderConfig eff = model;
  eff.image_size = dataset.image_size;
  eff.validate();

  TrainConfig stages[3] = {training.classifier, training.g1, training.g0};
  const char* names[3] = {"classifier", "g1", "g0"};
  for (int i = 0; i < 3; ++i) {
    stages[i].stage = names[i];
    stages[i].validate();
  }

  if (eval.methods.empty())
    throw ConfigError("config: eval.methods must not be empty");
  std::set<std::string> seen;
  for (const auto& m : eval.methods) {
    method_from_string(m);  // throws on unknown names
    if (!seen.insert(m).second)
      throw ConfigError("config: eval.methods lists \"" + m + "\" twice");
  }
  if (eval.n_seeds < 1) throw ConfigError("config: eval.n_seeds must be >= 1");
  if (eval.mc_passes < 1)
    throw ConfigError("config: eval.mc_passes must be >= 1");
  if (eval.mc_dropout_rate < 0.0 || eval.mc_dropout_rate >= 1.0)
    throw ConfigError("config: eval.mc_dropout_rate must lie in [0, 1)");
  if (eval.histogram_bins < 1)
    throw ConfigError("config: eval.histogram_bins must be >= 1");

  if (theory.scales.size() < 3)
    throw ConfigError("config: theory.scales needs at least 3 values");
  prev = 0.0;
  for (size_t i = 0; i < theory.scales.size(); ++i) {
    double s = theory.scales[i];
    if (s <= 0.0) throw ConfigError("config: theory.scales must be positive");
    if (i > 0 && s >= prev)
      throw ConfigError(
          "config: theory.scales must be strictly decreasing");
    prev = s;
  }
  if (theory.scales.front() < 100.0 * theory.scales.back())
    throw ConfigError("config: theory.scales must span at least two decades");
  if (theory.gap_scales.empty())
    throw ConfigError("config: theory.gap_scales must not be empty");
  prev = 0.0;
  for (size_t i = 0; i < theory.gap_scales.size(); ++i) {
    double s = theory.gap_scales[i];
    if (s <= 0.0)
      throw ConfigError("config: theory.gap_scales must be positive");
    if (i > 0 && s >= prev)
      throw ConfigError(
          "config: theory.gap_scales must be strictly decreasing");
    prev = s;
  }

  if (paths.run_dir.empty())
    throw ConfigError("config: paths.run_dir must not be empty");
}

std::string RunConfig::canonical_json() const {
  json j = semantic_tree(*this);
  j["theory"]["scales"] = theory.scales;
  j["theory"]["gap_scales"] = theory.gap_scales;
  j["paths"]["run_dir"] = paths.run_dir;
  return j.dump(2) + "\n";
}

std::string RunConfig::semantic_json() const {
  return semantic_tree(*this).dump(2) + "\n";
}

std::string RunConfig::config_hash() const {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(fnv1a64(semantic_json())));
  return buf;
}

uint64_t RunConfig::model_seed(int index) const {
  if (index < 0) throw ContractViolation("model_seed index must be >= 0");
  return training.base_seed + static_cast<uint64_t>(index);
}

void RunConfig::override_seed(uint64_t s) {
  dataset.seed = s;
  training.base_seed = s;
}

EncoderConfig RunConfig::encoder_config() const {
  EncoderConfig eff = model;
  eff.image_size = dataset.image_size;
  return eff;
}

TrainConfig RunConfig::stage_config(const std::string& stage,
                                    uint64_t seed) const {
  TrainConfig t;
  if (stage == "classifier")
    t = training.classifier;
  else if (stage == "g1")
    t = training.g1;
  else if (stage == "g0")
    t = training.g0;
  else
    throw ConfigError("config: unknown training stage \"" + stage + "\"");
  t.stage = stage;
  t.seed = seed;
  return t;
}

RunConfig parse_run_config(const std::string& text,
                           const std::string& origin) {
  json root = json::parse(text, nullptr, false);
  if (root.is_discarded())
    throw ConfigError("config: " + origin + " is not valid JSON");
  if (!root.is_object())
    throw ConfigError("config: " + origin + " must hold a JSON object");
  check_keys(root, origin,
             {"dataset", "model", "training", "eval", "theory", "paths"});

  RunConfig c;
  if (const json* d = section(root, "dataset")) {
    check_keys(*d, "dataset",
               {"n_per_class", "image_size", "seed", "ladder_kinds",
                "ladder_severities", "external"});
    read_int(*d, "dataset", "n_per_class", c.dataset.n_per_class);
    read_int(*d, "dataset", "image_size", c.dataset.image_size);
    read_u64(*d, "dataset", "seed", c.dataset.seed);
    read_string_list(*d, "dataset", "ladder_kinds", c.dataset.ladder_kinds);
    read_double_list(*d, "dataset", "ladder_severities",
                     c.dataset.ladder_severities);
    read_string_list(*d, "dataset", "external", c.dataset.external);
  }
  if (const json* m = section(root, "model")) {
    check_keys(*m, "model",
               {"in_channels", "stem_channels", "channels", "downsample",
                "num_classes", "act"});
    read_int(*m, "model", "in_channels", c.model.in_channels);
    read_int(*m, "model", "stem_channels", c.model.stem_channels);
    read_int_list(*m, "model", "channels", c.model.channels);
    read_bool_list(*m, "model", "downsample", c.model.downsample);
    read_int(*m, "model", "num_classes", c.model.num_classes);
    read_string(*m, "model", "act", c.model.act);
  }
  if (const json* t = section(root, "training")) {
    check_keys(*t, "training",
               {"base_seed", "freeze", "classifier", "g1", "g0"});
    read_u64(*t, "training", "base_seed", c.training.base_seed);
    read_bool(*t, "training", "freeze", c.training.freeze);
    if (auto it = t->find("classifier"); it != t->end()) {
      if (!it->is_object()) bad("training.classifier", "expected an object");
      parse_stage(*it, "training.classifier", c.training.classifier);
    }
    if (auto it = t->find("g1"); it != t->end()) {
      if (!it->is_object()) bad("training.g1", "expected an object");
      parse_stage(*it, "training.g1", c.training.g1);
    }
    if (auto it = t->find("g0"); it != t->end()) {
      if (!it->is_object()) bad("training.g0", "expected an object");
      parse_stage(*it, "training.g0", c.training.g0);
    }
  }
  if (const json* e = section(root, "eval")) {
    check_keys(*e, "eval",
               {"methods", "n_seeds", "mc_passes", "mc_dropout_rate",
                "histogram_bins"});
    read_string_list(*e, "eval", "methods", c.eval.methods);
    read_int(*e, "eval", "n_seeds", c.eval.n_seeds);
    read_int(*e, "eval", "mc_passes", c.eval.mc_passes);
    read_double(*e, "eval", "mc_dropout_rate", c.eval.mc_dropout_rate);
    read_int(*e, "eval", "histogram_bins", c.eval.histogram_bins);
  }
  if (const json* t = section(root, "theory")) {
    check_keys(*t, "theory", {"scales", "gap_scales"});
    read_double_list(*t, "theory", "scales", c.theory.scales);
    read_double_list(*t, "theory", "gap_scales", c.theory.gap_scales);
  }
  if (const json* p = section(root, "paths")) {
    check_keys(*p, "paths", {"run_dir"});
    read_string(*p, "paths", "run_dir", c.paths.run_dir);
  }

  c.model.image_size = c.dataset.image_size;
  return c;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("config: cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_run_config(ss.str(), path);
}

std::vector<MethodSpec> method_specs(const RunConfig& cfg) {
  std::vector<MethodSpec> out;
  for (const auto& name : cfg.eval.methods) {
    MethodSpec spec;
    spec.kind = method_from_string(name);
    spec.mc_passes = cfg.eval.mc_passes;
    spec.mc_rate = cfg.eval.mc_dropout_rate;
    out.push_back(spec);
  }
  return out;
}

}  // namespace drue
