#include <CLI11.hpp>

#include <cstdint>
#include <cstdio>
#include <exception>
#include <string>
#include <vector>

#include "drue/config.hpp"
#include "drue/errors.hpp"
#include "drue/runner.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kConfigError = 2;
constexpr int kDependencyError = 3;
constexpr int kRuntimeError = 4;

int fail(const char* category, const std::string& message, int code) {
  // keep the whole error on one stderr line so scripts can parse it
  std::string flat = message;
  for (char& c : flat)
    if (c == '\n') c = ' ';
  std::fprintf(stderr, "error: %s: %s\n", category, flat.c_str());
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"dual-decoder reconstruction-gap uncertainty toolkit"};
  app.require_subcommand(1);
  // global flags may follow the subcommand
  app.fallthrough();

  std::string config_path = "configs/default.json";
  app.add_option("--config", config_path, "Run config JSON")
      ->capture_default_str();
  uint64_t seed_override = 0;
  bool has_seed = false;
  app.add_option("--seed", seed_override,
                 "Override the dataset and model base seed uniformly")
      ->each([&](const std::string&) { has_seed = true; });

  auto* prepare = app.add_subcommand(
      "prepare", "Generate the dataset images and manifests");
  auto* train =
      app.add_subcommand("train", "Train model stages for every seed");
  std::string stage = "all";
  train->add_option("--stage", stage, "all|classifier|g1|g0")
      ->capture_default_str();
  auto* score = app.add_subcommand(
      "score", "Score one dataset with one method, per seed");
  std::string method = "drue";
  std::string dataset = "id_test";
  score->add_option("--method", method, "drue|rue|entropy|mc_dropout")
      ->capture_default_str();
  score->add_option("--dataset", dataset, "id_test, a rung name, or an external set")
      ->capture_default_str();
  auto* evaluate = app.add_subcommand(
      "evaluate", "Score the shift ladder and write the report");
  auto* ablate = app.add_subcommand(
      "ablate", "Compare the four decoder configurations");
  auto* theory = app.add_subcommand(
      "theory", "Run the linearization probes on the trained model");
  std::vector<double> scales;
  theory->add_option("--scales", scales,
                     "Probe scales for the remainder fit (descending)");
  auto* plot = app.add_subcommand("plot", "Render figures from the artifacts");

  CLI11_PARSE(app, argc, argv);

  try {
    drue::RunConfig cfg = drue::load_run_config(config_path);
    if (has_seed) cfg.override_seed(seed_override);
    cfg.validate();

    if (prepare->parsed()) drue::cmd_prepare(cfg);
    if (train->parsed()) drue::cmd_train(cfg, stage);
    if (score->parsed()) drue::cmd_score(cfg, method, dataset);
    if (evaluate->parsed()) drue::cmd_evaluate(cfg);
    if (ablate->parsed()) drue::cmd_ablate(cfg);
    if (theory->parsed()) drue::cmd_theory(cfg, scales);
    if (plot->parsed()) drue::cmd_plot(cfg);
  } catch (const drue::ConfigError& e) {
    return fail("config", e.what(), kConfigError);
  } catch (const drue::DependencyError& e) {
    return fail("dependency", e.what(), kDependencyError);
  } catch (const std::exception& e) {
    return fail("runtime", e.what(), kRuntimeError);
  }
  return kOk;
}
