#include <CLI11.hpp>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "evl/cli/commands.hpp"
#include "evl/cli/config.hpp"
#include "evl/error.hpp"

namespace {

constexpr int kUsageError = 1;
constexpr int kRuntimeError = 2;

}  // namespace

int main(int argc, char** argv) {
  using namespace evl;
  using namespace evl::cli;

  CLI::App app{"evl: train, detect and evade machine-generated tweets"};
  app.require_subcommand(1, 1);

  std::string config_path;
  std::vector<std::string> overrides;
  std::optional<std::string> workdir;
  std::optional<std::uint64_t> seed;
  app.add_option("-c,--config", config_path, "INI config file (defaults apply without one)");
  app.add_option("-s,--set", overrides, "Override a config key, e.g. --set sampling.temperature=0.8");
  app.add_option("-w,--workdir", workdir, "Directory for artifacts");
  app.add_option("--seed", seed, "Global seed");
  bool quiet = false;
  app.add_flag("-q,--quiet", quiet, "Suppress progress output");

  std::string label;
  auto* filter = app.add_subcommand("filter", "Filter the raw corpus and split it into train and eval halves");
  filter->add_option("--label", label, "Label every input record (human or machine)");
  auto* train_lm = app.add_subcommand("train-lm", "Build the vocabulary and train the generator language model");
  auto* generate = app.add_subcommand("generate", "Sample the machine train and eval corpora");
  auto* train_det = app.add_subcommand("train-detector", "Train the transformer detector");
  auto* evaluate = app.add_subcommand("evaluate", "Score naive Bayes and the transformer detector on held-out data");
  auto* rl_tune = app.add_subcommand("rl-tune", "Fine-tune the generator against the detector with PPO");
  auto* report = app.add_subcommand("report", "Write the detection, QQ, generator-size and before/after RL tables");
  auto* show = app.add_subcommand("config", "Print the effective config");

  std::string synth_out;
  std::size_t synth_count = 25000;
  std::uint64_t synth_seed = 1;
  auto* synth = app.add_subcommand("synth", "Write a synthetic tweet corpus in the ingestion schema");
  synth->add_option("-o,--out", synth_out, "Output JSONL path")->required();
  synth->add_option("-n,--count", synth_count, "Number of records");
  synth->add_option("--synth-seed", synth_seed, "Generator seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kUsageError;
  }

  RunConfig cfg;
  std::optional<Label> label_override;
  try {
    if (synth->parsed()) {
      cmd_synth(synth_out, synth_count, synth_seed);
      return 0;
    }
    if (!config_path.empty()) cfg = load_config(config_path);
    for (const auto& o : overrides) apply_override(cfg, o);
    if (workdir) cfg.workdir = *workdir;
    if (seed) cfg.seed = *seed;
    cfg.finalize();
    cfg.validate();
    if (!label.empty()) label_override = parse_label(label);
  } catch (const ConfigError& e) {
    std::cerr << "evl: config error: " << e.what() << '\n';
    return kUsageError;
  } catch (const std::exception& e) {
    std::cerr << "evl: " << e.what() << '\n';
    return kRuntimeError;
  }

  std::ostream null_stream(nullptr);
  std::ostream& log = quiet ? null_stream : std::cerr;
  try {
    if (show->parsed()) write_config(std::cout, cfg);
    else if (filter->parsed()) cmd_filter(cfg, log, label_override);
    else if (train_lm->parsed()) cmd_train_lm(cfg, log);
    else if (generate->parsed()) cmd_generate(cfg, log);
    else if (train_det->parsed()) cmd_train_detector(cfg, log);
    else if (evaluate->parsed()) cmd_evaluate(cfg, log);
    else if (rl_tune->parsed()) cmd_rl_tune(cfg, log);
    else if (report->parsed()) cmd_report(cfg, log);
  } catch (const ConfigError& e) {
    std::cerr << "evl: config error: " << e.what() << '\n';
    return kUsageError;
  } catch (const std::exception& e) {
    std::cerr << "evl: " << e.what() << '\n';
    return kRuntimeError;
  }
  return 0;
}
