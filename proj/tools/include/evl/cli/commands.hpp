#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

#include "evl/cli/config.hpp"

namespace evl::cli {

// Artifact names under the workdir; every name embeds the seed.
struct Artifacts {
  std::filesystem::path dir;
  std::uint64_t seed = 1;

  std::filesystem::path file(std::string_view stem, std::string_view ext) const;

  std::filesystem::path config() const { return file("config", "ini"); }
  std::filesystem::path filtered() const { return file("filtered", "jsonl"); }
  std::filesystem::path filter_stats() const { return file("filter-stats", "txt"); }
  std::filesystem::path human_train() const { return file("human-train", "jsonl"); }
  std::filesystem::path human_eval() const { return file("human-eval", "jsonl"); }
  std::filesystem::path vocab() const { return file("vocab", "txt"); }
  std::filesystem::path lm() const { return file("lm", "evlm"); }
  std::filesystem::path lm_loss() const { return file("lm-loss", "tsv"); }
  std::filesystem::path fake_train() const { return file("fake-train", "jsonl"); }
  std::filesystem::path fake_eval() const { return file("fake-eval", "jsonl"); }
  std::filesystem::path detector() const { return file("detector", "evlm"); }
  std::filesystem::path detector_loss() const { return file("detector-loss", "tsv"); }
  std::filesystem::path detection() const { return file("detection", "tsv"); }
  std::filesystem::path policy() const { return file("policy", "evlm"); }
  std::filesystem::path policy_best() const { return file("policy-best", "evlm"); }
  std::filesystem::path rl_log() const { return file("rl-log", "tsv"); }
  std::filesystem::path rl_rewards() const { return file("rl-rewards", "tsv"); }
  std::filesystem::path report_temperature() const { return file("report-temperature", "tsv"); }
  std::filesystem::path report_sizes() const { return file("report-sizes", "tsv"); }
  std::filesystem::path report_qq() const { return file("report-qq", "tsv"); }
  std::filesystem::path report_models() const { return file("report-models", "tsv"); }
  std::filesystem::path report_prepost() const { return file("report-prepost", "tsv"); }
};

Artifacts artifacts(const RunConfig& cfg);

// Each command expects a finalized config, validates it, echoes it to the
// workdir and writes its artifacts. Progress lines go to `log`.
void cmd_filter(const RunConfig& cfg, std::ostream& log, std::optional<Label> label_override = std::nullopt);
void cmd_train_lm(const RunConfig& cfg, std::ostream& log);
void cmd_generate(const RunConfig& cfg, std::ostream& log);
void cmd_train_detector(const RunConfig& cfg, std::ostream& log);
void cmd_evaluate(const RunConfig& cfg, std::ostream& log);
void cmd_rl_tune(const RunConfig& cfg, std::ostream& log);
void cmd_report(const RunConfig& cfg, std::ostream& log);

// Writes `count` synthetic raw records; needs no config.
void cmd_synth(const std::filesystem::path& out, std::size_t count, std::uint64_t seed);

}  // namespace evl::cli
