#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "evl/corpus.hpp"
#include "evl/encoder.hpp"
#include "evl/experiment.hpp"
#include "evl/lm.hpp"
#include "evl/reward.hpp"
#include "evl/rl.hpp"
#include "evl/sampling.hpp"

namespace evl::cli {

struct ModelSize {
  int embedding_dim = 64;
  int layers = 2;
  bool operator==(const ModelSize&) const = default;
};

// Effective configuration of a pipeline run. The file format is INI:
// top-level keys, then [filter], [vocab], [lm], [sampling], [prompts],
// [generate], [detector], [reward], [rl] and [report] sections.
struct RunConfig {
  std::uint64_t seed = 1;
  std::filesystem::path corpus = "tweets.jsonl";
  std::filesystem::path workdir = "evl-run";

  FilterPolicy filter;
  double split_ratio = 0.5;
  std::size_t max_records = 0;  // 0 keeps every filtered record

  std::size_t vocab_size = 2000;

  LmConfig lm;

  SamplingConfig sampling = default_sampling();
  PromptConfig prompts;

  std::size_t generate_train = 9000;
  std::size_t generate_eval = 1000;

  EncoderConfig detector = default_detector();
  double nb_alpha = 1.0;

  RewardConfig reward;
  std::filesystem::path dictionary;  // empty: embedded list
  double acceptability_anchor = 0.7;
  std::size_t calibration_texts = 2000;

  RlConfig rl;
  std::size_t rl_eval_samples = 500;

  std::vector<double> report_temperatures{0.8, 1.0, 1.4};
  std::vector<Strategy> report_strategies{Strategy::greedy, Strategy::random, Strategy::top_k,
                                          Strategy::nucleus, Strategy::typical};
  std::vector<std::size_t> report_train_sizes{1000, 5000};
  std::size_t report_eval_size = 1000;
  std::size_t qq_quantiles = 20;
  std::vector<ModelSize> report_model_sizes;
  int report_top_k = 100;
  double report_top_p = 0.95;
  double report_typical_p = 0.95;

  static SamplingConfig default_sampling();
  static EncoderConfig default_detector();

  // Fills k or p for the configured strategy when the file left them out.
  void finalize();
  void validate() const;
};

RunConfig load_config(const std::filesystem::path& path);
RunConfig parse_config(std::istream& in);
// Applies a single "section.key=value" (or "key=value" for top-level keys).
void apply_override(RunConfig& cfg, std::string_view assignment);
void write_config(std::ostream& out, const RunConfig& cfg);
std::string config_text(const RunConfig& cfg);
// FNV-1a of the canonical config text, as 16 hex digits. The workdir is
// left out so that the same run in two directories hashes alike.
std::string config_hash(const RunConfig& cfg);

// Sampling settings for a strategy with the configured k/p defaults.
SamplingConfig sampling_for(const RunConfig& cfg, Strategy s);

}  // namespace evl::cli
