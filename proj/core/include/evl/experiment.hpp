#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "evl/corpus.hpp"
#include "evl/lm.hpp"
#include "evl/metrics.hpp"
#include "evl/rl.hpp"
#include "evl/sampling.hpp"

namespace evl {

// How machine samples are prompted: with probability prefix_probability the
// opening tokens of a human text, otherwise BOS alone.
struct PromptConfig {
  double prefix_probability = 0.5;
  int max_prefix_tokens = 6;
};

// n machine-labeled records; record i uses prompt i and a generator seeded
// from (seed, i). Texts are the decoded prompt plus continuation.
Corpus generate_corpus(const LmPolicy& m, const Tokenizer& tok, std::span<const TokenSeq> prompt_pool,
                       const PromptConfig& prompts, const SamplingConfig& sampling, std::size_t n,
                       std::uint64_t seed);

struct GridConfig {
  std::vector<double> temperatures{0.8, 1.0, 1.4};
  std::vector<SamplingConfig> strategies;  // temperature and seed fields are overridden per cell
  std::vector<std::size_t> train_sizes{1000, 5000};  // per class
  std::size_t eval_size = 1000;                      // per class
  PromptConfig prompts;
  std::uint64_t seed = 1;

  void validate() const;
};

struct GridRow {
  Strategy strategy = Strategy::greedy;
  double temperature = 1.0;
  std::size_t train_size = 0;
  double accuracy = 0.0;
  double f1 = 0.0;
};

struct ExperimentReport {
  std::vector<GridRow> rows;
};

// human_train feeds detector training and prompts, human_eval the held-out
// half of each balanced evaluation set.
ExperimentReport grid_experiment(const LmPolicy& generator, const Tokenizer& tok, const Corpus& human_train,
                                 const Corpus& human_eval, const GridConfig& grid);

// Trains NB on a balanced set and evaluates on another.
Metrics nb_detection(const Tokenizer& tok, const LabeledSet& train, const LabeledSet& eval);

// Quantile pairs of the two corpora's type probability distributions, at
// levels (i + 0.5) / n with linear interpolation.
std::vector<std::pair<double, double>> qq_quantiles(std::span<const std::string> a,
                                                    std::span<const std::string> b, std::size_t n_quantiles);

void write_report_tsv(std::ostream& out, const ExperimentReport& r);
void write_qq_tsv(std::ostream& out, std::span<const std::pair<double, double>> pairs);

}  // namespace evl
