#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "evl/lm.hpp"
#include "evl/rng.hpp"

namespace evl {

enum class Strategy { greedy, random, top_k, nucleus, typical };

std::string_view to_string(Strategy s);
Strategy parse_strategy(std::string_view s);

// k is set only for top_k, p only for nucleus and typical.
struct SamplingConfig {
  Strategy strategy = Strategy::top_k;
  double temperature = 1.0;
  std::optional<int> k = 100;
  std::optional<double> p;
  int max_new_tokens = 32;
  // EOS is suppressed until this many tokens have been generated.
  int min_new_tokens = 0;
  std::uint64_t seed = 0;

  static SamplingConfig greedy();
  static SamplingConfig random(double temperature = 1.0);
  static SamplingConfig top_k(int k = 100, double temperature = 1.0);
  static SamplingConfig nucleus(double p = 0.95, double temperature = 1.0);
  static SamplingConfig typical(double p = 0.95, double temperature = 1.0);

  void validate() const;
};

std::vector<double> softmax_with_temperature(std::span<const double> logits, double temperature);

// Ties resolve to the lowest token id throughout.
int greedy_pick(std::span<const double> dist);
std::vector<double> top_k_filter(std::span<const double> dist, int k);
std::vector<double> nucleus_filter(std::span<const double> dist, double p);
std::vector<double> typical_filter(std::span<const double> dist, double p);
std::vector<double> apply_strategy(std::span<const double> dist, const SamplingConfig& cfg);

int sample_categorical(std::span<const double> dist, Rng& rng);

// Returns prefix (with BOS ensured) followed by the generated continuation,
// ending at EOS, max_new_tokens or the context limit.
std::vector<TokenId> generate(const LmPolicy& m, std::span<const TokenId> prefix, const SamplingConfig& cfg);
std::vector<TokenId> generate(const LmPolicy& m, std::span<const TokenId> prefix, const SamplingConfig& cfg,
                              Rng& rng);

}  // namespace evl
