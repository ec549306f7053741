#include "evl/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "evl/error.hpp"

namespace evl {

namespace {

constexpr double kMassTolerance = 1e-12;

std::vector<std::size_t> ranked_desc(std::span<const double> dist) {
  std::vector<std::size_t> idx(dist.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return dist[a] > dist[b]; });
  return idx;
}

std::vector<double> keep_and_normalize(std::span<const double> dist, std::span<const std::size_t> keep) {
  std::vector<double> out(dist.size(), 0.0);
  double z = 0.0;
  for (auto i : keep) z += dist[i];
  if (!(z > 0.0)) throw Error("filter kept no probability mass");
  for (auto i : keep) out[i] = dist[i] / z;
  return out;
}

void require_nonempty(std::span<const double> dist) {
  if (dist.empty()) throw Error("empty probability vector");
}

}  // namespace

std::string_view to_string(Strategy s) {
  switch (s) {
    case Strategy::greedy: return "greedy";
    case Strategy::random: return "random";
    case Strategy::top_k: return "top_k";
    case Strategy::nucleus: return "nucleus";
    case Strategy::typical: return "typical";
  }
  return "greedy";
}

Strategy parse_strategy(std::string_view s) {
  if (s == "greedy") return Strategy::greedy;
  if (s == "random") return Strategy::random;
  if (s == "top_k") return Strategy::top_k;
  if (s == "nucleus") return Strategy::nucleus;
  if (s == "typical") return Strategy::typical;
  throw ConfigError("unknown sampling strategy '" + std::string(s) + "'");
}

SamplingConfig SamplingConfig::greedy() {
  SamplingConfig c;
  c.strategy = Strategy::greedy;
  c.k.reset();
  return c;
}

SamplingConfig SamplingConfig::random(double temperature) {
  SamplingConfig c;
  c.strategy = Strategy::random;
  c.temperature = temperature;
  c.k.reset();
  return c;
}

SamplingConfig SamplingConfig::top_k(int k, double temperature) {
  SamplingConfig c;
  c.strategy = Strategy::top_k;
  c.temperature = temperature;
  c.k = k;
  return c;
}

SamplingConfig SamplingConfig::nucleus(double p, double temperature) {
  SamplingConfig c;
  c.strategy = Strategy::nucleus;
  c.temperature = temperature;
  c.k.reset();
  c.p = p;
  return c;
}

SamplingConfig SamplingConfig::typical(double p, double temperature) {
  SamplingConfig c = nucleus(p, temperature);
  c.strategy = Strategy::typical;
  return c;
}

void SamplingConfig::validate() const {
  if (!(temperature > 0.0)) throw ConfigError("temperature must be positive");
  if (max_new_tokens <= 0) throw ConfigError("max_new_tokens must be positive");
  if (min_new_tokens < 0 || min_new_tokens > max_new_tokens) {
    throw ConfigError("min_new_tokens must lie in [0, max_new_tokens]");
  }
  const bool needs_k = strategy == Strategy::top_k;
  const bool needs_p = strategy == Strategy::nucleus || strategy == Strategy::typical;
  if (needs_k != k.has_value()) {
    throw ConfigError(needs_k ? "top_k sampling requires k" : "k is only valid for top_k sampling");
  }
  if (needs_p != p.has_value()) {
    throw ConfigError(needs_p ? "nucleus and typical sampling require p"
                              : "p is only valid for nucleus and typical sampling");
  }
  if (k && *k < 1) throw ConfigError("k must be at least 1");
  if (p && !(*p > 0.0 && *p <= 1.0)) throw ConfigError("p must lie in (0, 1]");
}

std::vector<double> softmax_with_temperature(std::span<const double> logits, double temperature) {
  if (!(temperature > 0.0)) throw ConfigError("temperature must be positive");
  require_nonempty(logits);
  const double m = *std::max_element(logits.begin(), logits.end());
  std::vector<double> out(logits.size());
  double z = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out[i] = std::exp((logits[i] - m) / temperature);
    z += out[i];
  }
  for (double& v : out) v /= z;
  return out;
}

int greedy_pick(std::span<const double> dist) {
  require_nonempty(dist);
  std::size_t best = 0;
  for (std::size_t i = 1; i < dist.size(); ++i) {
    if (dist[i] > dist[best]) best = i;
  }
  return static_cast<int>(best);
}

std::vector<double> top_k_filter(std::span<const double> dist, int k) {
  require_nonempty(dist);
  if (k < 1) throw ConfigError("k must be at least 1");
  auto idx = ranked_desc(dist);
  idx.resize(std::min(idx.size(), static_cast<std::size_t>(k)));
  return keep_and_normalize(dist, idx);
}

std::vector<double> nucleus_filter(std::span<const double> dist, double p) {
  require_nonempty(dist);
  if (!(p > 0.0 && p <= 1.0)) throw ConfigError("p must lie in (0, 1]");
  const auto idx = ranked_desc(dist);
  std::vector<std::size_t> keep;
  double cum = 0.0;
  for (auto i : idx) {
    if (dist[i] <= 0.0) break;
    keep.push_back(i);
    cum += dist[i];
    if (cum >= p - kMassTolerance) break;
  }
  return keep_and_normalize(dist, keep);
}

std::vector<double> typical_filter(std::span<const double> dist, double p) {
  require_nonempty(dist);
  if (!(p > 0.0 && p <= 1.0)) throw ConfigError("p must lie in (0, 1]");
  double entropy = 0.0;
  for (double q : dist) {
    if (q > 0.0) entropy -= q * std::log(q);
  }
  std::vector<std::size_t> idx;
  std::vector<double> distance(dist.size(), 0.0);
  for (std::size_t i = 0; i < dist.size(); ++i) {
    if (dist[i] > 0.0) {
      idx.push_back(i);
      distance[i] = std::abs(-std::log(dist[i]) - entropy);
    }
  }
  std::stable_sort(idx.begin(), idx.end(),
                   [&](std::size_t a, std::size_t b) { return distance[a] < distance[b]; });
  std::vector<std::size_t> keep;
  double cum = 0.0;
  for (auto i : idx) {
    keep.push_back(i);
    cum += dist[i];
    if (cum >= p - kMassTolerance) break;
  }
  return keep_and_normalize(dist, keep);
}

std::vector<double> apply_strategy(std::span<const double> dist, const SamplingConfig& cfg) {
  switch (cfg.strategy) {
    case Strategy::greedy: {
      std::vector<double> out(dist.size(), 0.0);
      out[static_cast<std::size_t>(greedy_pick(dist))] = 1.0;
      return out;
    }
    case Strategy::random: return {dist.begin(), dist.end()};
    case Strategy::top_k: return top_k_filter(dist, cfg.k.value_or(1));
    case Strategy::nucleus: return nucleus_filter(dist, cfg.p.value_or(1.0));
    case Strategy::typical: return typical_filter(dist, cfg.p.value_or(1.0));
  }
  return {dist.begin(), dist.end()};
}

int sample_categorical(std::span<const double> dist, Rng& rng) {
  require_nonempty(dist);
  const double u = rng.uniform();
  double cum = 0.0;
  int last = -1;
  for (std::size_t i = 0; i < dist.size(); ++i) {
    if (dist[i] <= 0.0) continue;
    cum += dist[i];
    last = static_cast<int>(i);
    if (u < cum) return last;
  }
  if (last < 0) throw Error("cannot sample from an all-zero distribution");
  return last;
}

std::vector<TokenId> generate(const LmPolicy& m, std::span<const TokenId> prefix, const SamplingConfig& cfg,
                              Rng& rng) {
  cfg.validate();
  std::vector<TokenId> seq;
  if (prefix.empty() || prefix.front() != Tokenizer::kBos) seq.push_back(Tokenizer::kBos);
  seq.insert(seq.end(), prefix.begin(), prefix.end());
  if (static_cast<int>(seq.size()) >= m.context_len()) {
    throw Error("prompt fills the whole context window");
  }
  LmPolicy::Decoder dec(m);
  std::vector<double> logits;
  for (TokenId t : seq) logits = dec.feed(t);
  for (int n = 0; n < cfg.max_new_tokens; ++n) {
    if (n < cfg.min_new_tokens) logits[Tokenizer::kEos] = -std::numeric_limits<double>::infinity();
    TokenId next;
    if (cfg.strategy == Strategy::greedy) {
      next = static_cast<TokenId>(greedy_pick(logits));
    } else {
      const auto dist = apply_strategy(softmax_with_temperature(logits, cfg.temperature), cfg);
      next = static_cast<TokenId>(sample_categorical(dist, rng));
    }
    seq.push_back(next);
    if (next == Tokenizer::kEos || static_cast<int>(seq.size()) >= m.context_len()) break;
    logits = dec.feed(next);
  }
  return seq;
}

std::vector<TokenId> generate(const LmPolicy& m, std::span<const TokenId> prefix, const SamplingConfig& cfg) {
  Rng rng(cfg.seed);
  return generate(m, prefix, cfg, rng);
}

}  // namespace evl
