#include "evl/reward.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <map>
#include <ostream>

#include "evl/error.hpp"
#include "evl/text.hpp"

namespace evl {

namespace {

// 0 at or below `limit`, falling linearly to -1 at `floor`, clamped.
double ramp(double x, double limit, double floor) {
  if (!(x > limit)) return 0.0;
  return -std::min(1.0, (x - limit) / (floor - limit));
}

RuleScore score(RuleId r, double v) { return RuleScore{r, v == 0.0 ? 0.0 : v}; }

std::vector<std::string> lower_words(std::string_view s) {
  auto w = text::words(s);
  for (auto& x : w) x = text::to_lower_ascii(x);
  return w;
}

}  // namespace

std::string_view to_string(RuleId r) {
  switch (r) {
    case RuleId::special_chars: return "special_chars";
    case RuleId::repetitions: return "repetitions";
    case RuleId::acceptability: return "acceptability";
    case RuleId::dictionary: return "dictionary";
    case RuleId::word_emoji: return "word_emoji";
    case RuleId::emoji_count: return "emoji_count";
    case RuleId::query_repetition: return "query_repetition";
    case RuleId::special_tokens: return "special_tokens";
    case RuleId::same_start: return "same_start";
    case RuleId::number_start: return "number_start";
    case RuleId::unknown_chars: return "unknown_chars";
  }
  return "special_chars";
}

RuleId parse_rule_id(std::string_view s) {
  for (RuleId r : kAllRules) {
    if (to_string(r) == s) return r;
  }
  throw ConfigError("unknown rule '" + std::string(s) + "'");
}

void RewardConfig::validate() const {
  const auto unit = [](double v, const char* name, bool allow_zero) {
    if (!(v <= 1.0 && (allow_zero ? v >= 0.0 : v > 0.0))) {
      throw ConfigError(std::string("reward ") + name + " must lie in " + (allow_zero ? "[0, 1]" : "(0, 1]"));
    }
  };
  unit(special_char_limit, "special_char_limit", true);
  if (special_char_limit >= 1.0) throw ConfigError("reward special_char_limit must be below 1");
  if (repetition_free_limit < 1 || repetition_floor <= repetition_free_limit) {
    throw ConfigError("reward repetition limits need 1 <= repetition_free_limit < repetition_floor");
  }
  unit(acceptability_threshold, "acceptability_threshold", false);
  unit(dictionary_min, "dictionary_min", false);
  if (!(word_fraction_floor >= 0.0 && word_fraction_floor < 0.5)) {
    throw ConfigError("reward word_fraction_floor must lie in [0, 0.5)");
  }
  if (emoji_limit < 0 || !(emoji_step > 0.0)) throw ConfigError("reward emoji_limit must be >= 0 and emoji_step positive");
  unit(query_overlap_limit, "query_overlap_limit", true);
  if (query_overlap_limit >= 1.0) throw ConfigError("reward query_overlap_limit must be below 1");
  if (special_token_limit < 0 || !(special_token_step > 0.0)) {
    throw ConfigError("reward special_token_limit must be >= 0 and special_token_step positive");
  }
  unit(same_start_limit, "same_start_limit", true);
  unit(number_start_limit, "number_start_limit", true);
  if (!(same_start_floor > same_start_limit && same_start_floor <= 1.0)) {
    throw ConfigError("reward same_start_floor must lie in (same_start_limit, 1]");
  }
  if (!(number_start_floor > number_start_limit && number_start_floor <= 1.0)) {
    throw ConfigError("reward number_start_floor must lie in (number_start_limit, 1]");
  }
  if (!(unknown_first >= -1.0 && unknown_first < 0.0)) throw ConfigError("reward unknown_first must lie in [-1, 0)");
  if (!(multiplier > 0.0) || !std::isfinite(multiplier)) throw ConfigError("reward multiplier must be positive");
}

RuleScore rule_special_chars(std::string_view t, const RewardConfig& cfg) {
  const auto c = text::compose(t);
  if (c.non_space_chars == 0) return score(RuleId::special_chars, 0.0);
  const double s = static_cast<double>(c.specials) / static_cast<double>(c.non_space_chars);
  return score(RuleId::special_chars, ramp(s, cfg.special_char_limit, 1.0));
}

RuleScore rule_repetitions(std::string_view t, const RewardConfig& cfg) {
  std::map<std::string, int> counts;
  int m = 0;
  for (const auto& w : lower_words(t)) m = std::max(m, ++counts[w]);
  return score(RuleId::repetitions, ramp(m, cfg.repetition_free_limit, cfg.repetition_floor));
}

RuleScore rule_acceptability_value(double a, double threshold) {
  if (!std::isfinite(a) || a < 0.0 || a > 1.0) throw Error("acceptability score outside [0, 1]");
  if (!(threshold > 0.0 && threshold <= 1.0)) throw ConfigError("acceptability threshold must lie in (0, 1]");
  if (a >= threshold) return score(RuleId::acceptability, 0.0);
  return score(RuleId::acceptability, -(threshold - a) / threshold);
}

RuleScore rule_acceptability(std::string_view t, const AcceptabilityScorer& scorer, double threshold) {
  return rule_acceptability_value(scorer.acceptability(t), threshold);
}

RuleScore rule_dictionary(std::string_view t, const Dictionary& dict, const RewardConfig& cfg) {
  if (dict.empty()) throw Error("dictionary is empty");
  const auto w = text::words(t);
  if (w.empty()) return score(RuleId::dictionary, 0.0);
  const auto hits = std::count_if(w.begin(), w.end(), [&](const std::string& x) { return dict.contains(x); });
  const double d = static_cast<double>(hits) / static_cast<double>(w.size());
  if (d >= cfg.dictionary_min) return score(RuleId::dictionary, 0.0);
  return score(RuleId::dictionary, -(cfg.dictionary_min - d) / cfg.dictionary_min);
}

RuleScore rule_word_emoji(std::string_view t, const RewardConfig& cfg) {
  const auto c = text::compose(t);
  if (c.emojis <= c.words) return score(RuleId::word_emoji, 0.0);
  const double f = static_cast<double>(c.words) / static_cast<double>(c.words + c.emojis);
  // falls from 0 at f = 0.5 to -1 at f = word_fraction_floor
  return score(RuleId::word_emoji, -std::min(1.0, (0.5 - f) / (0.5 - cfg.word_fraction_floor)));
}

RuleScore rule_emoji_count(std::string_view t, const RewardConfig& cfg) {
  const auto e = static_cast<int>(text::compose(t).emojis);
  if (e <= cfg.emoji_limit) return score(RuleId::emoji_count, 0.0);
  return score(RuleId::emoji_count, -std::min(1.0, cfg.emoji_step * (e - cfg.emoji_limit)));
}

RuleScore rule_query_repetition(std::string_view query, std::string_view response, const RewardConfig& cfg) {
  const auto q = text::words(query);
  const auto r = text::words(response);
  if (q.empty() || r.empty()) return score(RuleId::query_repetition, 0.0);
  // longest common contiguous word run
  std::vector<int> prev(r.size() + 1, 0), cur(r.size() + 1, 0);
  int longest = 0;
  for (std::size_t i = 1; i <= q.size(); ++i) {
    for (std::size_t j = 1; j <= r.size(); ++j) {
      cur[j] = q[i - 1] == r[j - 1] ? prev[j - 1] + 1 : 0;
      longest = std::max(longest, cur[j]);
    }
    std::swap(prev, cur);
  }
  const double frac = static_cast<double>(longest) / static_cast<double>(q.size());
  return score(RuleId::query_repetition, ramp(frac, cfg.query_overlap_limit, 1.0));
}

RuleScore rule_special_tokens(std::span<const TokenId> ids, const RewardConfig& cfg) {
  const auto t = static_cast<int>(std::count_if(ids.begin(), ids.end(), [](TokenId id) {
    return id == Tokenizer::kBos || id == Tokenizer::kEos || id == Tokenizer::kPad;
  }));
  if (t <= cfg.special_token_limit) return score(RuleId::special_tokens, 0.0);
  return score(RuleId::special_tokens, -std::min(1.0, cfg.special_token_step * (t - cfg.special_token_limit)));
}

std::vector<RuleScore> rule_same_start(std::span<const std::string> texts, const RewardConfig& cfg) {
  std::vector<RuleScore> out(texts.size(), RuleScore{RuleId::same_start, 0.0});
  if (texts.empty()) return out;
  std::vector<std::string> first(texts.size());
  std::map<std::string, int> counts;
  int top = 0;
  for (std::size_t i = 0; i < texts.size(); ++i) {
    const auto w = lower_words(texts[i]);
    if (w.empty()) continue;
    first[i] = w.front();
    top = std::max(top, ++counts[first[i]]);
  }
  const double s = static_cast<double>(top) / static_cast<double>(texts.size());
  const double v = ramp(s, cfg.same_start_limit, cfg.same_start_floor);
  if (v == 0.0) return out;
  for (std::size_t i = 0; i < texts.size(); ++i) {
    if (!first[i].empty() && counts[first[i]] == top) out[i].value = v;
  }
  return out;
}

std::vector<RuleScore> rule_number_start(std::span<const std::string> texts, const RewardConfig& cfg) {
  std::vector<RuleScore> out(texts.size(), RuleScore{RuleId::number_start, 0.0});
  if (texts.empty()) return out;
  std::vector<bool> digit(texts.size(), false);
  std::size_t n = 0;
  for (std::size_t i = 0; i < texts.size(); ++i) {
    const auto t = text::trim(texts[i]);
    digit[i] = !t.empty() && t[0] >= '0' && t[0] <= '9';
    n += digit[i] ? 1 : 0;
  }
  const double s = static_cast<double>(n) / static_cast<double>(texts.size());
  const double v = ramp(s, cfg.number_start_limit, cfg.number_start_floor);
  for (std::size_t i = 0; i < texts.size(); ++i) {
    if (digit[i]) out[i].value = v;
  }
  return out;
}

RuleScore rule_unknown_chars(std::string_view t, std::size_t extra_unknown, const RewardConfig& cfg) {
  const std::size_t u = text::compose(t).replacement_chars + extra_unknown;
  if (u == 0) return score(RuleId::unknown_chars, 0.0);
  return score(RuleId::unknown_chars, u == 1 ? cfg.unknown_first : -1.0);
}

bool RewardBreakdown::any_triggered() const {
  return std::any_of(rules.begin(), rules.end(), [](double v) { return v < 0.0; });
}

RewardBreakdown combine(std::span<const RuleScore> rules, double detector_logit, double multiplier) {
  RewardBreakdown b;
  b.detector_logit = detector_logit;
  b.multiplier = multiplier;
  double lowest = 0.0;
  for (const auto& r : rules) {
    if (r.value < -1.0 || r.value > 0.0 || std::isnan(r.value)) throw Error("rule score outside [-1, 0]");
    auto& slot = b.rules[static_cast<std::size_t>(r.rule)];
    slot = std::min(slot, r.value);
    lowest = std::min(lowest, r.value);
  }
  b.final = lowest < 0.0 ? lowest : multiplier * detector_logit;
  return b;
}

std::string full_text(const RewardInput& in) {
  if (!in.text.empty()) return in.text;
  if (in.query.empty()) return in.response;
  if (in.response.empty()) return in.query;
  return in.query + " " + in.response;
}

std::vector<RewardBreakdown> score_batch(std::span<const RewardInput> batch, const LogitScorer& detector,
                                         const RewardConfig& cfg, const AcceptabilityScorer& scorer,
                                         const Dictionary& dict) {
  cfg.validate();
  std::vector<std::string> full;
  full.reserve(batch.size());
  for (const auto& in : batch) full.push_back(full_text(in));
  const auto same = rule_same_start(full, cfg);
  const auto num = rule_number_start(full, cfg);

  std::vector<RewardBreakdown> out;
  out.reserve(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const auto& in = batch[i];
    const std::array<RuleScore, kRuleCount> rules = {
        rule_special_chars(in.response, cfg),
        rule_repetitions(in.response, cfg),
        rule_acceptability(full[i], scorer, cfg.acceptability_threshold),
        rule_dictionary(in.response, dict, cfg),
        rule_word_emoji(in.response, cfg),
        rule_emoji_count(in.response, cfg),
        rule_query_repetition(in.query, in.response, cfg),
        rule_special_tokens(in.tokens, cfg),
        same[i],
        num[i],
        rule_unknown_chars(in.response, 0, cfg),
    };
    out.push_back(combine(rules, detector.logit(full[i]), cfg.multiplier));
  }
  return out;
}

std::string tsv_escape(std::string_view s) {
  std::string out(s);
  for (char& c : out) {
    if (c == '\t' || c == '\n' || c == '\r') c = ' ';
  }
  return out;
}

void write_reward_log_header(std::ostream& out) { out << "query\tresponse\treward\n"; }

void write_reward_log_row(std::ostream& out, std::string_view query, std::string_view response, double reward) {
  out << (query.empty() ? std::string("<|startoftext|>") : tsv_escape(query)) << '\t' << tsv_escape(response)
      << '\t' << std::fixed << std::setprecision(4) << reward << std::defaultfloat << '\n';
}

}  // namespace evl
