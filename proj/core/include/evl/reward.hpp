#pragma once

#include <array>
#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "evl/acceptability.hpp"
#include "evl/dictionary.hpp"
#include "evl/encoder.hpp"
#include "evl/tokenizer.hpp"

namespace evl {

enum class RuleId {
  special_chars,
  repetitions,
  acceptability,
  dictionary,
  word_emoji,
  emoji_count,
  query_repetition,
  special_tokens,
  same_start,
  number_start,
  unknown_chars,
};
inline constexpr std::size_t kRuleCount = 11;

std::string_view to_string(RuleId r);
RuleId parse_rule_id(std::string_view s);
inline constexpr std::array<RuleId, kRuleCount> kAllRules = {
    RuleId::special_chars, RuleId::repetitions,      RuleId::acceptability,  RuleId::dictionary,
    RuleId::word_emoji,    RuleId::emoji_count,      RuleId::query_repetition, RuleId::special_tokens,
    RuleId::same_start,    RuleId::number_start,     RuleId::unknown_chars};

struct RuleScore {
  RuleId rule = RuleId::special_chars;
  double value = 0.0;  // in [-1, 0]
  bool triggered() const { return value < 0.0; }
};

struct RewardConfig {
  double special_char_limit = 0.25;
  int repetition_free_limit = 2;
  int repetition_floor = 8;
  double acceptability_threshold = 0.40;
  double dictionary_min = 0.25;
  double word_fraction_floor = 0.25;
  int emoji_limit = 3;
  double emoji_step = 0.4;
  double query_overlap_limit = 0.5;
  int special_token_limit = 2;
  double special_token_step = 0.4;
  double same_start_limit = 0.10;
  double same_start_floor = 0.20;
  double number_start_limit = 0.10;
  double number_start_floor = 0.20;
  double unknown_first = -0.5;
  double multiplier = 1.0;

  void validate() const;
};

RuleScore rule_special_chars(std::string_view text, const RewardConfig& cfg = {});
RuleScore rule_repetitions(std::string_view text, const RewardConfig& cfg = {});
RuleScore rule_acceptability(std::string_view text, const AcceptabilityScorer& scorer, double threshold);
RuleScore rule_acceptability_value(double a, double threshold);
RuleScore rule_dictionary(std::string_view text, const Dictionary& dict, const RewardConfig& cfg = {});
RuleScore rule_word_emoji(std::string_view text, const RewardConfig& cfg = {});
RuleScore rule_emoji_count(std::string_view text, const RewardConfig& cfg = {});
RuleScore rule_query_repetition(std::string_view query, std::string_view response, const RewardConfig& cfg = {});
// Counts BOS, EOS and PAD.
RuleScore rule_special_tokens(std::span<const TokenId> ids, const RewardConfig& cfg = {});
std::vector<RuleScore> rule_same_start(std::span<const std::string> texts, const RewardConfig& cfg = {});
std::vector<RuleScore> rule_number_start(std::span<const std::string> texts, const RewardConfig& cfg = {});
// extra_unknown adds UNK tokens that are not rendered as U+FFFD in the text.
RuleScore rule_unknown_chars(std::string_view text, std::size_t extra_unknown = 0, const RewardConfig& cfg = {});

struct RewardBreakdown {
  std::array<double, kRuleCount> rules{};  // indexed by RuleId
  double detector_logit = 0.0;
  double multiplier = 1.0;
  double final = 0.0;

  double rule(RuleId r) const { return rules[static_cast<std::size_t>(r)]; }
  bool any_triggered() const;
};

RewardBreakdown combine(std::span<const RuleScore> rules, double detector_logit, double multiplier);

// One query/response pair. `text` is the full tweet (query followed by
// response) and `tokens` the full generated id sequence; both may be left
// empty, in which case text is joined from query and response.
struct RewardInput {
  std::string query;
  std::string response;
  std::string text;
  std::vector<TokenId> tokens;
};

// Per-text rules read the response, except acceptability, which reads the
// full tweet. Batch rules and the detector also read the full tweet.
std::vector<RewardBreakdown> score_batch(std::span<const RewardInput> batch, const LogitScorer& detector,
                                         const RewardConfig& cfg, const AcceptabilityScorer& scorer,
                                         const Dictionary& dict);

std::string full_text(const RewardInput& in);

// Query / response / reward rows; an empty query is shown as <|startoftext|>.
void write_reward_log_header(std::ostream& out);
void write_reward_log_row(std::ostream& out, std::string_view query, std::string_view response, double reward);

// Tabs and newlines become spaces.
std::string tsv_escape(std::string_view s);

}  // namespace evl
