#pragma once

// Worked cases shared by the unit tests and the acceptance binary.
// Expected values are computed by hand here, not by the library.

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "evl/dictionary.hpp"
#include "evl/reward.hpp"
#include "evl/rng.hpp"
#include "evl/sampling.hpp"

namespace evl::cases {

struct ScalarCase {
  std::string name;
  std::function<double()> actual;
  double expected;
};

inline std::string repeat(const std::string& s, int n, const std::string& sep = " ") {
  std::string out;
  for (int i = 0; i < n; ++i) out += (i ? sep : "") + s;
  return out;
}

inline double nth(const std::vector<RuleScore>& v, std::size_t i) { return v.at(i).value; }

inline std::vector<std::string> batch_with_starts(int n, int sharing, const std::string& shared) {
  std::vector<std::string> b;
  for (int i = 0; i < n; ++i) b.push_back(i < sharing ? shared + " text" : "w" + std::to_string(i) + " text");
  return b;
}

inline std::vector<ScalarCase> reward_rule_cases() {
  static const Dictionary dict = Dictionary::from_text("the\ncat\nsat\non\nmat\n");
  const RewardConfig cfg;
  std::vector<ScalarCase> c;
  const auto add = [&](std::string name, std::function<double()> f, double want) {
    c.push_back({std::move(name), std::move(f), want});
  };
  add("special_chars all special", [] { return rule_special_chars("!!!!").value; }, -1.0);
  add("special_chars at 25%", [] { return rule_special_chars("abc!").value; }, 0.0);
  add("special_chars midpoint 0.625", [] { return rule_special_chars("abc!!!!!").value; }, -(0.625 - 0.25) / 0.75);
  add("special_chars emoji not special", [] { return rule_special_chars("ab😀😀").value; }, 0.0);

  add("repetitions at limit", [] { return rule_repetitions("go go stop").value; }, 0.0);
  add("repetitions eight", [] { return rule_repetitions(repeat("spam", 8)).value; }, -1.0);
  add("repetitions midpoint five", [] { return rule_repetitions(repeat("Spam", 3) + " " + repeat("spam", 2)).value; },
      -(5.0 - 2.0) / 6.0);

  add("acceptability at threshold", [] { return rule_acceptability_value(0.40, 0.40).value; }, 0.0);
  add("acceptability zero", [] { return rule_acceptability_value(0.0, 0.40).value; }, -1.0);
  add("acceptability midpoint", [] { return rule_acceptability_value(0.20, 0.40).value; }, -0.5);

  add("dictionary all known", [] { return rule_dictionary("the cat sat", dict).value; }, 0.0);
  add("dictionary none known", [] { return rule_dictionary("zzz qqq", dict).value; }, -1.0);
  add("dictionary midpoint 1/8", [] { return rule_dictionary("#The x1 x2 x3 x4 x5 x6 x7", dict).value; },
      -(0.25 - 0.125) / 0.25);

  add("word_emoji equal", [] { return rule_word_emoji("a b c 😀😀😀").value; }, 0.0);
  add("word_emoji quarter words", [] { return rule_word_emoji("a 😀😀😀").value; }, -1.0);
  add("word_emoji midpoint 0.375", [] { return rule_word_emoji("a b c 😀😀😀😀😀").value; }, -(0.5 - 0.375) / 0.25);

  add("emoji_count three", [] { return rule_emoji_count("😀😀😀").value; }, 0.0);
  add("emoji_count four", [] { return rule_emoji_count("😀😀😀😀").value; }, -0.4);
  add("emoji_count six clamps", [] { return rule_emoji_count("😀😀😀😀😀😀").value; }, -1.0);

  add("query_repetition full", [] { return rule_query_repetition("i love this song", "i love this song").value; },
      -1.0);
  add("query_repetition disjoint", [] { return rule_query_repetition("i love this song", "great day").value; }, 0.0);
  add("query_repetition midpoint 0.75",
      [] { return rule_query_repetition("i love this song", "yes love this song").value; }, -(0.75 - 0.5) / 0.5);
  add("query_repetition empty query", [] { return rule_query_repetition("", "anything").value; }, 0.0);

  add("special_tokens two", [] { return rule_special_tokens(std::vector<TokenId>{0, 7, 8, 1}).value; }, 0.0);
  add("special_tokens three", [] { return rule_special_tokens(std::vector<TokenId>{0, 7, 1, 1}).value; }, -0.4);
  add("special_tokens five clamps", [] { return rule_special_tokens(std::vector<TokenId>{0, 3, 3, 7, 1, 1}).value; },
      -1.0);

  add("same_start all distinct", [] { return nth(rule_same_start(batch_with_starts(10, 0, "")), 3); }, 0.0);
  add("same_start 20% sharers", [] { return nth(rule_same_start(batch_with_starts(10, 2, "Hey")), 0); }, -1.0);
  add("same_start 20% others", [] { return nth(rule_same_start(batch_with_starts(10, 2, "Hey")), 5); }, 0.0);
  add("same_start midpoint 15%", [] { return nth(rule_same_start(batch_with_starts(20, 3, "Hey")), 2); },
      -(0.15 - 0.10) / 0.10);

  add("number_start none", [] { return nth(rule_number_start(batch_with_starts(10, 0, "")), 0); }, 0.0);
  add("number_start 20%", [] { return nth(rule_number_start(batch_with_starts(10, 2, "5")), 1); }, -1.0);
  add("number_start midpoint 15%", [] { return nth(rule_number_start(batch_with_starts(20, 3, "12")), 0); },
      -(0.15 - 0.10) / 0.10);
  add("number_start non-digit in digit batch", [] { return nth(rule_number_start(batch_with_starts(20, 3, "12")), 9); },
      0.0);

  add("unknown_chars clean", [] { return rule_unknown_chars("all good").value; }, 0.0);
  add("unknown_chars one", [] { return rule_unknown_chars("bad \xEF\xBF\xBD here").value; }, -0.5);
  add("unknown_chars two", [] { return rule_unknown_chars("\xEF\xBF\xBD and \xEF\xBF\xBD").value; }, -1.0);
  add("unknown_chars unk token", [] { return rule_unknown_chars("plain", 1).value; }, -0.5);
  (void)cfg;
  return c;
}

// Brute-force combiner oracle.
inline double combine_oracle(const std::vector<double>& v, double logit, double mult) {
  const double m = *std::min_element(v.begin(), v.end());
  return m < 0.0 ? m : mult * logit;
}

struct CombineCase {
  std::vector<double> rules;
  double logit;
  double multiplier;
};

inline std::vector<CombineCase> random_combine_cases(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<CombineCase> out;
  for (std::size_t i = 0; i < n; ++i) {
    CombineCase c;
    for (std::size_t r = 0; r < kRuleCount; ++r) {
      // mostly zeros so both branches are exercised
      const double u = rng.uniform();
      c.rules.push_back(u < 0.85 ? 0.0 : (u < 0.9 ? -1.0 : -rng.uniform()));
    }
    c.logit = 10.0 * (rng.uniform() - 0.5);
    c.multiplier = rng.bernoulli(0.5) ? 1.0 : 1.0 + 9.0 * rng.uniform();
    out.push_back(std::move(c));
  }
  return out;
}

inline std::vector<RuleScore> as_scores(const std::vector<double>& v) {
  std::vector<RuleScore> s;
  for (std::size_t i = 0; i < v.size(); ++i) s.push_back({kAllRules[i], v[i]});
  return s;
}

struct DistCase {
  std::string name;
  std::function<std::vector<double>()> actual;
  std::vector<double> expected;
};

inline std::vector<DistCase> sampling_filter_cases() {
  static const std::vector<double> p{0.5, 0.3, 0.2};
  return {
      {"top_k k=2", [] { return top_k_filter(p, 2); }, {0.5 / 0.8, 0.3 / 0.8, 0.0}},
      {"top_k k=vocab", [] { return top_k_filter(p, 3); }, p},
      {"top_k k=1", [] { return top_k_filter(p, 1); }, {1.0, 0.0, 0.0}},
      {"nucleus p=0.7", [] { return nucleus_filter(p, 0.7); }, {0.5 / 0.8, 0.3 / 0.8, 0.0}},
      {"nucleus p=1", [] { return nucleus_filter(p, 1.0); }, p},
      {"nucleus p below max", [] { return nucleus_filter(p, 0.4); }, {1.0, 0.0, 0.0}},
      // H = 1.0297; |-ln p - H| = 0.337, 0.174, 0.580: 0.3 first, then 0.5
      {"typical p=0.4", [] { return typical_filter(p, 0.4); }, {0.5 / 0.8, 0.3 / 0.8, 0.0}},
      // all distances tie; ids in order until the mass reaches p
      {"typical uniform", [] { return typical_filter(std::vector<double>{0.25, 0.25, 0.25, 0.25}, 0.3); },
       {0.5, 0.5, 0.0, 0.0}},
      {"typical p=1", [] { return typical_filter(p, 1.0); }, p},
  };
}

}  // namespace evl::cases
