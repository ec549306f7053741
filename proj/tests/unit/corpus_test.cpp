#include <gtest/gtest.h>

#include <set>
#include <sstream>

#include "evl/corpus.hpp"
#include "evl/error.hpp"
#include "evl/rng.hpp"
#include "fixtures.hpp"

using namespace evl;
using namespace evl::testing;

namespace {

const char* kLine =
    R"({"text":"%s","author_id":"u1","lang":"en","verified":true,"follower_count":5,"truncated":false,"kind":"original","created_at":1,"daily_tweet_rate":2.5})";

std::string line(const std::string& text) {
  std::string s = kLine;
  s.replace(s.find("%s"), 2, text);
  return s;
}

}  // namespace

TEST(LoadRecords, EmptyInputGivesEmptyCorpus) {
  std::istringstream in("");
  EXPECT_TRUE(parse_records(in).empty());
}

TEST(LoadRecords, KeepsFileOrder) {
  std::istringstream in(line("one") + "\n" + line("two") + "\n" + line("three") + "\n");
  const Corpus c = parse_records(in);
  ASSERT_EQ(c.size(), 3u);
  EXPECT_EQ(c.records[0].text, "one");
  EXPECT_EQ(c.records[2].text, "three");
  EXPECT_EQ(c.split, Split::unsplit);
  EXPECT_EQ(c.records[0].daily_tweet_rate, 2.5);
}

TEST(LoadRecords, MissingFieldNamesLine) {
  std::string bad = line("x");
  bad.replace(bad.find("\"text\":\"x\","), 11, "");
  std::istringstream in(line("ok") + "\n" + bad + "\n");
  try {
    parse_records(in);
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_STREQ(e.what(), "line 2: missing field text");
  }
}

TEST(LoadRecords, MalformedJsonNamesLine) {
  std::istringstream in(line("ok") + "\n{not json\n");
  try {
    parse_records(in);
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos) << e.what();
  }
}

TEST(LoadRecords, LabelOverrideWins) {
  std::istringstream in(line("a") + "\n");
  EXPECT_EQ(parse_records(in, Label::machine).label, Label::machine);
}

TEST(LoadRecords, WriteThenReadRoundTrips) {
  Corpus c = corpus_of({"hello \"world\"", "tab\there", "emoji 😀"});
  c.records[1].kind = TweetKind::reply;
  c.records[2].lang = "de";
  std::stringstream ss;
  write_records(ss, c);
  const Corpus back = parse_records(ss);
  ASSERT_EQ(back.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(record_id(back.records[i]), record_id(c.records[i]));
  EXPECT_EQ(back.records[1].kind, TweetKind::reply);
  EXPECT_EQ(back.records[2].lang, "de");
}

TEST(Filter, RetweetExcluded) {
  Corpus c = corpus_of({"a", "b"});
  c.records[1].kind = TweetKind::retweet;
  const Corpus f = filter_pipeline(c, FilterPolicy{});
  ASSERT_EQ(f.size(), 1u);
  EXPECT_EQ(f.records[0].text, "a");
}

TEST(Filter, FollowerThresholdIsStrict) {
  Corpus c = corpus_of({"a", "b"});
  c.records[0].follower_count = 100000;
  c.records[1].follower_count = 99999;
  const Corpus f = filter_pipeline(c, FilterPolicy{});
  ASSERT_EQ(f.size(), 1u);
  EXPECT_EQ(f.records[0].text, "b");
}

TEST(Filter, EachPredicate) {
  Corpus c = corpus_of({"ok", "lang", "unverified", "trunc", "reply", "rate", "   "});
  c.records[1].lang = "es";
  c.records[2].verified = false;
  c.records[3].truncated = true;
  c.records[4].kind = TweetKind::quote;
  c.records[5].daily_tweet_rate = 20.5;
  const Corpus f = filter_pipeline(c, FilterPolicy{});
  ASSERT_EQ(f.size(), 1u);
  EXPECT_EQ(f.records[0].text, "ok");
  c.records[5].daily_tweet_rate = 20.0;  // inclusive
  EXPECT_EQ(filter_pipeline(c, FilterPolicy{}).size(), 2u);
}

TEST(Filter, DisabledPolicyIsIdentity) {
  Corpus c = corpus_of({"a", "b", "c"});
  c.records[0].kind = TweetKind::retweet;
  c.records[1].verified = false;
  c.records[2].follower_count = 10'000'000;
  const Corpus f = filter_pipeline(c, FilterPolicy::disabled());
  ASSERT_EQ(f.size(), c.size());
  for (std::size_t i = 0; i < c.size(); ++i) EXPECT_EQ(f.records[i].text, c.records[i].text);
}

TEST(Filter, IdempotentSubsequenceProperty) {
  Rng rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    Corpus c;
    for (int i = 0; i < 50; ++i) {
      TextRecord r = rec("t" + std::to_string(i), "u", i);
      r.verified = rng.bernoulli(0.8);
      r.lang = rng.bernoulli(0.9) ? "en" : "fr";
      r.follower_count = static_cast<std::int64_t>(rng.below(200000));
      r.truncated = rng.bernoulli(0.1);
      r.kind = static_cast<TweetKind>(rng.below(4));
      r.daily_tweet_rate = rng.uniform() * 40;
      c.records.push_back(r);
    }
    const Corpus once = filter_pipeline(c, FilterPolicy{});
    const Corpus twice = filter_pipeline(once, FilterPolicy{});
    ASSERT_EQ(once.size(), twice.size());
    std::size_t j = 0;
    for (const auto& r : c.records) {
      if (j < once.size() && record_id(r) == record_id(once.records[j])) ++j;
    }
    EXPECT_EQ(j, once.size()) << "output is not a subsequence";
  }
}

TEST(Split, TenRecordsHalve) {
  const Corpus c = corpus_of({"0", "1", "2", "3", "4", "5", "6", "7", "8", "9"});
  const auto s = split_corpus(c, 0.5, 7);
  EXPECT_EQ(s.train.size(), 5u);
  EXPECT_EQ(s.eval.size(), 5u);
  std::set<RecordId> ids;
  for (const auto& r : s.train.records) ids.insert(record_id(r));
  for (const auto& r : s.eval.records) EXPECT_FALSE(ids.count(record_id(r)));
}

TEST(Split, RoundHalfUp) {
  const auto s = split_corpus(corpus_of({"a", "b", "c"}), 0.5, 1);
  EXPECT_EQ(s.train.size(), 2u);
  EXPECT_EQ(s.eval.size(), 1u);
}

TEST(Split, DeterministicAndPartitions) {
  std::vector<std::string> texts;
  for (int i = 0; i < 101; ++i) texts.push_back("t" + std::to_string(i));
  const Corpus c = corpus_of(texts);
  const auto a = split_corpus(c, 0.3, 11);
  const auto b = split_corpus(c, 0.3, 11);
  std::stringstream sa, sb;
  write_records(sa, a.train);
  write_records(sb, b.train);
  EXPECT_EQ(sa.str(), sb.str());
  std::multiset<std::string> all;
  for (const auto& r : a.train.records) all.insert(r.text);
  for (const auto& r : a.eval.records) all.insert(r.text);
  EXPECT_EQ(all, std::multiset<std::string>(texts.begin(), texts.end()));
  EXPECT_EQ(a.train.size(), 30u);
}

TEST(Split, EmptyCorpus) {
  const auto s = split_corpus(Corpus{}, 0.5, 1);
  EXPECT_TRUE(s.train.empty());
  EXPECT_TRUE(s.eval.empty());
}

TEST(DetectionSets, TruncatesLargerSide) {
  std::vector<std::string> h, m;
  for (int i = 0; i < 100; ++i) h.push_back("h" + std::to_string(i));
  for (int i = 0; i < 80; ++i) m.push_back("m" + std::to_string(i));
  const Corpus human = corpus_of(h, Label::human);
  const Corpus machine = corpus_of(m, Label::machine);
  const auto sets = assemble_detection_sets(human, human, machine, machine, 3);
  ASSERT_EQ(sets.train.size(), 160u);
  int n_human = 0;
  for (std::size_t i = 0; i < sets.train.size(); ++i) {
    const bool is_h = sets.train.labels[i] == Label::human;
    n_human += is_h;
    EXPECT_EQ(sets.train.texts[i][0], is_h ? 'h' : 'm');
  }
  EXPECT_EQ(n_human, 80);
}

TEST(DetectionSets, EmptyInputErrors) {
  const Corpus human = corpus_of({"a"}, Label::human);
  Corpus machine;
  machine.label = Label::machine;
  try {
    assemble_detection_sets(human, human, machine, machine, 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_STREQ(e.what(), "cannot balance against empty corpus");
  }
}

TEST(Stats, Unigrams) {
  const auto s = corpus_stats(corpus_of({"a a b"}));
  EXPECT_EQ(s.record_count, 1u);
  EXPECT_DOUBLE_EQ(s.unigram_distribution.at("a"), 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(s.unigram_distribution.at("b"), 1.0 / 3.0);
}

TEST(Stats, EmptyAndAuthors) {
  const auto e = corpus_stats(Corpus{});
  EXPECT_EQ(e.record_count, 0u);
  EXPECT_TRUE(e.unigram_distribution.empty());
  Corpus c = corpus_of({"x", "y", "z"});
  c.records[0].author_id = c.records[1].author_id = "p";
  c.records[2].author_id = "q";
  EXPECT_EQ(corpus_stats(c).author_count, 2u);
}
