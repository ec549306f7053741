#pragma once

#include <compare>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace evl {

enum class Label { human, machine };
enum class Split { unsplit, train, eval };
enum class TweetKind { original, quote, reply, retweet };

std::string_view to_string(Label l);
std::string_view to_string(TweetKind k);
Label parse_label(std::string_view s);
TweetKind parse_tweet_kind(std::string_view s);

struct TextRecord {
  std::string text;
  std::string author_id;
  std::string lang = "en";
  bool verified = true;
  std::int64_t follower_count = 0;
  bool truncated = false;
  TweetKind kind = TweetKind::original;
  std::int64_t created_at = 0;  // UTC seconds
  double daily_tweet_rate = 0.0;
};

// Bookkeeping identity of a record: (author, timestamp, FNV-1a hash of text).
struct RecordId {
  std::string author_id;
  std::int64_t created_at = 0;
  std::uint64_t text_hash = 0;
  auto operator<=>(const RecordId&) const = default;
};

std::uint64_t fnv1a64(std::string_view s);
RecordId record_id(const TextRecord& r);

struct Corpus {
  std::vector<TextRecord> records;
  Label label = Label::human;
  Split split = Split::unsplit;

  std::size_t size() const { return records.size(); }
  bool empty() const { return records.empty(); }
  std::vector<std::string> texts() const;
};

// A predicate is disabled by setting its flag false or its threshold to nullopt.
struct FilterPolicy {
  bool require_english = true;
  bool require_verified = true;
  std::optional<std::int64_t> max_followers = 100000;  // strict: follower_count < max
  bool require_non_truncated = true;
  bool require_original = true;
  std::optional<double> max_daily_rate = 20.0;  // inclusive
  bool drop_blank = true;

  static FilterPolicy disabled();
  void validate() const;
};

bool passes(const TextRecord& r, const FilterPolicy& p);

// Reads one JSON object per line. Per-record `label` fields must agree;
// `label_override` wins over them. Without either the corpus is human.
Corpus load_records(const std::filesystem::path& path,
                    std::optional<Label> label_override = std::nullopt);
Corpus parse_records(std::istream& in, std::optional<Label> label_override = std::nullopt);
void write_records(const std::filesystem::path& path, const Corpus& c);
void write_records(std::ostream& out, const Corpus& c);

Corpus filter_pipeline(const Corpus& c, const FilterPolicy& p);

struct CorpusSplit {
  Corpus train;
  Corpus eval;
};

// |train| = floor(ratio * n + 0.5); both halves keep input order.
CorpusSplit split_corpus(const Corpus& c, double ratio, std::uint64_t seed);

struct LabeledSet {
  std::vector<std::string> texts;
  std::vector<Label> labels;
  std::size_t size() const { return texts.size(); }
};

struct DetectionSets {
  LabeledSet train;
  LabeledSet eval;
};

LabeledSet balance(const Corpus& human, const Corpus& machine, std::uint64_t seed);
DetectionSets assemble_detection_sets(const Corpus& real_train, const Corpus& real_eval,
                                      const Corpus& fake_train, const Corpus& fake_eval,
                                      std::uint64_t seed);

struct CorpusStats {
  std::size_t record_count = 0;
  std::size_t author_count = 0;
  std::size_t token_count = 0;
  std::map<std::string, double> unigram_distribution;
};

CorpusStats corpus_stats(const Corpus& c);
void write_stats_report(std::ostream& out, const CorpusStats& s, std::size_t top_n = 20);

}  // namespace evl
