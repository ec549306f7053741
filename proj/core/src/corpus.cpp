#include "evl/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <set>
#include <sstream>

#include "evl/error.hpp"
#include "evl/rng.hpp"
#include "evl/text.hpp"
#include "json.hpp"

namespace evl {

using json = nlohmann::json;

std::string_view to_string(Label l) { return l == Label::human ? "human" : "machine"; }

std::string_view to_string(TweetKind k) {
  switch (k) {
    case TweetKind::original: return "original";
    case TweetKind::quote: return "quote";
    case TweetKind::reply: return "reply";
    case TweetKind::retweet: return "retweet";
  }
  return "original";
}

Label parse_label(std::string_view s) {
  if (s == "human") return Label::human;
  if (s == "machine") return Label::machine;
  throw ConfigError("unknown label '" + std::string(s) + "' (expected human or machine)");
}

TweetKind parse_tweet_kind(std::string_view s) {
  if (s == "original") return TweetKind::original;
  if (s == "quote") return TweetKind::quote;
  if (s == "reply") return TweetKind::reply;
  if (s == "retweet") return TweetKind::retweet;
  throw Error("unknown tweet kind '" + std::string(s) + "'");
}

std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

RecordId record_id(const TextRecord& r) { return {r.author_id, r.created_at, fnv1a64(r.text)}; }

std::vector<std::string> Corpus::texts() const {
  std::vector<std::string> out;
  out.reserve(records.size());
  for (const auto& r : records) out.push_back(r.text);
  return out;
}

FilterPolicy FilterPolicy::disabled() {
  FilterPolicy p;
  p.require_english = false;
  p.require_verified = false;
  p.max_followers.reset();
  p.require_non_truncated = false;
  p.require_original = false;
  p.max_daily_rate.reset();
  p.drop_blank = false;
  return p;
}

void FilterPolicy::validate() const {
  if (max_followers && *max_followers <= 0) throw ConfigError("max_followers must be positive");
  if (max_daily_rate && !(*max_daily_rate > 0.0)) throw ConfigError("max_daily_rate must be positive");
}

bool passes(const TextRecord& r, const FilterPolicy& p) {
  if (p.require_english && r.lang != "en") return false;
  if (p.require_verified && !r.verified) return false;
  if (p.max_followers && r.follower_count >= *p.max_followers) return false;
  if (p.require_non_truncated && r.truncated) return false;
  if (p.require_original && r.kind != TweetKind::original) return false;
  if (p.max_daily_rate && r.daily_tweet_rate > *p.max_daily_rate) return false;
  if (p.drop_blank && text::trim(r.text).empty()) return false;
  return true;
}

namespace {

const json& require(const json& obj, const char* field, std::size_t line) {
  auto it = obj.find(field);
  if (it == obj.end()) {
    throw Error("line " + std::to_string(line) + ": missing field " + field);
  }
  return *it;
}

[[noreturn]] void wrong_type(const char* field, std::size_t line) {
  throw Error("line " + std::to_string(line) + ": field " + field + " has the wrong type");
}

std::string get_string(const json& obj, const char* field, std::size_t line) {
  const json& v = require(obj, field, line);
  if (!v.is_string()) wrong_type(field, line);
  return v.get<std::string>();
}

bool get_bool(const json& obj, const char* field, std::size_t line) {
  const json& v = require(obj, field, line);
  if (!v.is_boolean()) wrong_type(field, line);
  return v.get<bool>();
}

std::int64_t get_int(const json& obj, const char* field, std::size_t line) {
  const json& v = require(obj, field, line);
  if (!v.is_number_integer()) wrong_type(field, line);
  return v.get<std::int64_t>();
}

double get_number(const json& obj, const char* field, std::size_t line) {
  const json& v = require(obj, field, line);
  if (!v.is_number()) wrong_type(field, line);
  return v.get<double>();
}

TextRecord parse_record(const json& obj, std::size_t line) {
  if (!obj.is_object()) throw Error("line " + std::to_string(line) + ": expected a JSON object");
  TextRecord r;
  r.text = get_string(obj, "text", line);
  r.author_id = get_string(obj, "author_id", line);
  r.lang = get_string(obj, "lang", line);
  r.verified = get_bool(obj, "verified", line);
  r.follower_count = get_int(obj, "follower_count", line);
  if (r.follower_count < 0) {
    throw Error("line " + std::to_string(line) + ": follower_count must be nonnegative");
  }
  r.truncated = get_bool(obj, "truncated", line);
  try {
    r.kind = parse_tweet_kind(get_string(obj, "kind", line));
  } catch (const Error& e) {
    if (std::string_view(e.what()).starts_with("line")) throw;
    throw Error("line " + std::to_string(line) + ": " + e.what());
  }
  r.created_at = get_int(obj, "created_at", line);
  r.daily_tweet_rate = get_number(obj, "daily_tweet_rate", line);
  if (!(r.daily_tweet_rate >= 0.0)) {
    throw Error("line " + std::to_string(line) + ": daily_tweet_rate must be nonnegative");
  }
  return r;
}

}  // namespace

Corpus parse_records(std::istream& in, std::optional<Label> label_override) {
  Corpus c;
  std::optional<Label> seen;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    json obj;
    try {
      obj = json::parse(line);
    } catch (const json::parse_error&) {
      throw Error("line " + std::to_string(line_no) + ": malformed JSON");
    }
    c.records.push_back(parse_record(obj, line_no));
    if (auto it = obj.find("label"); it != obj.end() && !label_override) {
      if (!it->is_string()) wrong_type("label", line_no);
      Label l;
      try {
        l = parse_label(it->get<std::string>());
      } catch (const Error& e) {
        throw Error("line " + std::to_string(line_no) + ": " + e.what());
      }
      if (seen && *seen != l) {
        throw Error("line " + std::to_string(line_no) + ": label differs from earlier records");
      }
      seen = l;
    }
  }
  c.label = label_override.value_or(seen.value_or(Label::human));
  return c;
}

Corpus load_records(const std::filesystem::path& path, std::optional<Label> label_override) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  return parse_records(in, label_override);
}

void write_records(std::ostream& out, const Corpus& c) {
  for (const auto& r : c.records) {
    // Field order is fixed so output is byte-stable.
    json obj = json::object();
    obj["text"] = r.text;
    obj["author_id"] = r.author_id;
    obj["lang"] = r.lang;
    obj["verified"] = r.verified;
    obj["follower_count"] = r.follower_count;
    obj["truncated"] = r.truncated;
    obj["kind"] = std::string(to_string(r.kind));
    obj["created_at"] = r.created_at;
    obj["daily_tweet_rate"] = r.daily_tweet_rate;
    obj["label"] = std::string(to_string(c.label));
    out << obj.dump(-1, ' ', false, json::error_handler_t::replace) << '\n';
  }
}

void write_records(const std::filesystem::path& path, const Corpus& c) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  write_records(out, c);
}

Corpus filter_pipeline(const Corpus& c, const FilterPolicy& p) {
  Corpus out;
  out.label = c.label;
  out.split = c.split;
  for (const auto& r : c.records) {
    if (passes(r, p)) out.records.push_back(r);
  }
  return out;
}

CorpusSplit split_corpus(const Corpus& c, double ratio, std::uint64_t seed) {
  if (!(ratio > 0.0 && ratio < 1.0)) throw ConfigError("split ratio must lie in (0, 1)");
  const std::size_t n = c.size();
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  Rng rng(seed);
  rng.shuffle(order);
  const auto n_train = static_cast<std::size_t>(std::floor(ratio * static_cast<double>(n) + 0.5));
  std::vector<std::size_t> train_idx(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
  std::vector<std::size_t> eval_idx(order.begin() + static_cast<std::ptrdiff_t>(n_train), order.end());
  std::sort(train_idx.begin(), train_idx.end());
  std::sort(eval_idx.begin(), eval_idx.end());

  CorpusSplit s;
  s.train.label = s.eval.label = c.label;
  s.train.split = Split::train;
  s.eval.split = Split::eval;
  for (auto i : train_idx) s.train.records.push_back(c.records[i]);
  for (auto i : eval_idx) s.eval.records.push_back(c.records[i]);
  return s;
}

LabeledSet balance(const Corpus& human, const Corpus& machine, std::uint64_t seed) {
  if (human.empty() || machine.empty()) throw Error("cannot balance against empty corpus");
  if (human.label != Label::human) throw Error("real corpus is not labeled human");
  if (machine.label != Label::machine) throw Error("fake corpus is not labeled machine");
  const std::size_t n = std::min(human.size(), machine.size());
  std::vector<std::pair<const std::string*, Label>> items;
  items.reserve(2 * n);
  for (std::size_t i = 0; i < n; ++i) {
    items.emplace_back(&human.records[i].text, Label::human);
    items.emplace_back(&machine.records[i].text, Label::machine);
  }
  Rng rng(seed);
  rng.shuffle(items);
  LabeledSet out;
  out.texts.reserve(items.size());
  out.labels.reserve(items.size());
  for (const auto& [t, l] : items) {
    out.texts.push_back(*t);
    out.labels.push_back(l);
  }
  return out;
}

DetectionSets assemble_detection_sets(const Corpus& real_train, const Corpus& real_eval,
                                      const Corpus& fake_train, const Corpus& fake_eval,
                                      std::uint64_t seed) {
  DetectionSets s;
  s.train = balance(real_train, fake_train, derive_seed(seed, 1));
  s.eval = balance(real_eval, fake_eval, derive_seed(seed, 2));
  return s;
}

CorpusStats corpus_stats(const Corpus& c) {
  CorpusStats s;
  s.record_count = c.size();
  std::set<std::string> authors;
  std::map<std::string, std::size_t> counts;
  for (const auto& r : c.records) {
    authors.insert(r.author_id);
    for (auto& tok : text::split_whitespace(r.text)) {
      ++counts[tok];
      ++s.token_count;
    }
  }
  s.author_count = authors.size();
  for (const auto& [tok, n] : counts) {
    s.unigram_distribution[tok] = static_cast<double>(n) / static_cast<double>(s.token_count);
  }
  return s;
}

void write_stats_report(std::ostream& out, const CorpusStats& s, std::size_t top_n) {
  out << "record_count = " << s.record_count << '\n';
  out << "author_count = " << s.author_count << '\n';
  out << "token_count = " << s.token_count << '\n';
  out << "type_count = " << s.unigram_distribution.size() << '\n';
  std::vector<std::pair<std::string, double>> top(s.unigram_distribution.begin(),
                                                  s.unigram_distribution.end());
  std::stable_sort(top.begin(), top.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  if (top.size() > top_n) top.resize(top_n);
  std::ostringstream p;
  for (const auto& [tok, prob] : top) {
    p.str("");
    p << std::setprecision(6) << prob;
    out << "unigram[" << tok << "] = " << p.str() << '\n';
  }
}

}  // namespace evl
