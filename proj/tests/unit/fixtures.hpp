#pragma once

#include <unistd.h>

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "evl/corpus.hpp"
#include "evl/lm.hpp"
#include "evl/tokenizer.hpp"

namespace evl::testing {

inline TextRecord rec(std::string text, std::string author = "a1", std::int64_t t = 0) {
  TextRecord r;
  r.text = std::move(text);
  r.author_id = std::move(author);
  r.created_at = t;
  r.follower_count = 10;
  r.daily_tweet_rate = 1.0;
  return r;
}

inline Corpus corpus_of(const std::vector<std::string>& texts, Label l = Label::human) {
  Corpus c;
  c.label = l;
  std::int64_t t = 0;
  for (const auto& s : texts) c.records.push_back(rec(s, "a" + std::to_string(t % 3), t++));
  return c;
}

// Removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& name) {
    path_ = std::filesystem::temp_directory_path() / ("evl-" + name + "-" + std::to_string(::getpid()));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& f) const { return path_ / f; }

 private:
  std::filesystem::path path_;
};

inline void write_text(const std::filesystem::path& p, const std::string& s) {
  std::ofstream out(p, std::ios::binary);
  out << s;
}

inline std::string read_text(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline nn::Architecture tiny_arch(int vocab, bool causal = true) {
  nn::Architecture a;
  a.vocab_size = vocab;
  a.dim = 8;
  a.layers = 2;
  a.heads = 2;
  a.context = 12;
  a.causal = causal;
  return a;
}

// A small LM trained until it has memorized one sentence.
struct Memorized {
  Tokenizer tok;
  std::vector<TokenId> ids;
  LmPolicy lm;
};

inline Memorized memorize(const std::string& sentence, int epochs = 150) {
  const Corpus c = corpus_of({sentence});
  Tokenizer tok = build_vocab(c, 50);
  LmConfig cfg;
  cfg.embedding_dim = 16;
  cfg.layers = 1;
  cfg.heads = 2;
  cfg.context_len = 16;
  cfg.epochs = epochs;
  cfg.batch_size = 1;
  cfg.learning_rate = 0.1;
  cfg.holdout_fraction = 0.0;
  LmPolicy lm = train_lm(c, tok, cfg);
  auto ids = tok.encode(sentence);
  return {std::move(tok), std::move(ids), std::move(lm)};
}

}  // namespace evl::testing
