#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "evl/corpus.hpp"

namespace evl {

using TokenId = std::int32_t;

// Word-level tokenizer. Words are alphanumeric runs (internal apostrophes
// kept), every other non-space code point is its own token, so punctuation
// and emojis are single tokens. Ids 0-3 are reserved for specials.
class Tokenizer {
 public:
  static constexpr TokenId kBos = 0;
  static constexpr TokenId kEos = 1;
  static constexpr TokenId kUnk = 2;
  static constexpr TokenId kPad = 3;
  static constexpr std::size_t kNumSpecials = 4;

  Tokenizer();

  // Most frequent pieces up to max_size - 4, ties broken lexicographically.
  static Tokenizer build(std::span<const std::string> texts, std::size_t max_size);
  static std::vector<std::string> split(std::string_view text);

  std::vector<TokenId> encode(std::string_view text) const;  // BOS ... EOS
  std::vector<TokenId> encode_pieces(std::string_view text) const;
  // Strips BOS/EOS/PAD; UNK renders as U+FFFD. Throws on ids outside the vocabulary.
  std::string decode(std::span<const TokenId> ids) const;

  std::size_t size() const { return id_to_token_.size(); }
  const std::string& token(TokenId id) const;
  std::optional<TokenId> find(std::string_view token) const;
  static bool is_special(TokenId id) { return id >= 0 && id < static_cast<TokenId>(kNumSpecials); }

  void save(const std::filesystem::path& path) const;
  static Tokenizer load(const std::filesystem::path& path);

  bool operator==(const Tokenizer& other) const { return id_to_token_ == other.id_to_token_; }

 private:
  void add(std::string token);

  std::vector<std::string> id_to_token_;
  std::unordered_map<std::string, TokenId> token_to_id_;
};

Tokenizer build_vocab(const Corpus& c, std::size_t max_size);

}  // namespace evl
