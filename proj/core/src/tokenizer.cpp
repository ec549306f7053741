#include "evl/tokenizer.hpp"

#include <algorithm>
#include <fstream>
#include <map>

#include "evl/error.hpp"
#include "evl/text.hpp"

namespace evl {

namespace {

constexpr const char* kSpecialNames[] = {"<bos>", "<eos>", "<unk>", "<pad>"};

bool is_apostrophe(char32_t cp) { return cp == U'\'' || cp == 0x2019; }

bool attaches_left(std::string_view tok) {
  static constexpr std::string_view kLeft[] = {".", ",", "!", "?", ":", ";", ")", "%", "…"};
  return std::find(std::begin(kLeft), std::end(kLeft), tok) != std::end(kLeft);
}

bool attaches_right(std::string_view tok) {
  static constexpr std::string_view kRight[] = {"#", "@", "(", "$"};
  return std::find(std::begin(kRight), std::end(kRight), tok) != std::end(kRight);
}

}  // namespace

Tokenizer::Tokenizer() {
  for (const char* name : kSpecialNames) add(name);
}

void Tokenizer::add(std::string token) {
  const auto id = static_cast<TokenId>(id_to_token_.size());
  token_to_id_.emplace(token, id);
  id_to_token_.push_back(std::move(token));
}

std::vector<std::string> Tokenizer::split(std::string_view s) {
  std::vector<std::string> out;
  const std::u32string cps = text::decode_utf8(s);
  std::size_t i = 0;
  while (i < cps.size()) {
    const char32_t cp = cps[i];
    if (text::is_space(cp) || text::is_ignorable(cp)) {
      ++i;
      continue;
    }
    if (text::is_alnum(cp)) {
      std::size_t j = i;
      while (j < cps.size()) {
        if (text::is_alnum(cps[j])) {
          ++j;
        } else if (is_apostrophe(cps[j]) && j + 1 < cps.size() && text::is_alnum(cps[j + 1])) {
          j += 2;
        } else {
          break;
        }
      }
      out.push_back(text::encode_utf8(std::u32string_view(cps).substr(i, j - i)));
      i = j;
      continue;
    }
    std::string piece;
    text::append_utf8(piece, cp);
    out.push_back(std::move(piece));
    ++i;
  }
  return out;
}

Tokenizer Tokenizer::build(std::span<const std::string> texts, std::size_t max_size) {
  if (max_size < kNumSpecials) throw ConfigError("vocabulary size must be at least 4");
  std::map<std::string, std::size_t> counts;
  for (const auto& t : texts) {
    for (auto& piece : split(t)) ++counts[std::move(piece)];
  }
  std::vector<std::pair<std::string, std::size_t>> ranked(counts.begin(), counts.end());
  // counts is lexicographically ordered, so a stable sort by count keeps the tie rule.
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  Tokenizer tok;
  const std::size_t budget = max_size - kNumSpecials;
  for (std::size_t i = 0; i < ranked.size() && i < budget; ++i) tok.add(ranked[i].first);
  return tok;
}

std::vector<TokenId> Tokenizer::encode_pieces(std::string_view text) const {
  std::vector<TokenId> ids;
  for (const auto& piece : split(text)) {
    auto it = token_to_id_.find(piece);
    ids.push_back(it == token_to_id_.end() ? kUnk : it->second);
  }
  return ids;
}

std::vector<TokenId> Tokenizer::encode(std::string_view text) const {
  std::vector<TokenId> ids{kBos};
  auto body = encode_pieces(text);
  ids.insert(ids.end(), body.begin(), body.end());
  ids.push_back(kEos);
  return ids;
}

std::string Tokenizer::decode(std::span<const TokenId> ids) const {
  std::string out;
  std::string_view prev;
  for (TokenId id : ids) {
    if (id < 0 || static_cast<std::size_t>(id) >= id_to_token_.size()) {
      throw Error("token id " + std::to_string(id) + " is outside the vocabulary");
    }
    if (id == kBos || id == kEos || id == kPad) continue;
    std::string piece;
    if (id == kUnk) {
      text::append_utf8(piece, text::kReplacementChar);
    } else {
      piece = id_to_token_[static_cast<std::size_t>(id)];
    }
    if (!out.empty() && !attaches_left(piece) && !attaches_right(prev)) out.push_back(' ');
    out += piece;
    prev = id == kUnk ? std::string_view{} : std::string_view(id_to_token_[static_cast<std::size_t>(id)]);
  }
  return out;
}

const std::string& Tokenizer::token(TokenId id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= id_to_token_.size()) {
    throw Error("token id " + std::to_string(id) + " is outside the vocabulary");
  }
  return id_to_token_[static_cast<std::size_t>(id)];
}

std::optional<TokenId> Tokenizer::find(std::string_view token) const {
  auto it = token_to_id_.find(std::string(token));
  if (it == token_to_id_.end()) return std::nullopt;
  return it->second;
}

void Tokenizer::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  for (std::size_t i = 0; i < id_to_token_.size(); ++i) out << i << '\t' << id_to_token_[i] << '\n';
}

Tokenizer Tokenizer::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  Tokenizer tok;
  tok.id_to_token_.clear();
  tok.token_to_id_.clear();
  std::string line;
  std::size_t expected = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) throw Error(path.string() + ": malformed tokenizer line");
    if (std::stoul(line.substr(0, tab)) != expected) {
      throw Error(path.string() + ": tokenizer ids must be dense and sorted");
    }
    tok.add(line.substr(tab + 1));
    ++expected;
  }
  if (tok.size() < kNumSpecials) throw Error(path.string() + ": tokenizer lacks special tokens");
  for (std::size_t i = 0; i < kNumSpecials; ++i) {
    if (tok.id_to_token_[i] != kSpecialNames[i]) throw Error(path.string() + ": bad special token");
  }
  return tok;
}

Tokenizer build_vocab(const Corpus& c, std::size_t max_size) {
  const auto texts = c.texts();
  return Tokenizer::build(texts, max_size);
}

}  // namespace evl
