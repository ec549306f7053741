#include "evl/text.hpp"

#include <cctype>

namespace evl::text {

std::u32string decode_utf8(std::string_view s) {
  std::u32string out;
  out.reserve(s.size());
  std::size_t i = 0;
  const auto byte = [&](std::size_t k) { return static_cast<unsigned char>(s[k]); };
  while (i < s.size()) {
    const unsigned char b0 = byte(i);
    int len = 0;
    char32_t cp = 0;
    if (b0 < 0x80) {
      out.push_back(b0);
      ++i;
      continue;
    } else if ((b0 & 0xE0) == 0xC0) {
      len = 2;
      cp = b0 & 0x1F;
    } else if ((b0 & 0xF0) == 0xE0) {
      len = 3;
      cp = b0 & 0x0F;
    } else if ((b0 & 0xF8) == 0xF0) {
      len = 4;
      cp = b0 & 0x07;
    } else {
      out.push_back(kReplacementChar);
      ++i;
      continue;
    }
    if (i + static_cast<std::size_t>(len) > s.size()) {
      out.push_back(kReplacementChar);
      ++i;
      continue;
    }
    bool ok = true;
    for (int k = 1; k < len; ++k) {
      const unsigned char b = byte(i + static_cast<std::size_t>(k));
      if ((b & 0xC0) != 0x80) {
        ok = false;
        break;
      }
      cp = (cp << 6) | (b & 0x3F);
    }
    static constexpr char32_t kMin[] = {0, 0, 0x80, 0x800, 0x10000};
    if (!ok || cp < kMin[len] || cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) {
      out.push_back(kReplacementChar);
      ++i;
      continue;
    }
    out.push_back(cp);
    i += static_cast<std::size_t>(len);
  }
  return out;
}

void append_utf8(std::string& out, char32_t cp) {
  if (cp < 0x80) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else if (cp < 0x10000) {
    out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else {
    out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  }
}

std::string encode_utf8(std::u32string_view s) {
  std::string out;
  out.reserve(s.size());
  for (char32_t cp : s) append_utf8(out, cp);
  return out;
}

bool is_emoji(char32_t cp) {
  return (cp >= 0x1F600 && cp <= 0x1F64F)     // Emoticons
         || (cp >= 0x1F300 && cp <= 0x1F5FF)  // Misc Symbols and Pictographs
         || (cp >= 0x1F680 && cp <= 0x1F6FF)  // Transport and Map
         || (cp >= 0x1F900 && cp <= 0x1F9FF);  // Supplemental Symbols and Pictographs
}

bool is_space(char32_t cp) {
  return cp == U' ' || (cp >= 0x09 && cp <= 0x0D) || cp == 0x85 || cp == 0xA0 || cp == 0x1680 ||
         (cp >= 0x2000 && cp <= 0x200A) || cp == 0x2028 || cp == 0x2029 || cp == 0x202F ||
         cp == 0x205F || cp == 0x3000;
}

bool is_ignorable(char32_t cp) {
  return cp == 0x200B || cp == 0x200C || cp == 0x200D || cp == 0x2060 || cp == 0xFEFF ||
         (cp >= 0xFE00 && cp <= 0xFE0F) || (cp >= 0x1F3FB && cp <= 0x1F3FF);
}

bool is_alnum(char32_t cp) {
  if (cp < 0x80) return std::isalnum(static_cast<int>(cp)) != 0;
  if (cp < 0xC0 || cp == 0xD7 || cp == 0xF7) return false;
  if (cp >= 0x2000 && cp <= 0x2BFF) return false;  // punctuation, arrows, math, dingbats
  if (cp >= 0x3000 && cp <= 0x303F) return false;  // CJK punctuation
  if (cp >= 0xFE00 && cp <= 0xFE6F) return false;
  if (cp >= 0xFF00 && cp <= 0xFF0F) return false;
  if (cp == kReplacementChar) return false;
  if (cp >= 0x1F000) return false;  // emoji and pictographic planes
  return !is_space(cp);
}

std::vector<Segment> segment(std::string_view s) {
  std::vector<Segment> out;
  const std::u32string cps = decode_utf8(s);
  std::size_t i = 0;
  while (i < cps.size()) {
    const char32_t cp = cps[i];
    if (is_space(cp) || is_ignorable(cp)) {
      ++i;
    } else if (is_alnum(cp)) {
      std::size_t j = i;
      while (j < cps.size() && is_alnum(cps[j])) ++j;
      out.push_back({SegmentKind::word, encode_utf8(std::u32string_view(cps).substr(i, j - i))});
      i = j;
    } else {
      std::string piece;
      append_utf8(piece, cp);
      out.push_back({is_emoji(cp) ? SegmentKind::emoji : SegmentKind::special, std::move(piece)});
      ++i;
    }
  }
  return out;
}

Composition compose(std::string_view s) {
  Composition c;
  const std::u32string cps = decode_utf8(s);
  bool in_word = false;
  for (char32_t cp : cps) {
    if (is_space(cp) || is_ignorable(cp)) {
      in_word = false;
      continue;
    }
    ++c.non_space_chars;
    if (is_alnum(cp)) {
      if (!in_word) ++c.words;
      in_word = true;
      continue;
    }
    in_word = false;
    if (is_emoji(cp)) {
      ++c.emojis;
    } else {
      ++c.specials;
      if (cp == kReplacementChar) ++c.replacement_chars;
    }
  }
  return c;
}

std::vector<std::string> words(std::string_view s) {
  std::vector<std::string> out;
  for (auto& seg : segment(s)) {
    if (seg.kind == SegmentKind::word) out.push_back(std::move(seg.text));
  }
  return out;
}

std::vector<std::string> split_whitespace(std::string_view s) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
    std::size_t j = i;
    while (j < s.size() && !std::isspace(static_cast<unsigned char>(s[j]))) ++j;
    if (j > i) out.emplace_back(s.substr(i, j - i));
    i = j;
  }
  return out;
}

std::string trim(std::string_view s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

std::string to_lower_ascii(std::string_view s) {
  std::string out(s);
  for (char& ch : out) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  return out;
}

}  // namespace evl::text
