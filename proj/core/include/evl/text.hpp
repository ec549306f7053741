#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

// UTF-8 handling and the shared text segmenter.
//
// Segmentation rules:
//   word    maximal run of alphanumeric code points
//   emoji   one code point from the Emoticons, Misc Symbols & Pictographs,
//           Transport & Map or Supplemental Symbols & Pictographs blocks
//   special any other printable, non-whitespace code point
// Zero-width joiners and variation selectors are ignored.
namespace evl::text {

inline constexpr char32_t kReplacementChar = 0xFFFD;

// Invalid byte sequences decode to U+FFFD, one per offending byte.
std::u32string decode_utf8(std::string_view s);
void append_utf8(std::string& out, char32_t cp);
std::string encode_utf8(std::u32string_view s);

bool is_emoji(char32_t cp);
bool is_space(char32_t cp);
bool is_ignorable(char32_t cp);
bool is_alnum(char32_t cp);
inline bool is_digit(char32_t cp) { return cp >= U'0' && cp <= U'9'; }

enum class SegmentKind { word, emoji, special };

struct Segment {
  SegmentKind kind;
  std::string text;
};

std::vector<Segment> segment(std::string_view s);

struct Composition {
  std::size_t words = 0;
  std::size_t emojis = 0;
  std::size_t specials = 0;           // emojis excluded
  std::size_t replacement_chars = 0;  // U+FFFD occurrences (also counted in specials)
  std::size_t non_space_chars = 0;    // every non-whitespace, non-ignorable code point
};

Composition compose(std::string_view s);

std::vector<std::string> words(std::string_view s);
std::vector<std::string> split_whitespace(std::string_view s);
std::string trim(std::string_view s);
std::string to_lower_ascii(std::string_view s);

}  // namespace evl::text
