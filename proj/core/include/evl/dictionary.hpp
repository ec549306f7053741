#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>
#include <unordered_set>

namespace evl {

// Lowercase word list; lookups are case-insensitive.
class Dictionary {
 public:
  static Dictionary embedded();
  static Dictionary load(const std::filesystem::path& path);
  static Dictionary from_text(std::string_view one_word_per_line);

  bool contains(std::string_view word) const;
  std::size_t size() const { return words_.size(); }
  bool empty() const { return words_.empty(); }

 private:
  std::unordered_set<std::string> words_;
};

}  // namespace evl
