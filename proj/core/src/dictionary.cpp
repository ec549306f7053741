#include "evl/dictionary.hpp"

#include <fstream>
#include <sstream>

#include "evl/error.hpp"
#include "evl/text.hpp"

namespace evl {

namespace detail {
extern const std::string_view kEmbeddedDictionary;
}

Dictionary Dictionary::from_text(std::string_view body) {
  Dictionary d;
  std::size_t pos = 0;
  while (pos < body.size()) {
    auto end = body.find('\n', pos);
    if (end == std::string_view::npos) end = body.size();
    auto w = text::to_lower_ascii(text::trim(body.substr(pos, end - pos)));
    if (!w.empty()) d.words_.insert(std::move(w));
    pos = end + 1;
  }
  return d;
}

Dictionary Dictionary::embedded() {
  static const Dictionary d = from_text(detail::kEmbeddedDictionary);
  return d;
}

Dictionary Dictionary::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open dictionary " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  Dictionary d = from_text(ss.str());
  if (d.empty()) throw Error("dictionary " + path.string() + " is empty");
  return d;
}

bool Dictionary::contains(std::string_view word) const {
  return words_.count(text::to_lower_ascii(word)) > 0;
}

}  // namespace evl
