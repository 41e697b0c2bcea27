#include "synthcse/common/text.hpp"

#include <cctype>

namespace synthcse {

namespace {

bool is_space(unsigned char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; }

bool is_punct(unsigned char c) { return c < 0x80 && std::ispunct(c) != 0; }

}  // namespace

std::string to_lower_ascii(std::string_view text) {
  std::string out(text);
  for (char& c : out) {
    const auto u = static_cast<unsigned char>(c);
    if (u >= 'A' && u <= 'Z') c = static_cast<char>(u - 'A' + 'a');
  }
  return out;
}

std::string trim(std::string_view text) {
  std::size_t begin = 0;
  std::size_t end = text.size();
  while (begin < end && is_space(static_cast<unsigned char>(text[begin]))) ++begin;
  while (end > begin && is_space(static_cast<unsigned char>(text[end - 1]))) --end;
  return std::string(text.substr(begin, end - begin));
}

std::vector<std::string> word_tokens(std::string_view text) {
  std::vector<std::string> tokens;
  const std::string lowered = to_lower_ascii(text);
  std::size_t i = 0;
  while (i < lowered.size()) {
    while (i < lowered.size() && is_space(static_cast<unsigned char>(lowered[i]))) ++i;
    std::size_t j = i;
    while (j < lowered.size() && !is_space(static_cast<unsigned char>(lowered[j]))) ++j;
    std::size_t b = i;
    std::size_t e = j;
    while (b < e && is_punct(static_cast<unsigned char>(lowered[b]))) ++b;
    while (e > b && is_punct(static_cast<unsigned char>(lowered[e - 1]))) --e;
    if (e > b) tokens.emplace_back(lowered.substr(b, e - b));
    i = j;
  }
  return tokens;
}

std::vector<std::string> split(std::string_view text, char sep) {
  std::vector<std::string> parts;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= text.size(); ++i) {
    if (i == text.size() || text[i] == sep) {
      parts.emplace_back(text.substr(start, i - start));
      start = i + 1;
    }
  }
  return parts;
}

std::string join(const std::vector<std::string>& parts, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i > 0) out += sep;
    out += parts[i];
  }
  return out;
}

std::size_t count_occurrences(std::string_view haystack, std::string_view needle) {
  if (needle.empty()) return 0;
  std::size_t count = 0;
  std::size_t pos = haystack.find(needle);
  while (pos != std::string_view::npos) {
    ++count;
    pos = haystack.find(needle, pos + needle.size());
  }
  return count;
}

}  // namespace synthcse
