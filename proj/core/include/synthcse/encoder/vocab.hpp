#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace synthcse::encoder {

// Token <-> id map with ids dense in [0, size()). Ids 0..2 are reserved.
class Vocab {
 public:
  static constexpr std::size_t kPad = 0;
  static constexpr std::size_t kUnk = 1;
  static constexpr std::size_t kCls = 2;

  Vocab();

  // tokens[i] receives id i; the first three entries must be the reserved
  // markers "[PAD]", "[UNK]", "[CLS]".
  static Vocab from_tokens(std::vector<std::string> tokens);

  // Reserved ids followed by the sorted distinct word tokens of texts.
  static Vocab build(std::span<const std::string> texts);

  std::size_t id(std::string_view token) const;
  bool contains(std::string_view token) const;
  std::size_t size() const { return tokens_.size(); }
  const std::vector<std::string>& tokens() const { return tokens_; }

  bool operator==(const Vocab& other) const { return tokens_ == other.tokens_; }

 private:
  explicit Vocab(std::vector<std::string> tokens);

  std::vector<std::string> tokens_;
  std::unordered_map<std::string, std::size_t> index_;
};

struct TokenizedText {
  std::vector<std::size_t> ids;  // exactly max_len entries
  std::size_t length = 0;        // non-pad prefix, including [CLS]
};

// Lowercased word tokens mapped through vocab, [CLS] prepended, truncated and
// padded to max_len.
TokenizedText tokenize(std::string_view text, const Vocab& vocab, std::size_t max_len);

}  // namespace synthcse::encoder
