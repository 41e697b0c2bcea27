#include "synthcse/encoder/vocab.hpp"

#include <algorithm>
#include <set>
#include <stdexcept>

#include "synthcse/common/text.hpp"

namespace synthcse::encoder {

namespace {
const std::vector<std::string> kReserved = {"[PAD]", "[UNK]", "[CLS]"};
}

Vocab::Vocab() : Vocab(kReserved) {}

Vocab::Vocab(std::vector<std::string> tokens) : tokens_(std::move(tokens)) {
  if (tokens_.size() < kReserved.size() || !std::equal(kReserved.begin(), kReserved.end(), tokens_.begin())) {
    throw std::invalid_argument("vocab: the first ids must be [PAD], [UNK], [CLS]");
  }
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    if (!index_.emplace(tokens_[i], i).second) {
      throw std::invalid_argument("vocab: duplicate token '" + tokens_[i] + "'");
    }
  }
}

Vocab Vocab::from_tokens(std::vector<std::string> tokens) { return Vocab(std::move(tokens)); }

Vocab Vocab::build(std::span<const std::string> texts) {
  std::set<std::string> words;
  for (const std::string& t : texts) {
    for (std::string& w : word_tokens(t)) words.insert(std::move(w));
  }
  std::vector<std::string> tokens = kReserved;
  for (const std::string& w : words) {
    if (std::find(kReserved.begin(), kReserved.end(), w) == kReserved.end()) tokens.push_back(w);
  }
  return from_tokens(std::move(tokens));
}

std::size_t Vocab::id(std::string_view token) const {
  const auto it = index_.find(std::string(token));
  return it == index_.end() ? kUnk : it->second;
}

bool Vocab::contains(std::string_view token) const { return index_.contains(std::string(token)); }

TokenizedText tokenize(std::string_view text, const Vocab& vocab, std::size_t max_len) {
  if (max_len < 2) throw std::invalid_argument("tokenize: max_len must be at least 2");
  TokenizedText out;
  out.ids.assign(max_len, Vocab::kPad);
  out.ids[0] = Vocab::kCls;
  out.length = 1;
  for (const std::string& w : word_tokens(text)) {
    if (out.length == max_len) break;
    out.ids[out.length++] = vocab.id(w);
  }
  return out;
}

}  // namespace synthcse::encoder
