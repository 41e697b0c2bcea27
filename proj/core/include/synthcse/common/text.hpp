#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace synthcse {

std::string to_lower_ascii(std::string_view text);
std::string trim(std::string_view text);

// The single word-token definition shared by the encoder tokenizer and the
// lexical-overlap metric: ASCII-lowercase, split on whitespace, strip leading
// and trailing ASCII punctuation from each token, drop tokens left empty.
std::vector<std::string> word_tokens(std::string_view text);

std::vector<std::string> split(std::string_view text, char sep);
std::string join(const std::vector<std::string>& parts, std::string_view sep);

// Counts non-overlapping occurrences of needle in haystack.
std::size_t count_occurrences(std::string_view haystack, std::string_view needle);

}  // namespace synthcse
