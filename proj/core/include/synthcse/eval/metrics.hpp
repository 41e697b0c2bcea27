#pragma once

#include <cstddef>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace synthcse::eval {

using Embedding = std::vector<double>;

// 1-based ranks; tied values share the mean of the ranks they span.
std::vector<double> average_ranks(std::span<const double> values);

// Pearson correlation of average ranks. Throws std::invalid_argument for
// mismatched or short input, std::domain_error when either side has zero
// rank variance.
double spearman(std::span<const double> xs, std::span<const double> ys);

double pearson(std::span<const double> xs, std::span<const double> ys);

// 2|A∩B| / (|A|+|B|) over word-token sets; 1.0 when both are empty.
double dice(std::string_view a, std::string_view b);

// Copy scaled to unit length; throws std::domain_error on a zero vector.
Embedding normalized(std::span<const double> v);

// Mean squared distance between normalized pair members. xs[i] pairs with ys[i].
double alignment(std::span<const Embedding> xs, std::span<const Embedding> ys);

// log of the mean of exp(-2 d^2) over unordered pairs i < j of normalized
// embeddings.
double uniformity(std::span<const Embedding> embeddings);

// Binary-gain nDCG. nullopt when relevant is empty.
std::optional<double> ndcg_at_k(std::span<const std::string> ranked, const std::set<std::string>& relevant,
                                std::size_t k);
std::optional<double> recall_at_k(std::span<const std::string> ranked, const std::set<std::string>& relevant,
                                  std::size_t k);

double cosine(std::span<const double> a, std::span<const double> b);

}  // namespace synthcse::eval
