#include "synthcse/eval/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "synthcse/common/text.hpp"

namespace synthcse::eval {

std::vector<double> average_ranks(std::span<const double> values) {
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i + 1;
    while (j < n && values[order[j]] == values[order[i]]) ++j;
    const double rank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
    for (std::size_t t = i; t < j; ++t) ranks[order[t]] = rank;
    i = j;
  }
  return ranks;
}

double pearson(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size()) throw std::invalid_argument("correlation: inputs differ in length");
  if (xs.size() < 2) throw std::invalid_argument("correlation: need at least 2 points");
  const double n = static_cast<double>(xs.size());
  const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
  const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double dx = xs[i] - mx;
    const double dy = ys[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) throw std::domain_error("correlation undefined: an input has zero variance");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

double spearman(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size()) throw std::invalid_argument("spearman: inputs differ in length");
  if (xs.size() < 2) throw std::invalid_argument("spearman: need at least 2 points");
  for (double v : xs) {
    if (!std::isfinite(v)) throw std::invalid_argument("spearman: non-finite input");
  }
  for (double v : ys) {
    if (!std::isfinite(v)) throw std::invalid_argument("spearman: non-finite input");
  }
  const auto rx = average_ranks(xs);
  const auto ry = average_ranks(ys);
  return pearson(rx, ry);
}

double dice(std::string_view a, std::string_view b) {
  const auto ta = word_tokens(a);
  const auto tb = word_tokens(b);
  const std::set<std::string> sa(ta.begin(), ta.end());
  const std::set<std::string> sb(tb.begin(), tb.end());
  if (sa.empty() && sb.empty()) return 1.0;
  std::size_t common = 0;
  for (const std::string& t : sa) common += sb.count(t);
  return 2.0 * static_cast<double>(common) / static_cast<double>(sa.size() + sb.size());
}

Embedding normalized(std::span<const double> v) {
  double sq = 0.0;
  for (double x : v) sq += x * x;
  if (!(sq > 0.0) || !std::isfinite(sq)) throw std::domain_error("cannot normalize a zero or non-finite embedding");
  const double inv = 1.0 / std::sqrt(sq);
  Embedding out(v.begin(), v.end());
  for (double& x : out) x *= inv;
  return out;
}

namespace {

double squared_distance(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw std::invalid_argument("embeddings differ in dimension");
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d += (a[i] - b[i]) * (a[i] - b[i]);
  return d;
}

}  // namespace

double alignment(std::span<const Embedding> xs, std::span<const Embedding> ys) {
  if (xs.size() != ys.size()) throw std::invalid_argument("alignment: pair lists differ in length");
  if (xs.empty()) throw std::invalid_argument("alignment: no pairs");
  double total = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) total += squared_distance(normalized(xs[i]), normalized(ys[i]));
  return total / static_cast<double>(xs.size());
}

double uniformity(std::span<const Embedding> embeddings) {
  if (embeddings.size() < 2) throw std::invalid_argument("uniformity: need at least 2 embeddings");
  std::vector<Embedding> unit;
  unit.reserve(embeddings.size());
  for (const Embedding& e : embeddings) unit.push_back(normalized(e));
  double total = 0.0;
  std::size_t pairs = 0;
  for (std::size_t i = 0; i < unit.size(); ++i) {
    for (std::size_t j = i + 1; j < unit.size(); ++j) {
      total += std::exp(-2.0 * squared_distance(unit[i], unit[j]));
      ++pairs;
    }
  }
  return std::log(total / static_cast<double>(pairs));
}

std::optional<double> ndcg_at_k(std::span<const std::string> ranked, const std::set<std::string>& relevant,
                                std::size_t k) {
  if (k == 0) throw std::invalid_argument("ndcg_at_k: k must be at least 1");
  if (relevant.empty()) return std::nullopt;
  double dcg = 0.0;
  for (std::size_t i = 0; i < std::min(k, ranked.size()); ++i) {
    if (relevant.count(ranked[i]) != 0) dcg += 1.0 / std::log2(static_cast<double>(i) + 2.0);
  }
  double ideal = 0.0;
  for (std::size_t i = 0; i < std::min(k, relevant.size()); ++i) ideal += 1.0 / std::log2(static_cast<double>(i) + 2.0);
  return dcg / ideal;
}

std::optional<double> recall_at_k(std::span<const std::string> ranked, const std::set<std::string>& relevant,
                                  std::size_t k) {
  if (k == 0) throw std::invalid_argument("recall_at_k: k must be at least 1");
  if (relevant.empty()) return std::nullopt;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < std::min(k, ranked.size()); ++i) hits += relevant.count(ranked[i]);
  return static_cast<double>(hits) / static_cast<double>(relevant.size());
}

double cosine(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw std::invalid_argument("cosine: embeddings differ in dimension");
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (!(na > 0.0) || !(nb > 0.0)) throw std::domain_error("cosine: zero embedding");
  return dot / std::sqrt(na * nb);
}

}  // namespace synthcse::eval
