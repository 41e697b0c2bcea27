#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "synthcse/eval/harness.hpp"

namespace synthcse::eval {

// One evaluation run. Rows with the same (method, dataset, seed) key
// supersede earlier ones when summarised.
struct AggregateRow {
  std::string method;
  std::string dataset;
  std::uint64_t seed = 0;
  std::string task;
  std::string fingerprint;
  std::map<std::string, double> metrics;
};

inline constexpr const char* kAggregateHeader = "method,dataset,seed,task,fingerprint,metrics";

// Comma-free fields required for method and dataset. Metrics are packed as
// "name=value;name=value" in name order with 17 significant digits.
std::string to_csv_row(const AggregateRow& row);
AggregateRow parse_csv_row(const std::string& line);
AggregateRow make_row(const std::string& method, const std::string& dataset, std::uint64_t seed,
                      const EvalReport& report);

// Appends one row, writing the header when the table is new. The table is
// rewritten through a temporary file so a failed append leaves it intact.
void append_aggregate(const std::filesystem::path& table, const AggregateRow& row);
std::vector<AggregateRow> load_aggregate(const std::filesystem::path& table);

struct SummaryRow {
  std::string method;
  std::string dataset;
  std::string metric;
  std::size_t n = 0;
  double mean = 0.0;
  double std = 0.0;  // population (divide by n)
};

std::vector<SummaryRow> summarize(const std::vector<AggregateRow>& rows);
std::string summary_csv(const std::vector<SummaryRow>& rows);

}  // namespace synthcse::eval
