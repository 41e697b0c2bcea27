#include "synthcse/eval/aggregate.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <tuple>

#include "synthcse/common/atomic_file.hpp"
#include "synthcse/common/text.hpp"

namespace synthcse::eval {

namespace {

std::string g17(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string f4(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

void check_field(const std::string& value, const char* name) {
  if (value.empty() || value.find_first_of(",\n\r") != std::string::npos) {
    throw std::invalid_argument(std::string("aggregate: ") + name + " must be nonempty and free of commas");
  }
}

}  // namespace

std::string to_csv_row(const AggregateRow& row) {
  check_field(row.method, "method");
  check_field(row.dataset, "dataset");
  std::vector<std::string> packed;
  for (const auto& [name, value] : row.metrics) {
    if (name.find_first_of(",;=") != std::string::npos) throw std::invalid_argument("aggregate: bad metric name");
    packed.push_back(name + "=" + g17(value));
  }
  return row.method + "," + row.dataset + "," + std::to_string(row.seed) + "," + row.task + "," + row.fingerprint +
         "," + join(packed, ";");
}

AggregateRow parse_csv_row(const std::string& line) {
  const auto fields = split(line, ',');
  if (fields.size() != 6) throw std::runtime_error("aggregate: expected 6 fields in '" + line + "'");
  AggregateRow row;
  row.method = fields[0];
  row.dataset = fields[1];
  row.seed = std::stoull(fields[2]);
  row.task = fields[3];
  row.fingerprint = fields[4];
  if (!fields[5].empty()) {
    for (const std::string& kv : split(fields[5], ';')) {
      const std::size_t eq = kv.find('=');
      if (eq == std::string::npos) throw std::runtime_error("aggregate: bad metric '" + kv + "'");
      row.metrics[kv.substr(0, eq)] = std::stod(kv.substr(eq + 1));
    }
  }
  return row;
}

AggregateRow make_row(const std::string& method, const std::string& dataset, std::uint64_t seed,
                      const EvalReport& report) {
  return {method, dataset, seed, report.task, report.dataset_fingerprint, report.metrics};
}

void append_aggregate(const std::filesystem::path& table, const AggregateRow& row) {
  const std::string line = to_csv_row(row);
  std::string existing;
  if (std::filesystem::exists(table)) {
    existing = read_file(table);
    if (existing.rfind(kAggregateHeader, 0) != 0) {
      throw std::runtime_error("aggregate table '" + table.string() + "' has an unexpected header");
    }
    if (!existing.empty() && existing.back() != '\n') existing += '\n';
  } else {
    existing = std::string(kAggregateHeader) + "\n";
  }
  write_file_atomic(table, existing + line + "\n");
}

std::vector<AggregateRow> load_aggregate(const std::filesystem::path& table) {
  std::ifstream in(table);
  if (!in) throw std::runtime_error("cannot open aggregate table '" + table.string() + "'");
  std::string line;
  if (!std::getline(in, line) || line != kAggregateHeader) {
    throw std::runtime_error("aggregate table '" + table.string() + "' has an unexpected header");
  }
  std::vector<AggregateRow> rows;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    rows.push_back(parse_csv_row(line));
  }
  return rows;
}

std::vector<SummaryRow> summarize(const std::vector<AggregateRow>& rows) {
  std::map<std::tuple<std::string, std::string, std::uint64_t>, const AggregateRow*> latest;
  for (const AggregateRow& r : rows) latest[{r.method, r.dataset, r.seed}] = &r;

  std::map<std::tuple<std::string, std::string, std::string>, std::vector<double>> groups;
  for (const auto& [key, row] : latest) {
    for (const auto& [metric, value] : row->metrics) groups[{row->method, row->dataset, metric}].push_back(value);
  }
  std::vector<SummaryRow> out;
  for (const auto& [key, values] : groups) {
    SummaryRow s;
    std::tie(s.method, s.dataset, s.metric) = key;
    s.n = values.size();
    double sum = 0.0;
    for (double v : values) sum += v;
    s.mean = sum / static_cast<double>(s.n);
    double sq = 0.0;
    for (double v : values) sq += (v - s.mean) * (v - s.mean);
    s.std = std::sqrt(sq / static_cast<double>(s.n));
    out.push_back(std::move(s));
  }
  return out;
}

std::string summary_csv(const std::vector<SummaryRow>& rows) {
  std::ostringstream out;
  out << "method,dataset,metric,n,mean,std,mean_pm_std\n";
  for (const SummaryRow& r : rows) {
    out << r.method << ',' << r.dataset << ',' << r.metric << ',' << r.n << ',' << g17(r.mean) << ',' << g17(r.std)
        << ',' << f4(r.mean) << " \xC2\xB1 " << f4(r.std) << '\n';
  }
  return out.str();
}

}  // namespace synthcse::eval
