#include "aespg/trace.hpp"

#include "aespg/types.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>

namespace aespg {

namespace {

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

std::optional<double> parse_optional(const std::string& cell, std::size_t offset) {
  if (cell.empty()) return std::nullopt;
  try {
    std::size_t used = 0;
    const double v = std::stod(cell, &used);
    if (used != cell.size()) throw std::invalid_argument(cell);
    return v;
  } catch (const std::exception&) {
    throw FormatError("bad trace cell '" + cell + "'", offset);
  }
}

double parse_required(const std::string& cell, std::size_t offset) {
  const std::optional<double> v = parse_optional(cell, offset);
  if (!v) throw FormatError("missing required trace value", offset);
  return *v;
}

using Getter = std::optional<double> (*)(const TraceRow&);

struct MetricColumn {
  const char* name;
  Getter get;
};

constexpr MetricColumn kMetrics[] = {
    {"mu", [](const TraceRow& r) { return r.mu; }},
    {"L", [](const TraceRow& r) { return r.L; }},
    {"fval", [](const TraceRow& r) { return std::optional<double>(r.fval); }},
    {"smoothed", [](const TraceRow& r) { return r.smoothed; }},
    {"feasvi", [](const TraceRow& r) { return std::optional<double>(r.feasvi); }},
    {"trainerr", [](const TraceRow& r) { return std::optional<double>(r.trainerr); }},
    {"testerr", [](const TraceRow& r) { return r.testerr; }},
};

}  // namespace

std::string format_number(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string format_trace_row(const TraceRow& row) {
  const auto opt = [](const std::optional<double>& v) { return v ? format_number(*v) : std::string(); };
  std::string s = std::to_string(row.k);
  s += ',' + opt(row.mu);
  s += ',' + opt(row.L);
  s += ',' + format_number(row.fval);
  s += ',' + opt(row.smoothed);
  s += ',' + format_number(row.feasvi);
  s += ',' + format_number(row.trainerr);
  s += ',' + opt(row.testerr);
  s += ',' + (row.sub_iters ? std::to_string(*row.sub_iters) : std::string());
  s += ',' + format_number(row.wall_ms);
  return s;
}

TraceWriter::TraceWriter(std::ostream& out) : out_(out) { out_ << kTraceHeader << '\n' << std::flush; }

void TraceWriter::write(const TraceRow& row) { out_ << format_trace_row(row) << '\n' << std::flush; }

TraceSink TraceWriter::sink() {
  return [this](const TraceRow& row) { write(row); };
}

void write_trace(std::ostream& out, const std::vector<TraceRow>& rows) {
  out << kTraceHeader << '\n';
  for (const TraceRow& r : rows) out << format_trace_row(r) << '\n';
}

std::vector<TraceRow> read_trace(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kTraceHeader) throw FormatError("unexpected trace header", 0);
  std::size_t offset = line.size() + 1;
  std::vector<TraceRow> rows;
  while (std::getline(in, line)) {
    const std::size_t start = offset;
    offset += line.size() + 1;
    if (line.empty()) continue;
    const std::vector<std::string> c = split_csv(line);
    if (c.size() != 10) throw FormatError("trace row needs 10 cells", start);
    TraceRow r;
    r.k = static_cast<long>(parse_required(c[0], start));
    r.mu = parse_optional(c[1], start);
    r.L = parse_optional(c[2], start);
    r.fval = parse_required(c[3], start);
    r.smoothed = parse_optional(c[4], start);
    r.feasvi = parse_required(c[5], start);
    r.trainerr = parse_required(c[6], start);
    r.testerr = parse_optional(c[7], start);
    if (const auto it = parse_optional(c[8], start)) r.sub_iters = static_cast<long>(*it);
    r.wall_ms = parse_required(c[9], start);
    rows.push_back(r);
  }
  return rows;
}

double quantile(std::vector<double> values, double q) {
  if (values.empty()) throw ParameterError("quantile of an empty set");
  if (!(q >= 0.0 && q <= 1.0)) throw ParameterError("quantile level must lie in [0, 1]");
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return values[lo] + frac * (values[hi] - values[lo]);
}

AggregateTable aggregate_traces(const std::vector<std::vector<TraceRow>>& traces, double q_lo,
                                double q_hi) {
  if (traces.empty()) throw ParameterError("no traces to aggregate");
  if (!(q_lo <= 0.5 && q_hi >= 0.5)) throw ParameterError("quantile band must contain the median");
  std::size_t rows = traces.front().size();
  for (const auto& t : traces) rows = std::min(rows, t.size());

  AggregateTable table;
  for (std::size_t i = 0; i < rows; ++i) table.k.push_back(traces.front()[i].k);
  for (const MetricColumn& m : kMetrics) {
    bool complete = rows > 0;
    for (std::size_t i = 0; i < rows && complete; ++i)
      for (const auto& t : traces)
        if (!m.get(t[i])) complete = false;
    if (!complete) continue;
    AggregateSeries s{m.name, {}};
    std::vector<double> column(traces.size());
    for (std::size_t i = 0; i < rows; ++i) {
      for (std::size_t j = 0; j < traces.size(); ++j) column[j] = *m.get(traces[j][i]);
      s.bands.push_back({quantile(column, q_lo), quantile(column, 0.5), quantile(column, q_hi)});
    }
    table.series.push_back(std::move(s));
  }
  return table;
}

void write_aggregate_csv(std::ostream& out, const AggregateTable& table) {
  out << 'k';
  for (const auto& s : table.series) out << ',' << s.metric << "_lo," << s.metric << "_median," << s.metric << "_hi";
  out << '\n';
  for (std::size_t i = 0; i < table.k.size(); ++i) {
    out << table.k[i];
    for (const auto& s : table.series) {
      const Band& b = s.bands[i];
      out << ',' << format_number(b.lo) << ',' << format_number(b.median) << ',' << format_number(b.hi);
    }
    out << '\n';
  }
}

}  // namespace aespg
