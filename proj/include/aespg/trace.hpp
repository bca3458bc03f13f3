#pragma once

// Per-iteration run traces, their CSV encoding, and cross-seed aggregation.

#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace aespg {

inline constexpr const char* kTraceHeader =
    "k,mu,L,fval,smoothed,feasvi,trainerr,testerr,sub_iters,wall_ms";

/// Optional fields are written as empty CSV cells.
struct TraceRow {
  long k = 0;
  std::optional<double> mu;
  std::optional<double> L;
  double fval = 0.0;
  std::optional<double> smoothed;
  double feasvi = 0.0;
  double trainerr = 0.0;
  std::optional<double> testerr;
  std::optional<long> sub_iters;
  double wall_ms = 0.0;
};

struct RunTrace {
  std::vector<TraceRow> rows;
  std::string termination;
};

using TraceSink = std::function<void(const TraceRow&)>;

/// Shortest round-trip decimal form.
std::string format_number(double v);
std::string format_trace_row(const TraceRow& row);

/// Writes the header on construction and flushes after every row.
class TraceWriter {
 public:
  explicit TraceWriter(std::ostream& out);
  void write(const TraceRow& row);
  TraceSink sink();

 private:
  std::ostream& out_;
};

void write_trace(std::ostream& out, const std::vector<TraceRow>& rows);
/// Throws FormatError on a wrong header or malformed row.
std::vector<TraceRow> read_trace(std::istream& in);

/// Linear interpolation between order statistics, q in [0, 1].
double quantile(std::vector<double> values, double q);

struct Band {
  double lo = 0.0;
  double median = 0.0;
  double hi = 0.0;
};

struct AggregateSeries {
  std::string metric;
  std::vector<Band> bands;
};

struct AggregateTable {
  std::vector<long> k;
  std::vector<AggregateSeries> series;  // one per metric
};

/// Row-wise median and [q_lo, q_hi] band over traces, truncated to the
/// shortest trace. Metrics blank in any trace at a row are skipped for the
/// whole table.
AggregateTable aggregate_traces(const std::vector<std::vector<TraceRow>>& traces,
                                double q_lo = 0.25, double q_hi = 0.75);

/// Columns: k, then <metric>_lo, <metric>_median, <metric>_hi per metric.
void write_aggregate_csv(std::ostream& out, const AggregateTable& table);

}  // namespace aespg
