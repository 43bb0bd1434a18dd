#include "dfaprint/trace.hpp"

#include <cmath>
#include <set>
#include <utility>

namespace dfaprint {

namespace {

bool valid_metric_name(const std::string& name) {
  if (name.empty()) return false;
  for (char c : name) {
    if (c == ',' || c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f') return false;
  }
  return true;
}

std::string_view strip_cr(std::string_view line) {
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  return line;
}

}  // namespace

MetricSchema::MetricSchema(std::vector<std::string> names) : names_(std::move(names)) {
  if (names_.size() < 2) {
    throw Error("metric schema needs at least 2 metrics, got " + std::to_string(names_.size()));
  }
  std::set<std::string> seen;
  for (const auto& name : names_) {
    if (!valid_metric_name(name)) throw Error("invalid metric name '" + name + "'");
    if (!seen.insert(name).second) throw Error("duplicate metric name '" + name + "'");
  }
}

std::string MetricSchema::to_string() const { return join(names_, ","); }

MetricSchema numbered_schema(std::size_t n) {
  std::vector<std::string> names;
  names.reserve(n);
  for (std::size_t i = 1; i <= n; ++i) names.push_back("m" + std::to_string(i));
  return MetricSchema(std::move(names));
}

Trace::Trace(MetricSchema schema, std::vector<std::vector<double>> series, double sampling_interval,
             std::string run_id, double start_time)
    : schema_(std::move(schema)),
      series_(std::move(series)),
      sampling_interval_(sampling_interval),
      run_id_(std::move(run_id)),
      start_time_(start_time) {
  if (schema_.size() < 2) throw Error("trace needs a schema with at least 2 metrics");
  if (series_.size() != schema_.size()) {
    throw Error("trace has " + std::to_string(series_.size()) + " series for " + std::to_string(schema_.size()) +
                " metrics");
  }
  if (!(sampling_interval_ > 0.0) || !std::isfinite(sampling_interval_)) {
    throw Error("sampling interval must be a positive finite number of seconds");
  }
  if (!std::isfinite(start_time_)) throw Error("trace start time must be finite");
  const std::size_t length = series_.front().size();
  for (std::size_t m = 0; m < series_.size(); ++m) {
    if (series_[m].size() != length) {
      throw Error("series '" + schema_[m] + "' has length " + std::to_string(series_[m].size()) + ", expected " +
                  std::to_string(length));
    }
    for (double v : series_[m]) {
      if (!std::isfinite(v)) throw Error("series '" + schema_[m] + "' contains a non-finite value");
    }
  }
  if (length < kMinTraceLength) {
    throw Error("trace length " + std::to_string(length) + " is below the minimum of " +
                std::to_string(kMinTraceLength));
  }
}

Trace parse_trace(std::string_view text, const std::optional<MetricSchema>& expected_schema, std::string run_id) {
  auto lines = split(text, '\n');
  if (!lines.empty() && lines.back().empty()) lines.pop_back();
  if (lines.empty()) throw ParseError(1, "empty trace file");

  const auto header = split(strip_cr(lines[0]), ',');
  if (header.empty() || header[0] != "timestamp") throw ParseError(1, "header must start with 'timestamp'");
  std::vector<std::string> names;
  for (std::size_t i = 1; i < header.size(); ++i) names.emplace_back(header[i]);
  MetricSchema schema;
  try {
    schema = MetricSchema(names);
  } catch (const Error& e) {
    throw ParseError(1, std::string("malformed header: ") + e.what());
  }
  if (expected_schema && !(*expected_schema == schema)) {
    throw ParseError(1, "schema mismatch: expected [" + expected_schema->to_string() + "], found [" +
                            schema.to_string() + "]");
  }

  const std::size_t n = schema.size();
  std::vector<std::vector<double>> series(n);
  std::vector<double> timestamps;
  timestamps.reserve(lines.size() - 1);
  for (auto& s : series) s.reserve(lines.size() - 1);

  for (std::size_t li = 1; li < lines.size(); ++li) {
    const std::size_t line_no = li + 1;
    const auto cells = split(strip_cr(lines[li]), ',');
    if (cells.size() != n + 1) {
      throw ParseError(line_no, "ragged row: expected " + std::to_string(n + 1) + " fields, found " +
                                    std::to_string(cells.size()));
    }
    for (std::size_t c = 0; c < cells.size(); ++c) {
      const auto value = parse_real(cells[c]);
      if (!value) {
        throw ParseError(line_no, "non-numeric value '" + std::string(cells[c]) + "' in column " +
                                      std::to_string(c + 1) + " (row " + std::to_string(li) + ")");
      }
      if (!std::isfinite(*value)) {
        throw ParseError(line_no, "non-finite value in column " + std::to_string(c + 1));
      }
      if (c == 0) {
        timestamps.push_back(*value);
      } else {
        series[c - 1].push_back(*value);
      }
    }
  }

  const std::size_t rows = timestamps.size();
  if (rows < kMinTraceLength) {
    throw ParseError(lines.size(), "trace has " + std::to_string(rows) + " rows, at least " +
                                       std::to_string(kMinTraceLength) + " are required");
  }

  const double start = timestamps.front();
  // With a zero start the first step is exactly the interval the writer used.
  const double interval = start == 0.0 ? timestamps[1] : (timestamps.back() - start) / static_cast<double>(rows - 1);
  if (!(interval > 0.0)) throw ParseError(3, "timestamps must be strictly increasing");
  for (std::size_t k = 1; k < rows; ++k) {
    const double step = timestamps[k] - timestamps[k - 1];
    if (!(step > 0.0)) throw ParseError(k + 2, "timestamps must be strictly increasing");
    if (std::abs(step - interval) > 1e-9 * interval) {
      throw ParseError(k + 2, "timestamp spacing " + format_real(step) + " differs from sampling interval " +
                                  format_real(interval));
    }
  }

  return Trace(std::move(schema), std::move(series), interval, std::move(run_id), start);
}

std::string write_trace_rows(const MetricSchema& schema, double sampling_interval, double start_time,
                             const std::vector<std::vector<double>>& rows) {
  std::string out = "timestamp," + schema.to_string() + "\n";
  for (std::size_t k = 0; k < rows.size(); ++k) {
    out += format_real(start_time + static_cast<double>(k) * sampling_interval);
    for (double v : rows[k]) {
      out += ',';
      out += format_real(v);
    }
    out += '\n';
  }
  return out;
}

std::string write_trace(const Trace& trace) {
  std::string out = "timestamp," + trace.schema().to_string() + "\n";
  out.reserve(out.size() + trace.length() * trace.num_metrics() * 12);
  for (std::size_t k = 0; k < trace.length(); ++k) {
    out += format_real(trace.timestamp(k));
    for (std::size_t m = 0; m < trace.num_metrics(); ++m) {
      out += ',';
      out += format_real(trace.series(m)[k]);
    }
    out += '\n';
  }
  return out;
}

Trace load_trace(const std::string& path, const std::optional<MetricSchema>& expected_schema) {
  try {
    return parse_trace(read_file(path), expected_schema, path);
  } catch (const ParseError& e) {
    throw ParseError(e.line(), e.message(), path);
  }
}

}  // namespace dfaprint
