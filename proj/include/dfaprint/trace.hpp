#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dfaprint/common.hpp"

namespace dfaprint {

/// Smallest number of samples a trace may hold. DFA needs at least four box
/// sizes with four or more boxes each, and 64 is the smallest power of two
/// that comfortably allows this.
inline constexpr std::size_t kMinTraceLength = 64;

/// Ordered list of metric names. Names are unique, non-empty and contain no
/// commas or whitespace; at least two metrics are required.
class MetricSchema {
 public:
  MetricSchema() = default;
  explicit MetricSchema(std::vector<std::string> names);

  const std::vector<std::string>& names() const noexcept { return names_; }
  std::size_t size() const noexcept { return names_.size(); }
  const std::string& operator[](std::size_t i) const { return names_[i]; }

  // Comma separated, as it appears in a trace header.
  std::string to_string() const;

  friend bool operator==(const MetricSchema&, const MetricSchema&) = default;

 private:
  std::vector<std::string> names_;
};

// Default names m1..mN.
MetricSchema numbered_schema(std::size_t n);

/// Aligned multi-metric time series for one execution run.
class Trace {
 public:
  Trace(MetricSchema schema, std::vector<std::vector<double>> series, double sampling_interval,
        std::string run_id = {}, double start_time = 0.0);

  const MetricSchema& schema() const noexcept { return schema_; }
  std::size_t num_metrics() const noexcept { return schema_.size(); }
  std::size_t length() const noexcept { return series_.front().size(); }
  std::span<const double> series(std::size_t metric) const { return series_.at(metric); }
  double sampling_interval() const noexcept { return sampling_interval_; }
  double start_time() const noexcept { return start_time_; }
  const std::string& run_id() const noexcept { return run_id_; }

  double timestamp(std::size_t row) const {
    return start_time_ + static_cast<double>(row) * sampling_interval_;
  }

  friend bool operator==(const Trace&, const Trace&) = default;

 private:
  MetricSchema schema_;
  std::vector<std::vector<double>> series_;
  double sampling_interval_;
  std::string run_id_;
  double start_time_;
};

struct LabeledTrace {
  Trace trace;
  FamilyLabel family;
};

/// Parses the trace CSV format. Throws ParseError naming the offending line.
Trace parse_trace(std::string_view text, const std::optional<MetricSchema>& expected_schema = std::nullopt,
                  std::string run_id = {});

/// Canonical CSV: `timestamp,<names>` header, LF endings, shortest
/// round-trip decimals.
std::string write_trace(const Trace& trace);

// Header plus rows; used by writers that must emit partial traces (fewer
// than kMinTraceLength rows) such as an interrupted collector.
std::string write_trace_rows(const MetricSchema& schema, double sampling_interval, double start_time,
                             const std::vector<std::vector<double>>& rows);

Trace load_trace(const std::string& path, const std::optional<MetricSchema>& expected_schema = std::nullopt);

}  // namespace dfaprint
