#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "dfaprint/trace.hpp"

namespace dfaprint {

enum class MetricKind { Counter, Gauge };

std::string_view to_string(MetricKind kind) noexcept;
MetricKind parse_metric_kind(std::string_view text);

/// How one metric is read from a proc-style tree: the first line of
/// `path` (relative to the root, `{pid}` replaced by the target process)
/// whose first whitespace token equals `prefix` (an empty prefix selects
/// the first line), then the whitespace token at `token`.
struct ExtractionRule {
  std::string metric;
  std::string path;
  std::string prefix;
  std::size_t token = 0;
  MetricKind kind = MetricKind::Gauge;

  friend bool operator==(const ExtractionRule&, const ExtractionRule&) = default;
};

struct ProcSourceSpec {
  std::filesystem::path root = "/proc";
  std::vector<ExtractionRule> rules;
  std::string pid = "self";

  MetricSchema schema() const;
};

std::vector<ExtractionRule> parse_rules_json(std::string_view json_text);
std::string rules_to_json(const std::vector<ExtractionRule>& rules);

/// The shipped 26-metric set: system CPU, scheduler and memory counters,
/// per-process CPU, memory, fault and I/O counters, and network traffic of
/// `interface`.
std::vector<ExtractionRule> default_linux_rules(const std::string& interface = "eth0");
MetricSchema default_schema();

/// Reads one row of metric values. Counters are emitted as the delta to the
/// previous sample (0 on the first); gauges raw.
class ProcSampler {
 public:
  explicit ProcSampler(ProcSourceSpec spec);

  std::vector<double> sample_once();
  // Same as sample_once() but reading from another root, for replaying
  // recorded snapshots of a tree.
  std::vector<double> sample_once(const std::filesystem::path& root);

  const ProcSourceSpec& spec() const noexcept { return spec_; }

 private:
  double read_rule(const std::filesystem::path& root, const ExtractionRule& rule) const;

  ProcSourceSpec spec_;
  std::vector<double> previous_;
  bool primed_ = false;
};

struct SamplerConfig {
  double interval = 0.25;
  std::optional<double> duration;  // seconds; samples = round(duration / interval)
  std::optional<std::size_t> max_samples;

  std::size_t sample_count() const;
};

struct CollectResult {
  std::filesystem::path trace_path;
  std::filesystem::path metadata_path;
  std::size_t samples = 0;
  double max_jitter = 0.0;            // seconds, worst |actual tick − k·τ|
  std::vector<double> tick_offsets;   // actual − scheduled, per sample
  std::optional<std::string> error;   // set when sampling stopped early
};

/// Samples at absolute deadlines start + k·τ and writes the canonical
/// trace plus a `<out>.meta.json` sidecar. A sampling failure stops the
/// run, keeps the rows collected so far and is reported in `error`.
CollectResult collect(const ProcSourceSpec& spec, const SamplerConfig& config, const std::filesystem::path& out);

}  // namespace dfaprint
