#include "dfaprint/collector.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <sstream>
#include <thread>

#include <json.hpp>

namespace dfaprint {

namespace {

std::string substitute_pid(const std::string& path, const std::string& pid) {
  std::string out = path;
  const std::string key = "{pid}";
  for (std::size_t pos = out.find(key); pos != std::string::npos; pos = out.find(key, pos + pid.size())) {
    out.replace(pos, key.size(), pid);
  }
  return out;
}

std::string describe(const ExtractionRule& rule) {
  return "metric '" + rule.metric + "' (" + rule.path + ", prefix '" + rule.prefix + "', token " +
         std::to_string(rule.token) + ")";
}

}  // namespace

std::string_view to_string(MetricKind kind) noexcept { return kind == MetricKind::Counter ? "counter" : "gauge"; }

MetricKind parse_metric_kind(std::string_view text) {
  if (text == "counter") return MetricKind::Counter;
  if (text == "gauge") return MetricKind::Gauge;
  throw Error("metric kind must be 'counter' or 'gauge', got '" + std::string(text) + "'");
}

MetricSchema ProcSourceSpec::schema() const {
  std::vector<std::string> names;
  names.reserve(rules.size());
  for (const auto& r : rules) names.push_back(r.metric);
  return MetricSchema(std::move(names));
}

std::vector<ExtractionRule> parse_rules_json(std::string_view json_text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(std::string("rule file: invalid JSON: ") + e.what());
  }
  if (!doc.is_array()) throw Error("rule file: expected a JSON array of rules");
  std::vector<ExtractionRule> rules;
  for (std::size_t i = 0; i < doc.size(); ++i) {
    const auto& node = doc[i];
    const auto field = [&](const char* name) -> const nlohmann::json& {
      if (!node.is_object() || !node.contains(name)) {
        throw Error("rule file: rule " + std::to_string(i) + " is missing field '" + name + "'");
      }
      return node.at(name);
    };
    ExtractionRule rule;
    try {
      rule.metric = field("metric").get<std::string>();
      rule.path = field("path").get<std::string>();
      rule.prefix = field("prefix").get<std::string>();
      const auto token = field("token").get<long long>();
      if (token < 0) throw Error("rule file: rule " + std::to_string(i) + " has a negative token index");
      rule.token = static_cast<std::size_t>(token);
      rule.kind = parse_metric_kind(field("kind").get<std::string>());
    } catch (const nlohmann::json::exception& e) {
      throw Error("rule file: rule " + std::to_string(i) + ": " + e.what());
    }
    rules.push_back(std::move(rule));
  }
  return rules;
}

std::string rules_to_json(const std::vector<ExtractionRule>& rules) {
  auto doc = nlohmann::ordered_json::array();
  for (const auto& r : rules) {
    nlohmann::ordered_json node;
    node["metric"] = r.metric;
    node["path"] = r.path;
    node["prefix"] = r.prefix;
    node["token"] = r.token;
    node["kind"] = std::string(to_string(r.kind));
    doc.push_back(node);
  }
  return doc.dump(2) + "\n";
}

std::vector<ExtractionRule> default_linux_rules(const std::string& interface) {
  const std::string iface = interface + ":";
  using K = MetricKind;
  return {
      {"cpu_user", "stat", "cpu", 1, K::Counter},
      {"cpu_nice", "stat", "cpu", 2, K::Counter},
      {"cpu_system", "stat", "cpu", 3, K::Counter},
      {"cpu_idle", "stat", "cpu", 4, K::Counter},
      {"cpu_iowait", "stat", "cpu", 5, K::Counter},
      {"ctxt_switches", "stat", "ctxt", 1, K::Counter},
      {"procs_running", "stat", "procs_running", 1, K::Gauge},
      {"mem_free", "meminfo", "MemFree:", 1, K::Gauge},
      {"mem_available", "meminfo", "MemAvailable:", 1, K::Gauge},
      {"mem_buffers", "meminfo", "Buffers:", 1, K::Gauge},
      {"mem_cached", "meminfo", "Cached:", 1, K::Gauge},
      {"swap_free", "meminfo", "SwapFree:", 1, K::Gauge},
      // /proc/<pid>/stat is one line; tokens follow proc(5) numbering minus one.
      {"utime", "{pid}/stat", "", 13, K::Counter},
      {"stime", "{pid}/stat", "", 14, K::Counter},
      {"num_threads", "{pid}/stat", "", 19, K::Gauge},
      {"vsize", "{pid}/stat", "", 22, K::Gauge},
      {"rss", "{pid}/stat", "", 23, K::Gauge},
      {"minflt", "{pid}/stat", "", 9, K::Counter},
      {"majflt", "{pid}/stat", "", 11, K::Counter},
      {"read_bytes", "{pid}/io", "read_bytes:", 1, K::Counter},
      {"write_bytes", "{pid}/io", "write_bytes:", 1, K::Counter},
      {"rx_bytes", "net/dev", iface, 1, K::Counter},
      {"tx_bytes", "net/dev", iface, 9, K::Counter},
      {"rx_packets", "net/dev", iface, 2, K::Counter},
      {"tx_packets", "net/dev", iface, 10, K::Counter},
      {"tcp_sockets_in_use", "net/sockstat", "TCP:", 2, K::Gauge},
  };
}

MetricSchema default_schema() {
  std::vector<std::string> names;
  for (const auto& r : default_linux_rules()) names.push_back(r.metric);
  return MetricSchema(std::move(names));
}

ProcSampler::ProcSampler(ProcSourceSpec spec) : spec_(std::move(spec)) {
  (void)spec_.schema();  // validates metric names
}

double ProcSampler::read_rule(const std::filesystem::path& root, const ExtractionRule& rule) const {
  const std::filesystem::path file = root / substitute_pid(rule.path, spec_.pid);
  std::ifstream in(file);
  if (!in) throw Error("sampling " + describe(rule) + ": cannot read " + file.string());
  std::string line;
  bool found = false;
  while (std::getline(in, line)) {
    if (rule.prefix.empty()) {
      found = true;
      break;
    }
    const auto tokens = split_whitespace(line);
    if (!tokens.empty() && tokens.front() == rule.prefix) {
      found = true;
      break;
    }
  }
  if (!found) throw Error("sampling " + describe(rule) + ": no line starting with '" + rule.prefix + "' in " + file.string());
  const auto tokens = split_whitespace(line);
  if (rule.token >= tokens.size()) {
    throw Error("sampling " + describe(rule) + ": line has only " + std::to_string(tokens.size()) + " tokens");
  }
  const auto value = parse_real(tokens[rule.token]);
  if (!value || !std::isfinite(*value)) {
    throw Error("sampling " + describe(rule) + ": token '" + std::string(tokens[rule.token]) + "' is not numeric");
  }
  return *value;
}

std::vector<double> ProcSampler::sample_once() { return sample_once(spec_.root); }

std::vector<double> ProcSampler::sample_once(const std::filesystem::path& root) {
  std::vector<double> raw;
  raw.reserve(spec_.rules.size());
  for (const auto& rule : spec_.rules) raw.push_back(read_rule(root, rule));
  std::vector<double> row(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) {
    if (spec_.rules[i].kind == MetricKind::Counter) {
      row[i] = primed_ ? raw[i] - previous_[i] : 0.0;
    } else {
      row[i] = raw[i];
    }
  }
  previous_ = std::move(raw);
  primed_ = true;
  return row;
}

std::size_t SamplerConfig::sample_count() const {
  if (!(interval > 0.0)) throw Error("sampling interval must be positive");
  if (max_samples) return *max_samples;
  if (duration) {
    if (!(*duration > 0.0)) throw Error("collection duration must be positive");
    return static_cast<std::size_t>(std::llround(*duration / interval));
  }
  throw Error("collection needs a duration or a sample count");
}

CollectResult collect(const ProcSourceSpec& spec, const SamplerConfig& config, const std::filesystem::path& out) {
  const std::size_t count = config.sample_count();
  const MetricSchema schema = spec.schema();
  ProcSampler sampler(spec);
  CollectResult result;
  result.trace_path = out;
  result.metadata_path = out;
  result.metadata_path += ".meta.json";

  using clock = std::chrono::steady_clock;
  const auto wall_start = std::chrono::system_clock::now();
  const auto start = clock::now();
  const auto period = std::chrono::duration<double>(config.interval);
  std::vector<std::vector<double>> rows;
  rows.reserve(count);
  for (std::size_t k = 0; k < count; ++k) {
    const auto deadline = start + std::chrono::duration_cast<clock::duration>(period * static_cast<double>(k));
    std::this_thread::sleep_until(deadline);
    const double offset = std::chrono::duration<double>(clock::now() - deadline).count();
    try {
      rows.push_back(sampler.sample_once());
    } catch (const Error& e) {
      result.error = e.what();
      break;
    }
    result.tick_offsets.push_back(offset);
    result.max_jitter = std::max(result.max_jitter, std::abs(offset));
  }
  result.samples = rows.size();

  write_file(out.string(), write_trace_rows(schema, config.interval, 0.0, rows));
  nlohmann::ordered_json meta;
  meta["start_unix_seconds"] =
      std::chrono::duration<double>(wall_start.time_since_epoch()).count();
  meta["sampling_interval"] = config.interval;
  meta["samples"] = result.samples;
  meta["max_jitter_seconds"] = result.max_jitter;
  meta["error"] = result.error ? nlohmann::ordered_json(*result.error) : nlohmann::ordered_json(nullptr);
  write_file(result.metadata_path.string(), meta.dump(2) + "\n");
  return result;
}

}  // namespace dfaprint
