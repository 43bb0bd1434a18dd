#include "dfaprint/manifest.hpp"

#include <filesystem>
#include <map>

namespace dfaprint {

std::vector<ManifestEntry> parse_manifest(std::string_view text, const std::string& base_dir) {
  std::vector<ManifestEntry> out;
  std::size_t line_no = 0;
  for (std::string_view line : split(text, '\n')) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (split_whitespace(line).empty() || line.front() == '#') continue;
    const auto cells = split(line, ',');
    if (cells.size() < 2 || cells.size() > 3) {
      throw ParseError(line_no, "expected 'path,family' or 'path,family,sample'", "manifest");
    }
    if (out.empty() && cells[0] == "path" && cells[1] == "family") continue;
    ManifestEntry e;
    e.path = std::string(cells[0]);
    e.family = std::string(cells[1]);
    if (cells.size() == 3) e.sample = std::string(cells[2]);
    if (e.path.empty() || e.family.empty() || (cells.size() == 3 && e.sample.empty())) {
      throw ParseError(line_no, "empty field", "manifest");
    }
    if (!base_dir.empty() && std::filesystem::path(e.path).is_relative()) {
      e.path = (std::filesystem::path(base_dir) / e.path).string();
    }
    out.push_back(std::move(e));
  }
  if (out.empty()) throw Error("manifest lists no traces");
  return out;
}

std::vector<ManifestEntry> load_manifest(const std::string& path) {
  const std::string base = std::filesystem::path(path).parent_path().string();
  try {
    return parse_manifest(read_file(path), base);
  } catch (const ParseError& e) {
    throw ParseError(e.line(), e.message(), path);
  }
}

std::vector<std::string> sample_ids(const std::vector<ManifestEntry>& entries, std::size_t runs_per_sample) {
  if (runs_per_sample == 0) throw Error("runs per sample must be positive");
  std::vector<std::string> out;
  std::map<FamilyLabel, std::size_t> seen;
  for (const auto& e : entries) {
    if (!e.sample.empty()) {
      out.push_back(e.sample);
      continue;
    }
    const std::size_t k = seen[e.family]++;
    out.push_back(e.family + "#" + std::to_string(k / runs_per_sample));
  }
  return out;
}

std::vector<LabeledTrace> load_labeled_traces(const std::vector<ManifestEntry>& entries) {
  std::vector<LabeledTrace> out;
  out.reserve(entries.size());
  for (const auto& e : entries) {
    if (!std::filesystem::exists(e.path)) throw Error("manifest references missing file " + e.path);
    std::optional<MetricSchema> expected;
    if (!out.empty()) expected = out.front().trace.schema();
    out.push_back(LabeledTrace{load_trace(e.path, expected), e.family});
  }
  return out;
}

}  // namespace dfaprint
