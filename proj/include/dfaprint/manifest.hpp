#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "dfaprint/trace.hpp"

namespace dfaprint {

/// One row of a labelled manifest: `path,family[,sample]`. A header row
/// naming those columns, blank lines and `#` comments are skipped.
struct ManifestEntry {
  std::string path;
  FamilyLabel family;
  std::string sample;  // empty when the column is absent
};

// Relative paths are resolved against `base_dir` when it is non-empty.
std::vector<ManifestEntry> parse_manifest(std::string_view text, const std::string& base_dir = {});
std::vector<ManifestEntry> load_manifest(const std::string& path);

/// Sample id per entry. Entries without a sample column are grouped in
/// manifest order: every `runs_per_sample` consecutive rows of one family
/// form a sample named `<family>#<k>`.
std::vector<std::string> sample_ids(const std::vector<ManifestEntry>& entries, std::size_t runs_per_sample);

// Loads every trace; all must share the schema of the first.
std::vector<LabeledTrace> load_labeled_traces(const std::vector<ManifestEntry>& entries);

}  // namespace dfaprint
