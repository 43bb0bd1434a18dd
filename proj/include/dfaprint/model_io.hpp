#pragma once

#include <span>
#include <string>
#include <string_view>

#include "dfaprint/features.hpp"
#include "dfaprint/pipeline.hpp"
#include "dfaprint/trace.hpp"

namespace dfaprint {

inline constexpr int kModelFormatVersion = 1;

/// A trained classifier together with the trace schema and DFA settings its
/// fingerprints were computed with.
struct ModelFile {
  int version = kModelFormatVersion;
  MetricSchema schema;
  DfaConfig dfa;
  TrainedPipeline pipeline;
  PipelineConfig training;  // grids and seed the model was trained with
};

std::string model_to_json(const ModelFile& model);
ModelFile model_from_json(std::string_view text);

void save_model(const ModelFile& model, const std::string& path);
ModelFile load_model(const std::string& path);

// Fingerprints every trace and trains the pipeline. `groups` names the
// sample of each trace and keeps its runs in one cross-validation fold.
ModelFile train_model(std::span<const LabeledTrace> traces, std::span<const std::string> groups,
                      const PipelineConfig& config, const DfaConfig& dfa = {});

// Classifies a trace after checking it against the model's schema.
Prediction classify_trace(const ModelFile& model, const Trace& trace);

}  // namespace dfaprint
