#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "dfaprint/features.hpp"
#include "dfaprint/pipeline.hpp"
#include "dfaprint/synth.hpp"

namespace dfaprint {

/// counts(i, j): samples of true class i predicted as class j.
class ConfusionMatrix {
 public:
  ConfusionMatrix() = default;
  explicit ConfusionMatrix(std::vector<FamilyLabel> classes);

  const std::vector<FamilyLabel>& classes() const noexcept { return classes_; }
  std::size_t size() const noexcept { return classes_.size(); }
  std::size_t count(std::size_t truth, std::size_t predicted) const { return counts_.at(truth * size() + predicted); }
  std::size_t total() const;
  std::size_t row_sum(std::size_t i) const;
  std::size_t column_sum(std::size_t j) const;

  void add(std::size_t truth, std::size_t predicted, std::size_t n = 1);
  ConfusionMatrix& operator+=(const ConfusionMatrix& other);

 private:
  std::vector<FamilyLabel> classes_;
  std::vector<std::size_t> counts_;
};

ConfusionMatrix confusion(std::span<const FamilyLabel> truths, std::span<const FamilyLabel> predictions,
                          std::span<const FamilyLabel> classes);

double accuracy(const ConfusionMatrix& m);
// nullopt when the class was never predicted (precision) or never present
// (recall).
std::optional<double> precision(const ConfusionMatrix& m, std::size_t i);
std::optional<double> recall(const ConfusionMatrix& m, std::size_t i);

struct NormalizedConfusion {
  Eigen::MatrixXd values;       // row-stochastic
  std::vector<bool> empty_row;  // rows with no support stay zero
};

NormalizedConfusion normalize_rows(const ConfusionMatrix& m);

/// One malware sample: its family and the fingerprints of its q runs.
struct Sample {
  std::string id;
  FamilyLabel family;
  std::vector<FeatureVector> runs;
};

// Groups labelled traces into samples by id and fingerprints every run.
std::vector<Sample> build_samples(std::span<const LabeledTrace> traces, std::span<const std::string> sample_ids,
                                  const DfaConfig& config);

struct HoldoutSplit {
  std::vector<std::size_t> train;  // sample indices
  std::vector<std::size_t> test;
};

/// Per-family shuffle; round(fraction · count) samples of each family,
/// clamped to [1, count − 1], go to training.
HoldoutSplit stratified_holdout_split(std::span<const Sample> samples, double train_fraction, std::uint64_t seed);

struct HoldoutConfig {
  std::size_t repetitions = 20;
  double train_fraction = 0.7;
  std::uint64_t seed = 0;
  PipelineConfig pipeline;
};

struct ClassStats {
  FamilyLabel family;
  double precision_mean = 0.0;
  double precision_std = 0.0;
  double recall_mean = 0.0;
  double recall_std = 0.0;
  std::size_t precision_undefined = 0;  // repetitions excluded from the precision mean
  std::size_t recall_undefined = 0;
};

struct RepetitionResult {
  double accuracy = 0.0;
  int chosen_q = 0;
  double cv_accuracy = 0.0;
  ConfusionMatrix confusion;
};

struct ExperimentReport {
  std::vector<FamilyLabel> classes;
  std::vector<RepetitionResult> repetitions;
  double accuracy_mean = 0.0;
  double accuracy_std = 0.0;  // sample standard deviation (n − 1)
  std::vector<ClassStats> per_class;
  ConfusionMatrix total_confusion;
  NormalizedConfusion normalized_confusion;
};

ExperimentReport repeated_holdout(std::span<const Sample> samples, const HoldoutConfig& config);

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;
};

// Sample standard deviation; zero for fewer than two values.
MeanStd mean_std(std::span<const double> values);

/// Box-plot statistics. Quartiles are the medians of the lower and upper
/// halves of the sorted values, both halves including the median when the
/// count is odd; medians average the two closest ranks.
struct BoxStats {
  double min = 0.0;
  double q1 = 0.0;
  double median = 0.0;
  double q3 = 0.0;
  double max = 0.0;
  double iqr = 0.0;
  std::vector<double> outliers;  // beyond 1.5 · IQR from the quartiles
};

BoxStats box_stats(std::vector<double> values);

struct StabilityReport {
  std::vector<std::string> metrics;
  std::vector<std::vector<double>> alphas;  // [metric][run]
  std::vector<BoxStats> boxes;
};

StabilityReport dfa_stability_report(const FamilySpec& spec, std::size_t runs, std::size_t length,
                                     const DfaConfig& config, std::uint64_t seed);

struct SweepRow {
  std::string metric;
  std::size_t length = 0;
  double mean = 0.0;
  double std = 0.0;
};

std::vector<SweepRow> dfa_length_sweep(const FamilySpec& spec, std::span<const std::size_t> lengths,
                                       std::size_t runs_per_length, const DfaConfig& config, std::uint64_t seed);

// Plot-ready CSV and JSON writers.
std::string confusion_csv(const NormalizedConfusion& m, std::span<const FamilyLabel> classes);
std::string precision_recall_csv(const ExperimentReport& report);
std::string repetitions_csv(const ExperimentReport& report);
std::string report_json(const ExperimentReport& report);
std::string stability_box_csv(const StabilityReport& report);
std::string length_sweep_csv(std::span<const SweepRow> rows);

}  // namespace dfaprint
