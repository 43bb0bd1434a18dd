#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "dfaprint/features.hpp"
#include "dfaprint/selection.hpp"
#include "dfaprint/svm.hpp"

namespace dfaprint {

std::vector<int> default_q_grid();

struct PipelineConfig {
  int bins = 10;
  std::vector<int> q_grid = default_q_grid();
  double variance_fraction = 0.95;
  std::vector<double> c_grid = {0.1, 1.0, 10.0, 100.0};
  // Gamma candidates are these multiples of 1/d, d the reduced dimension.
  std::vector<double> gamma_scales = {0.25, 0.5, 1.0, 2.0, 4.0};
  int folds = 5;
  std::uint64_t seed = 0;
  SvmParams svm;  // supplies kkt_tolerance and max_passes

  void validate() const;
};

/// Cross-validation outcome of one Q candidate.
struct QCandidate {
  int q = 0;
  std::size_t num_features = 0;
  std::size_t reduced_dim = 0;
  SvmParams params;
  double cv_accuracy = 0.0;
};

/// Everything needed to classify a raw fingerprint: standardisation, the
/// winning Q-subset with its PCA, and the one-vs-one SVM trained on it.
struct TrainedPipeline {
  std::vector<std::string> feature_names;
  Standardizer standardizer;
  MiRanking ranking;
  SelectionModel selection;
  MulticlassSvmModel svm;
  std::vector<QCandidate> candidates;
  std::uint64_t seed = 0;

  const QCandidate& chosen() const;
  Eigen::VectorXd reduce(std::span<const double> raw_features) const;
  Prediction classify(std::span<const double> raw_features) const;
  Prediction classify(const FeatureVector& features) const;
};

/// Wrapper feature selection and training over the Q grid. `groups` (one
/// id per fingerprint, may be empty) keeps the runs of one sample inside a
/// single cross-validation fold.
TrainedPipeline train_pipeline(std::span<const FeatureVector> fingerprints, std::span<const FamilyLabel> labels,
                               std::span<const std::string> groups, const PipelineConfig& config);

Eigen::MatrixXd feature_matrix(std::span<const FeatureVector> fingerprints);

}  // namespace dfaprint
