#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "dfaprint/common.hpp"
#include "dfaprint/features.hpp"

namespace dfaprint {

/// Per-feature z-score statistics fitted on a training matrix (rows are
/// samples). Constant columns keep scale 1 and are flagged.
struct Standardizer {
  Eigen::VectorXd mean;
  Eigen::VectorXd scale;
  std::vector<bool> constant;

  static Standardizer fit(const Eigen::MatrixXd& samples);
  Eigen::MatrixXd apply(const Eigen::MatrixXd& samples) const;
  Eigen::VectorXd apply(const Eigen::VectorXd& sample) const;
};

/// Maps labels to dense ids following the sorted order of `classes`.
struct LabelEncoding {
  std::vector<FamilyLabel> classes;  // sorted, unique
  std::vector<int> ids;              // one per input label

  static LabelEncoding encode(std::span<const FamilyLabel> labels);
};

// Equal-frequency bin index per sample. Tied values share the bin of their
// first rank, so a constant feature lands in a single bin.
std::vector<int> equal_frequency_bins(std::span<const double> values, int bins);

/// Plug-in mutual information (nats) between a feature discretised into
/// `bins` equal-frequency bins and the labels.
double mutual_information(std::span<const double> feature, std::span<const int> label_ids, int bins);
double mutual_information(std::span<const double> feature, std::span<const FamilyLabel> labels, int bins);

struct MiRanking {
  std::vector<std::string> feature_names;
  std::vector<double> mi;
  double max_mi = 0.0;
};

MiRanking rank_features(const Eigen::MatrixXd& samples, std::span<const int> label_ids,
                        std::vector<std::string> feature_names, int bins);
MiRanking rank_features(std::span<const FeatureVector> vectors, std::span<const FamilyLabel> labels, int bins);

/// Ascending indices i with mi[i] >= (1 - q/100) · max_mi. `q` in (0, 100].
std::vector<std::size_t> q_subset(const MiRanking& ranking, int q);

/// Principal components of a sample matrix (rows are samples). Only the
/// leading `dim` components are kept; `explained` covers all of them.
struct PcaModel {
  Eigen::VectorXd mean;
  Eigen::MatrixXd components;  // dim x features, orthonormal rows
  Eigen::VectorXd eigenvalues;  // all, descending, clamped at 0
  Eigen::VectorXd explained;    // eigenvalue fractions, descending
  std::size_t dim = 0;
  bool zero_variance = false;

  std::size_t num_features() const noexcept { return static_cast<std::size_t>(mean.size()); }
};

PcaModel pca_fit(const Eigen::MatrixXd& samples, double variance_fraction = 0.95);
Eigen::VectorXd pca_transform(const PcaModel& model, const Eigen::VectorXd& sample);
Eigen::MatrixXd pca_transform_rows(const PcaModel& model, const Eigen::MatrixXd& samples);

/// A Q-subset of the canonical features plus the PCA fitted on it.
struct SelectionModel {
  int q = 0;
  std::vector<std::size_t> indices;
  PcaModel pca;

  Eigen::MatrixXd project(const Eigen::MatrixXd& standardized) const;
  Eigen::VectorXd project(const Eigen::VectorXd& standardized) const;
};

Eigen::MatrixXd select_columns(const Eigen::MatrixXd& samples, std::span<const std::size_t> indices);

}  // namespace dfaprint
