#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "dfaprint/common.hpp"

namespace dfaprint {

struct SvmParams {
  double c = 1.0;
  double gamma = 1.0;
  double kkt_tolerance = 1e-3;
  // Consecutive pair updates without objective progress before giving up.
  // Zero selects 10 · N.
  std::size_t max_passes = 0;

  void validate() const;
  friend bool operator==(const SvmParams&, const SvmParams&) = default;
};

double rbf_kernel(std::span<const double> u, std::span<const double> v, double gamma);

// exp(-gamma · D) for a matrix of squared distances.
Eigen::MatrixXd rbf_from_squared_distances(const Eigen::MatrixXd& squared_distances, double gamma);
Eigen::MatrixXd squared_distances(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b);

/// Solution of the C-SVM dual
///   min ½ αᵀQα − Σα,  Q_ij = y_i y_j K_ij,  0 ≤ α ≤ C,  yᵀα = 0.
struct SmoSolution {
  std::vector<double> alpha;
  double bias = 0.0;
  double dual_objective = 0.0;  // Σα − ½ αᵀQα (the maximised form)
  std::size_t iterations = 0;
  bool converged = false;
};

/// Sequential minimal optimisation with maximal-violating-pair selection on
/// a precomputed kernel matrix. `targets` are ±1.
SmoSolution solve_smo(const Eigen::MatrixXd& kernel, std::span<const int> targets, const SvmParams& params);

struct BinarySvmModel {
  Eigen::MatrixXd support_vectors;  // one row per support vector
  std::vector<double> dual_coef;    // α_i · y_i
  double bias = 0.0;
  SvmParams params;
  bool converged = true;

  double decision_value(std::span<const double> input) const;
  double decision_value(const Eigen::VectorXd& input) const;
  // Zero decides for the positive class.
  int classify(const Eigen::VectorXd& input) const { return decision_value(input) >= 0.0 ? 1 : -1; }
};

BinarySvmModel train_binary(const Eigen::MatrixXd& inputs, std::span<const int> targets, const SvmParams& params);

struct Prediction {
  FamilyLabel label;
  std::size_t class_index = 0;
  std::vector<int> votes;       // per class
  std::vector<double> margins;  // summed |decision value| of won duels
};

/// One-vs-one ensemble. Pair (a, b) with a < b treats class a as +1.
struct MulticlassSvmModel {
  std::vector<FamilyLabel> classes;
  std::vector<BinarySvmModel> pair_models;  // (0,1), (0,2), ..., (1,2), ...

  Prediction predict(const Eigen::VectorXd& input) const;
  std::size_t input_dim() const;
};

MulticlassSvmModel train_multiclass(const Eigen::MatrixXd& inputs, std::span<const FamilyLabel> labels,
                                    const SvmParams& params);

// Majority vote over pairwise decision values laid out like pair_models;
// entries for pairs that were not trained are skipped.
Prediction ovo_vote(std::span<const double> decisions, const std::vector<bool>& trained,
                    std::span<const FamilyLabel> classes);

/// Stratified fold index per instance. With `groups`, whole groups (and
/// every instance in them) go to one fold, stratified by the group label.
std::vector<int> stratified_folds(std::span<const int> label_ids, std::span<const std::string> groups, int folds,
                                  std::uint64_t seed);

struct CvResult {
  double mean_accuracy = 0.0;
  std::vector<double> fold_accuracy;
  std::vector<int> fold_of;
  bool undersized_classes = false;  // some class had fewer members than folds
};

CvResult cross_validate(const Eigen::MatrixXd& inputs, std::span<const FamilyLabel> labels, const SvmParams& params,
                        int folds, std::uint64_t seed, std::span<const std::string> groups = {});

struct GridCell {
  double c = 0.0;
  double gamma = 0.0;
  double accuracy = 0.0;
};

struct GridSearchResult {
  SvmParams best;
  double best_accuracy = 0.0;
  std::vector<GridCell> cells;  // evaluation order: C ascending, then gamma ascending
};

/// Exhaustive search; ties go to the smaller C, then the smaller gamma.
GridSearchResult grid_search(const Eigen::MatrixXd& inputs, std::span<const FamilyLabel> labels,
                             std::vector<double> c_grid, std::vector<double> gamma_grid, int folds,
                             std::uint64_t seed, std::span<const std::string> groups = {},
                             const SvmParams& base = {});

}  // namespace dfaprint
