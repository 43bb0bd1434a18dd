#include "dfaprint/pipeline.hpp"

#include <algorithm>
#include <map>

namespace dfaprint {

std::vector<int> default_q_grid() { return {10, 15, 20, 25, 30, 35, 40, 45, 50}; }

void PipelineConfig::validate() const {
  if (bins < 2) throw Error("pipeline: bins must be at least 2");
  if (q_grid.empty()) throw Error("pipeline: Q grid is empty");
  for (int q : q_grid) {
    if (q <= 0 || q > 100) throw Error("pipeline: Q values must lie in (0, 100]");
  }
  if (!(variance_fraction > 0.0 && variance_fraction <= 1.0)) {
    throw Error("pipeline: variance fraction must lie in (0, 1]");
  }
  if (c_grid.empty() || gamma_scales.empty()) throw Error("pipeline: C and gamma grids must be non-empty");
  if (folds < 2) throw Error("pipeline: at least 2 folds are required");
}

Eigen::MatrixXd feature_matrix(std::span<const FeatureVector> fingerprints) {
  if (fingerprints.empty()) throw Error("empty fingerprint set");
  const auto& names = fingerprints.front().names;
  Eigen::MatrixXd out(static_cast<Eigen::Index>(fingerprints.size()), static_cast<Eigen::Index>(names.size()));
  for (std::size_t i = 0; i < fingerprints.size(); ++i) {
    if (fingerprints[i].names != names) {
      throw Error("fingerprint " + std::to_string(i) + " has a different feature set than fingerprint 0");
    }
    for (std::size_t j = 0; j < names.size(); ++j) {
      out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = fingerprints[i].values[j];
    }
  }
  return out;
}

const QCandidate& TrainedPipeline::chosen() const {
  for (const auto& c : candidates) {
    if (c.q == selection.q) return c;
  }
  throw Error("trained pipeline has no record of its chosen Q");
}

Eigen::VectorXd TrainedPipeline::reduce(std::span<const double> raw_features) const {
  if (raw_features.size() != feature_names.size()) {
    throw Error("pipeline expects " + std::to_string(feature_names.size()) + " features, got " +
                std::to_string(raw_features.size()));
  }
  const Eigen::VectorXd raw = Eigen::Map<const Eigen::VectorXd>(raw_features.data(), static_cast<Eigen::Index>(raw_features.size()));
  return selection.project(standardizer.apply(raw));
}

Prediction TrainedPipeline::classify(std::span<const double> raw_features) const {
  return svm.predict(reduce(raw_features));
}

Prediction TrainedPipeline::classify(const FeatureVector& features) const {
  if (features.names != feature_names) throw Error("fingerprint feature names do not match the trained pipeline");
  return classify(std::span<const double>(features.values));
}

TrainedPipeline train_pipeline(std::span<const FeatureVector> fingerprints, std::span<const FamilyLabel> labels,
                               std::span<const std::string> groups, const PipelineConfig& config) {
  config.validate();
  if (fingerprints.size() != labels.size()) throw Error("train_pipeline: fingerprint and label counts differ");
  if (!groups.empty() && groups.size() != labels.size()) throw Error("train_pipeline: group count mismatch");
  const LabelEncoding enc = LabelEncoding::encode(labels);
  if (enc.classes.size() < 2) throw Error("train_pipeline: need at least 2 families");

  TrainedPipeline out;
  out.seed = config.seed;
  out.feature_names = fingerprints.front().names;
  const Eigen::MatrixXd raw = feature_matrix(fingerprints);
  out.standardizer = Standardizer::fit(raw);
  if (std::all_of(out.standardizer.constant.begin(), out.standardizer.constant.end(), [](bool c) { return c; })) {
    throw Error("train_pipeline: every feature column is constant");
  }
  const Eigen::MatrixXd standardized = out.standardizer.apply(raw);
  out.ranking = rank_features(standardized, enc.ids, out.feature_names, config.bins);

  std::vector<int> q_values = config.q_grid;
  std::sort(q_values.begin(), q_values.end());
  q_values.erase(std::unique(q_values.begin(), q_values.end()), q_values.end());

  struct Fitted {
    PcaModel pca;
    QCandidate result;
  };
  std::map<std::vector<std::size_t>, Fitted> by_subset;  // equal subsets give equal candidates
  std::vector<std::size_t> best_subset;
  double best_accuracy = -1.0;
  for (int q : q_values) {
    std::vector<std::size_t> subset = q_subset(out.ranking, q);
    auto it = by_subset.find(subset);
    if (it == by_subset.end()) {
      Fitted fitted;
      fitted.pca = pca_fit(select_columns(standardized, subset), config.variance_fraction);
      const Eigen::MatrixXd reduced = pca_transform_rows(fitted.pca, select_columns(standardized, subset));
      std::vector<double> gammas;
      for (double s : config.gamma_scales) gammas.push_back(s / static_cast<double>(fitted.pca.dim));
      const GridSearchResult gs =
          grid_search(reduced, labels, config.c_grid, gammas, config.folds, config.seed, groups, config.svm);
      fitted.result.num_features = subset.size();
      fitted.result.reduced_dim = fitted.pca.dim;
      fitted.result.params = gs.best;
      fitted.result.cv_accuracy = gs.best_accuracy;
      it = by_subset.emplace(subset, std::move(fitted)).first;
    }
    QCandidate candidate = it->second.result;
    candidate.q = q;
    out.candidates.push_back(candidate);
    if (candidate.cv_accuracy > best_accuracy) {
      best_accuracy = candidate.cv_accuracy;
      best_subset = subset;
      out.selection.q = q;
    }
  }

  const Fitted& winner = by_subset.at(best_subset);
  out.selection.indices = best_subset;
  out.selection.pca = winner.pca;
  const Eigen::MatrixXd reduced = out.selection.project(standardized);
  out.svm = train_multiclass(reduced, labels, winner.result.params);
  return out;
}

}  // namespace dfaprint
