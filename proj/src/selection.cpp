#include "dfaprint/selection.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

namespace dfaprint {

Standardizer Standardizer::fit(const Eigen::MatrixXd& samples) {
  if (samples.rows() < 1) throw Error("standardizer needs at least one sample");
  Standardizer s;
  const auto n = static_cast<double>(samples.rows());
  s.mean = samples.colwise().mean().transpose();
  s.scale.resize(samples.cols());
  s.constant.assign(static_cast<std::size_t>(samples.cols()), false);
  for (Eigen::Index j = 0; j < samples.cols(); ++j) {
    const auto col = samples.col(j);
    const bool constant = (col.array() == col(0)).all();
    const double sd = std::sqrt((col.array() - s.mean(j)).square().sum() / n);
    if (constant || sd == 0.0) {
      s.scale(j) = 1.0;
      s.constant[static_cast<std::size_t>(j)] = true;
    } else {
      s.scale(j) = sd;
    }
  }
  return s;
}

Eigen::MatrixXd Standardizer::apply(const Eigen::MatrixXd& samples) const {
  if (samples.cols() != mean.size()) throw Error("standardizer: feature count mismatch");
  return ((samples.rowwise() - mean.transpose()).array().rowwise() / scale.transpose().array()).matrix();
}

Eigen::VectorXd Standardizer::apply(const Eigen::VectorXd& sample) const {
  if (sample.size() != mean.size()) throw Error("standardizer: feature count mismatch");
  return ((sample - mean).array() / scale.array()).matrix();
}

LabelEncoding LabelEncoding::encode(std::span<const FamilyLabel> labels) {
  LabelEncoding enc;
  enc.classes.assign(labels.begin(), labels.end());
  std::sort(enc.classes.begin(), enc.classes.end());
  enc.classes.erase(std::unique(enc.classes.begin(), enc.classes.end()), enc.classes.end());
  enc.ids.reserve(labels.size());
  for (const auto& label : labels) {
    const auto it = std::lower_bound(enc.classes.begin(), enc.classes.end(), label);
    enc.ids.push_back(static_cast<int>(it - enc.classes.begin()));
  }
  return enc;
}

std::vector<int> equal_frequency_bins(std::span<const double> values, int bins) {
  if (bins < 2) throw Error("mutual information needs at least 2 bins");
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<int> bin(n, 0);
  std::size_t group_start = 0;
  for (std::size_t rank = 0; rank < n; ++rank) {
    if (rank > 0 && values[order[rank]] != values[order[rank - 1]]) group_start = rank;
    bin[order[rank]] = static_cast<int>((group_start * static_cast<std::size_t>(bins)) / n);
  }
  return bin;
}

double mutual_information(std::span<const double> feature, std::span<const int> label_ids, int bins) {
  if (feature.size() != label_ids.size()) throw Error("mutual information: feature and label counts differ");
  if (feature.empty()) throw Error("mutual information: empty input");
  const std::vector<int> fbin = equal_frequency_bins(feature, bins);
  const int num_labels = *std::max_element(label_ids.begin(), label_ids.end()) + 1;
  if (*std::min_element(label_ids.begin(), label_ids.end()) < 0) throw Error("mutual information: negative label id");

  std::vector<double> joint(static_cast<std::size_t>(bins * num_labels), 0.0);
  std::vector<double> pf(static_cast<std::size_t>(bins), 0.0);
  std::vector<double> pl(static_cast<std::size_t>(num_labels), 0.0);
  for (std::size_t i = 0; i < feature.size(); ++i) {
    joint[static_cast<std::size_t>(fbin[i] * num_labels + label_ids[i])] += 1.0;
    pf[static_cast<std::size_t>(fbin[i])] += 1.0;
    pl[static_cast<std::size_t>(label_ids[i])] += 1.0;
  }
  const auto total = static_cast<double>(feature.size());
  double mi = 0.0;
  for (int b = 0; b < bins; ++b) {
    for (int l = 0; l < num_labels; ++l) {
      const double count = joint[static_cast<std::size_t>(b * num_labels + l)];
      if (count == 0.0) continue;
      mi += (count / total) *
            std::log((count * total) / (pf[static_cast<std::size_t>(b)] * pl[static_cast<std::size_t>(l)]));
    }
  }
  return std::max(mi, 0.0);
}

double mutual_information(std::span<const double> feature, std::span<const FamilyLabel> labels, int bins) {
  if (feature.size() != labels.size()) throw Error("mutual information: feature and label counts differ");
  if (feature.empty()) throw Error("mutual information: empty input");
  const LabelEncoding enc = LabelEncoding::encode(labels);
  return mutual_information(feature, enc.ids, bins);
}

MiRanking rank_features(const Eigen::MatrixXd& samples, std::span<const int> label_ids,
                        std::vector<std::string> feature_names, int bins) {
  if (samples.rows() != static_cast<Eigen::Index>(label_ids.size())) {
    throw Error("rank_features: sample and label counts differ");
  }
  if (static_cast<Eigen::Index>(feature_names.size()) != samples.cols()) {
    throw Error("rank_features: feature name count differs from column count");
  }
  if (std::adjacent_find(label_ids.begin(), label_ids.end(), std::not_equal_to<>()) == label_ids.end()) {
    throw Error("rank_features: need at least 2 distinct labels");
  }
  MiRanking ranking;
  ranking.feature_names = std::move(feature_names);
  ranking.mi.reserve(static_cast<std::size_t>(samples.cols()));
  std::vector<double> column(static_cast<std::size_t>(samples.rows()));
  for (Eigen::Index j = 0; j < samples.cols(); ++j) {
    for (Eigen::Index i = 0; i < samples.rows(); ++i) column[static_cast<std::size_t>(i)] = samples(i, j);
    ranking.mi.push_back(mutual_information(column, label_ids, bins));
  }
  ranking.max_mi = ranking.mi.empty() ? 0.0 : *std::max_element(ranking.mi.begin(), ranking.mi.end());
  return ranking;
}

MiRanking rank_features(std::span<const FeatureVector> vectors, std::span<const FamilyLabel> labels, int bins) {
  if (vectors.size() != labels.size()) throw Error("rank_features: vector and label counts differ");
  if (vectors.empty()) throw Error("rank_features: empty dataset");
  const auto& names = vectors.front().names;
  Eigen::MatrixXd samples(static_cast<Eigen::Index>(vectors.size()), static_cast<Eigen::Index>(names.size()));
  for (std::size_t i = 0; i < vectors.size(); ++i) {
    if (vectors[i].names != names) {
      throw Error("rank_features: feature names of vector " + std::to_string(i) + " differ from vector 0");
    }
    for (std::size_t j = 0; j < names.size(); ++j) {
      samples(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = vectors[i].values[j];
    }
  }
  const LabelEncoding enc = LabelEncoding::encode(labels);
  return rank_features(samples, enc.ids, names, bins);
}

std::vector<std::size_t> q_subset(const MiRanking& ranking, int q) {
  if (q <= 0 || q > 100) throw Error("q_subset: Q must lie in (0, 100], got " + std::to_string(q));
  const double threshold = ranking.max_mi * static_cast<double>(100 - q) / 100.0;
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < ranking.mi.size(); ++i) {
    if (ranking.mi[i] >= threshold) out.push_back(i);
  }
  return out;
}

PcaModel pca_fit(const Eigen::MatrixXd& samples, double variance_fraction) {
  if (samples.rows() < 2) throw Error("pca_fit: need at least 2 samples, got " + std::to_string(samples.rows()));
  if (samples.cols() < 1) throw Error("pca_fit: need at least 1 feature");
  if (!(variance_fraction > 0.0 && variance_fraction <= 1.0)) throw Error("pca_fit: variance fraction must lie in (0, 1]");

  const Eigen::Index p = samples.cols();
  PcaModel model;
  model.mean = samples.colwise().mean().transpose();
  const Eigen::MatrixXd centered = samples.rowwise() - model.mean.transpose();
  const Eigen::MatrixXd covariance = (centered.transpose() * centered) / static_cast<double>(samples.rows() - 1);

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(covariance);
  if (eig.info() != Eigen::Success) throw Error("pca_fit: eigendecomposition failed");
  // Eigen returns ascending eigenvalues.
  model.eigenvalues = eig.eigenvalues().reverse().cwiseMax(0.0);
  Eigen::MatrixXd vectors = eig.eigenvectors().rowwise().reverse();
  for (Eigen::Index k = 0; k < p; ++k) {
    Eigen::Index largest = 0;
    vectors.col(k).cwiseAbs().maxCoeff(&largest);
    if (vectors(largest, k) < 0.0) vectors.col(k) *= -1.0;
  }

  const double total = model.eigenvalues.sum();
  if (total <= 0.0) {
    model.zero_variance = true;
    model.explained = Eigen::VectorXd::Zero(p);
    model.dim = 1;
    model.components = Eigen::MatrixXd::Zero(1, p);
    return model;
  }
  model.explained = model.eigenvalues / total;
  double cumulative = 0.0;
  model.dim = static_cast<std::size_t>(p);
  for (Eigen::Index k = 0; k < p; ++k) {
    cumulative += model.explained(k);
    if (cumulative >= variance_fraction - 1e-12) {
      model.dim = static_cast<std::size_t>(k + 1);
      break;
    }
  }
  model.components = vectors.leftCols(static_cast<Eigen::Index>(model.dim)).transpose();
  return model;
}

Eigen::VectorXd pca_transform(const PcaModel& model, const Eigen::VectorXd& sample) {
  if (sample.size() != model.mean.size()) {
    throw Error("pca_transform: expected " + std::to_string(model.mean.size()) + " features, got " +
                std::to_string(sample.size()));
  }
  return model.components * (sample - model.mean);
}

Eigen::MatrixXd pca_transform_rows(const PcaModel& model, const Eigen::MatrixXd& samples) {
  if (samples.cols() != model.mean.size()) throw Error("pca_transform: feature count mismatch");
  return (samples.rowwise() - model.mean.transpose()) * model.components.transpose();
}

Eigen::MatrixXd select_columns(const Eigen::MatrixXd& samples, std::span<const std::size_t> indices) {
  Eigen::MatrixXd out(samples.rows(), static_cast<Eigen::Index>(indices.size()));
  for (std::size_t k = 0; k < indices.size(); ++k) {
    out.col(static_cast<Eigen::Index>(k)) = samples.col(static_cast<Eigen::Index>(indices[k]));
  }
  return out;
}

Eigen::MatrixXd SelectionModel::project(const Eigen::MatrixXd& standardized) const {
  return pca_transform_rows(pca, select_columns(standardized, indices));
}

Eigen::VectorXd SelectionModel::project(const Eigen::VectorXd& standardized) const {
  Eigen::VectorXd subset(static_cast<Eigen::Index>(indices.size()));
  for (std::size_t k = 0; k < indices.size(); ++k) {
    subset(static_cast<Eigen::Index>(k)) = standardized(static_cast<Eigen::Index>(indices.at(k)));
  }
  return pca_transform(pca, subset);
}

}  // namespace dfaprint
