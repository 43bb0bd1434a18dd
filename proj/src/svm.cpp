#include "dfaprint/svm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <random>

#include "dfaprint/selection.hpp"

namespace dfaprint {

namespace {

constexpr double kTau = 1e-12;  // floor for a non-positive curvature along the pair
constexpr std::size_t kIterationCap = 10'000'000;

struct PairSolution {
  bool trained = false;
  std::vector<Eigen::Index> sv_rows;  // rows of the full kernel matrix
  std::vector<double> coef;
  double bias = 0.0;
  bool converged = true;
};

// Trains every class pair on the instances listed in `rows`, reading kernel
// values from the full matrix.
std::vector<PairSolution> train_pairs(const Eigen::MatrixXd& kernel, std::span<const Eigen::Index> rows,
                                      std::span<const int> label_ids, int num_classes, const SvmParams& params) {
  std::vector<std::vector<Eigen::Index>> members(static_cast<std::size_t>(num_classes));
  for (Eigen::Index r : rows) members[static_cast<std::size_t>(label_ids[static_cast<std::size_t>(r)])].push_back(r);

  std::vector<PairSolution> out;
  for (int a = 0; a < num_classes; ++a) {
    for (int b = a + 1; b < num_classes; ++b) {
      PairSolution sol;
      const auto& ra = members[static_cast<std::size_t>(a)];
      const auto& rb = members[static_cast<std::size_t>(b)];
      if (!ra.empty() && !rb.empty()) {
        std::vector<Eigen::Index> idx(ra);
        idx.insert(idx.end(), rb.begin(), rb.end());
        std::vector<int> targets(ra.size(), 1);
        targets.resize(idx.size(), -1);
        const auto n = static_cast<Eigen::Index>(idx.size());
        Eigen::MatrixXd sub(n, n);
        for (Eigen::Index i = 0; i < n; ++i) {
          for (Eigen::Index j = 0; j < n; ++j) sub(i, j) = kernel(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(j)]);
        }
        const SmoSolution smo = solve_smo(sub, targets, params);
        sol.trained = true;
        sol.bias = smo.bias;
        sol.converged = smo.converged;
        for (std::size_t i = 0; i < idx.size(); ++i) {
          if (smo.alpha[i] > 0.0) {
            sol.sv_rows.push_back(idx[i]);
            sol.coef.push_back(smo.alpha[i] * targets[i]);
          }
        }
      }
      out.push_back(std::move(sol));
    }
  }
  return out;
}

Prediction predict_on_kernel(const std::vector<PairSolution>& pairs, const Eigen::MatrixXd& kernel, Eigen::Index row,
                             std::span<const FamilyLabel> classes) {
  std::vector<double> decisions(pairs.size(), 0.0);
  std::vector<bool> trained(pairs.size(), false);
  for (std::size_t p = 0; p < pairs.size(); ++p) {
    if (!pairs[p].trained) continue;
    double d = pairs[p].bias;
    for (std::size_t s = 0; s < pairs[p].sv_rows.size(); ++s) d += pairs[p].coef[s] * kernel(row, pairs[p].sv_rows[s]);
    decisions[p] = d;
    trained[p] = true;
  }
  return ovo_vote(decisions, trained, classes);
}

std::vector<double> sorted_unique(std::vector<double> grid, const char* name) {
  if (grid.empty()) throw Error(std::string("grid_search: ") + name + " grid is empty");
  for (double v : grid) {
    if (!(v > 0.0) || !std::isfinite(v)) throw Error(std::string("grid_search: ") + name + " values must be positive");
  }
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  return grid;
}

CvResult cross_validate_distances(const Eigen::MatrixXd& distances, const LabelEncoding& enc, const SvmParams& params,
                                  const std::vector<int>& fold_of, int folds) {
  const Eigen::MatrixXd kernel = rbf_from_squared_distances(distances, params.gamma);
  const int num_classes = static_cast<int>(enc.classes.size());
  CvResult result;
  result.fold_of = fold_of;
  double sum = 0.0;
  int counted = 0;
  for (int f = 0; f < folds; ++f) {
    std::vector<Eigen::Index> train;
    std::vector<Eigen::Index> held_out;
    std::vector<bool> present(static_cast<std::size_t>(num_classes), false);
    for (std::size_t i = 0; i < fold_of.size(); ++i) {
      if (fold_of[i] == f) {
        held_out.push_back(static_cast<Eigen::Index>(i));
      } else {
        train.push_back(static_cast<Eigen::Index>(i));
        present[static_cast<std::size_t>(enc.ids[i])] = true;
      }
    }
    if (held_out.empty()) continue;
    const auto present_count = std::count(present.begin(), present.end(), true);
    std::size_t correct = 0;
    if (present_count < 2) {
      const auto only = static_cast<int>(std::find(present.begin(), present.end(), true) - present.begin());
      for (Eigen::Index r : held_out) correct += enc.ids[static_cast<std::size_t>(r)] == only ? 1 : 0;
    } else {
      const auto pairs = train_pairs(kernel, train, enc.ids, num_classes, params);
      for (Eigen::Index r : held_out) {
        const Prediction p = predict_on_kernel(pairs, kernel, r, enc.classes);
        correct += static_cast<int>(p.class_index) == enc.ids[static_cast<std::size_t>(r)] ? 1 : 0;
      }
    }
    const double acc = static_cast<double>(correct) / static_cast<double>(held_out.size());
    result.fold_accuracy.push_back(acc);
    sum += acc;
    ++counted;
  }
  result.mean_accuracy = counted > 0 ? sum / counted : 0.0;
  return result;
}

bool has_undersized_class(std::span<const int> label_ids, std::span<const std::string> groups, int folds) {
  std::map<int, std::vector<std::string>> units;
  for (std::size_t i = 0; i < label_ids.size(); ++i) {
    units[label_ids[i]].push_back(groups.empty() ? std::to_string(i) : groups[i]);
  }
  for (auto& [label, names] : units) {
    std::sort(names.begin(), names.end());
    names.erase(std::unique(names.begin(), names.end()), names.end());
    if (static_cast<int>(names.size()) < folds) return true;
  }
  return false;
}

}  // namespace

void SvmParams::validate() const {
  if (!(c > 0.0) || !std::isfinite(c)) throw Error("SVM parameter C must be positive");
  if (!(gamma > 0.0) || !std::isfinite(gamma)) throw Error("SVM parameter gamma must be positive");
  if (!(kkt_tolerance > 0.0)) throw Error("SVM KKT tolerance must be positive");
}

double rbf_kernel(std::span<const double> u, std::span<const double> v, double gamma) {
  if (u.size() != v.size()) throw Error("rbf_kernel: dimension mismatch");
  double d2 = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    const double d = u[i] - v[i];
    d2 += d * d;
  }
  return std::exp(-gamma * d2);
}

Eigen::MatrixXd squared_distances(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  if (a.cols() != b.cols()) throw Error("squared_distances: dimension mismatch");
  Eigen::MatrixXd out(a.rows(), b.rows());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < b.rows(); ++j) out(i, j) = (a.row(i) - b.row(j)).squaredNorm();
  }
  return out;
}

Eigen::MatrixXd rbf_from_squared_distances(const Eigen::MatrixXd& squared, double gamma) {
  return (-gamma * squared.array()).exp().matrix();
}

SmoSolution solve_smo(const Eigen::MatrixXd& kernel, std::span<const int> targets, const SvmParams& params) {
  params.validate();
  const std::size_t n = targets.size();
  if (kernel.rows() != static_cast<Eigen::Index>(n) || kernel.cols() != static_cast<Eigen::Index>(n)) {
    throw Error("solve_smo: kernel size differs from target count");
  }
  bool has_pos = false;
  bool has_neg = false;
  for (int y : targets) {
    if (y == 1) {
      has_pos = true;
    } else if (y == -1) {
      has_neg = true;
    } else {
      throw Error("solve_smo: targets must be +1 or -1");
    }
  }
  if (!has_pos || !has_neg) throw Error("train_binary: need at least one example of each class");

  const double c = params.c;
  const double eps = params.kkt_tolerance;
  const std::size_t max_stall = params.max_passes > 0 ? params.max_passes : 10 * n;
  std::vector<double> alpha(n, 0.0);
  std::vector<double> grad(n, -1.0);
  const auto y = [&](std::size_t t) { return static_cast<double>(targets[t]); };
  const auto q = [&](std::size_t a, std::size_t b) {
    return y(a) * y(b) * kernel(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b));
  };

  SmoSolution out;
  std::size_t stall = 0;
  while (true) {
    double gmax = -std::numeric_limits<double>::infinity();
    double gmin = std::numeric_limits<double>::infinity();
    std::size_t i = n;
    std::size_t j = n;
    for (std::size_t t = 0; t < n; ++t) {
      const double v = -y(t) * grad[t];
      const bool up = targets[t] == 1 ? alpha[t] < c : alpha[t] > 0.0;
      const bool low = targets[t] == 1 ? alpha[t] > 0.0 : alpha[t] < c;
      if (up && v > gmax) {
        gmax = v;
        i = t;
      }
      if (low && v < gmin) {
        gmin = v;
        j = t;
      }
    }
    if (i == n || j == n || gmax - gmin < eps) {
      out.converged = true;
      break;
    }
    if (out.iterations >= kIterationCap || stall >= max_stall) break;
    ++out.iterations;

    const double old_ai = alpha[i];
    const double old_aj = alpha[j];
    const double kii = kernel(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i));
    const double kjj = kernel(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(j));
    const double qij = q(i, j);
    if (targets[i] != targets[j]) {
      double curvature = kii + kjj + 2.0 * qij;
      if (curvature <= 0.0) curvature = kTau;
      const double delta = (-grad[i] - grad[j]) / curvature;
      const double diff = alpha[i] - alpha[j];
      alpha[i] += delta;
      alpha[j] += delta;
      if (diff > 0.0) {
        if (alpha[j] < 0.0) {
          alpha[j] = 0.0;
          alpha[i] = diff;
        }
      } else if (alpha[i] < 0.0) {
        alpha[i] = 0.0;
        alpha[j] = -diff;
      }
      if (diff > 0.0) {
        if (alpha[i] > c) {
          alpha[i] = c;
          alpha[j] = c - diff;
        }
      } else if (alpha[j] > c) {
        alpha[j] = c;
        alpha[i] = c + diff;
      }
    } else {
      double curvature = kii + kjj - 2.0 * qij;
      if (curvature <= 0.0) curvature = kTau;
      const double delta = (grad[i] - grad[j]) / curvature;
      const double sum = alpha[i] + alpha[j];
      alpha[i] -= delta;
      alpha[j] += delta;
      if (sum > c) {
        if (alpha[i] > c) {
          alpha[i] = c;
          alpha[j] = sum - c;
        }
      } else if (alpha[j] < 0.0) {
        alpha[j] = 0.0;
        alpha[i] = sum;
      }
      if (sum > c) {
        if (alpha[j] > c) {
          alpha[j] = c;
          alpha[i] = sum - c;
        }
      } else if (alpha[i] < 0.0) {
        alpha[i] = 0.0;
        alpha[j] = sum;
      }
    }

    const double di = alpha[i] - old_ai;
    const double dj = alpha[j] - old_aj;
    for (std::size_t t = 0; t < n; ++t) grad[t] += q(t, i) * di + q(t, j) * dj;
    stall = (std::abs(di) + std::abs(dj) < 1e-15) ? stall + 1 : 0;
  }

  // Bias from the free multipliers, or the midpoint of the feasible interval.
  double upper = std::numeric_limits<double>::infinity();
  double lower = -std::numeric_limits<double>::infinity();
  double free_sum = 0.0;
  std::size_t free_count = 0;
  for (std::size_t t = 0; t < n; ++t) {
    const double yg = y(t) * grad[t];
    if (alpha[t] >= c) {
      if (targets[t] == -1) {
        upper = std::min(upper, yg);
      } else {
        lower = std::max(lower, yg);
      }
    } else if (alpha[t] <= 0.0) {
      if (targets[t] == 1) {
        upper = std::min(upper, yg);
      } else {
        lower = std::max(lower, yg);
      }
    } else {
      free_sum += yg;
      ++free_count;
    }
  }
  const double rho = free_count > 0 ? free_sum / static_cast<double>(free_count) : (upper + lower) / 2.0;
  out.bias = -rho;

  double objective = 0.0;  // ½ αᵀQα − Σα
  for (std::size_t t = 0; t < n; ++t) objective += alpha[t] * (grad[t] - 1.0);
  out.dual_objective = -objective / 2.0;
  out.alpha = std::move(alpha);
  return out;
}

double BinarySvmModel::decision_value(std::span<const double> input) const {
  if (static_cast<Eigen::Index>(input.size()) != support_vectors.cols()) {
    throw Error("decision_value: expected dimension " + std::to_string(support_vectors.cols()) + ", got " +
                std::to_string(input.size()));
  }
  double value = bias;
  for (Eigen::Index s = 0; s < support_vectors.rows(); ++s) {
    double d2 = 0.0;
    for (Eigen::Index k = 0; k < support_vectors.cols(); ++k) {
      const double d = support_vectors(s, k) - input[static_cast<std::size_t>(k)];
      d2 += d * d;
    }
    value += dual_coef[static_cast<std::size_t>(s)] * std::exp(-params.gamma * d2);
  }
  return value;
}

double BinarySvmModel::decision_value(const Eigen::VectorXd& input) const {
  return decision_value(std::span<const double>(input.data(), static_cast<std::size_t>(input.size())));
}

BinarySvmModel train_binary(const Eigen::MatrixXd& inputs, std::span<const int> targets, const SvmParams& params) {
  if (inputs.rows() != static_cast<Eigen::Index>(targets.size())) {
    throw Error("train_binary: input and target counts differ");
  }
  const Eigen::MatrixXd kernel = rbf_from_squared_distances(squared_distances(inputs, inputs), params.gamma);
  const SmoSolution smo = solve_smo(kernel, targets, params);
  BinarySvmModel model;
  model.params = params;
  model.bias = smo.bias;
  model.converged = smo.converged;
  std::vector<Eigen::Index> rows;
  for (std::size_t i = 0; i < targets.size(); ++i) {
    if (smo.alpha[i] > 0.0) {
      rows.push_back(static_cast<Eigen::Index>(i));
      model.dual_coef.push_back(smo.alpha[i] * targets[i]);
    }
  }
  model.support_vectors.resize(static_cast<Eigen::Index>(rows.size()), inputs.cols());
  for (std::size_t s = 0; s < rows.size(); ++s) model.support_vectors.row(static_cast<Eigen::Index>(s)) = inputs.row(rows[s]);
  return model;
}

Prediction ovo_vote(std::span<const double> decisions, const std::vector<bool>& trained,
                    std::span<const FamilyLabel> classes) {
  const std::size_t k = classes.size();
  if (decisions.size() != k * (k - 1) / 2 || trained.size() != decisions.size()) {
    throw Error("ovo_vote: expected one decision per class pair");
  }
  Prediction p;
  p.votes.assign(k, 0);
  p.margins.assign(k, 0.0);
  std::size_t pair = 0;
  for (std::size_t a = 0; a < k; ++a) {
    for (std::size_t b = a + 1; b < k; ++b, ++pair) {
      if (!trained[pair]) continue;
      const std::size_t winner = decisions[pair] >= 0.0 ? a : b;
      ++p.votes[winner];
      p.margins[winner] += std::abs(decisions[pair]);
    }
  }
  std::size_t best = 0;
  for (std::size_t c = 1; c < k; ++c) {
    if (p.votes[c] > p.votes[best] || (p.votes[c] == p.votes[best] && p.margins[c] > p.margins[best])) best = c;
  }
  p.class_index = best;
  p.label = classes[best];
  return p;
}

Prediction MulticlassSvmModel::predict(const Eigen::VectorXd& input) const {
  std::vector<double> decisions;
  decisions.reserve(pair_models.size());
  for (const auto& m : pair_models) decisions.push_back(m.decision_value(input));
  return ovo_vote(decisions, std::vector<bool>(pair_models.size(), true), classes);
}

std::size_t MulticlassSvmModel::input_dim() const {
  return pair_models.empty() ? 0 : static_cast<std::size_t>(pair_models.front().support_vectors.cols());
}

MulticlassSvmModel train_multiclass(const Eigen::MatrixXd& inputs, std::span<const FamilyLabel> labels,
                                    const SvmParams& params) {
  if (inputs.rows() != static_cast<Eigen::Index>(labels.size())) {
    throw Error("train_multiclass: input and label counts differ");
  }
  params.validate();
  const LabelEncoding enc = LabelEncoding::encode(labels);
  if (enc.classes.size() < 2) throw Error("train_multiclass: need at least 2 classes");
  const Eigen::MatrixXd kernel = rbf_from_squared_distances(squared_distances(inputs, inputs), params.gamma);
  std::vector<Eigen::Index> rows(static_cast<std::size_t>(inputs.rows()));
  for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = static_cast<Eigen::Index>(i);
  const auto pairs = train_pairs(kernel, rows, enc.ids, static_cast<int>(enc.classes.size()), params);

  MulticlassSvmModel model;
  model.classes = enc.classes;
  for (const auto& sol : pairs) {
    BinarySvmModel m;
    m.params = params;
    m.bias = sol.bias;
    m.converged = sol.converged;
    m.dual_coef = sol.coef;
    m.support_vectors.resize(static_cast<Eigen::Index>(sol.sv_rows.size()), inputs.cols());
    for (std::size_t s = 0; s < sol.sv_rows.size(); ++s) {
      m.support_vectors.row(static_cast<Eigen::Index>(s)) = inputs.row(sol.sv_rows[s]);
    }
    model.pair_models.push_back(std::move(m));
  }
  return model;
}

std::vector<int> stratified_folds(std::span<const int> label_ids, std::span<const std::string> groups, int folds,
                                  std::uint64_t seed) {
  if (folds < 2) throw Error("cross-validation needs at least 2 folds");
  if (!groups.empty() && groups.size() != label_ids.size()) throw Error("stratified_folds: group count mismatch");

  // Units are instances, or groups in order of first appearance.
  std::vector<std::size_t> unit_of(label_ids.size());
  std::vector<int> unit_label;
  std::map<std::string, std::size_t> group_unit;
  for (std::size_t i = 0; i < label_ids.size(); ++i) {
    if (groups.empty()) {
      unit_of[i] = unit_label.size();
      unit_label.push_back(label_ids[i]);
      continue;
    }
    const auto [it, inserted] = group_unit.emplace(groups[i], unit_label.size());
    if (inserted) {
      unit_label.push_back(label_ids[i]);
    } else if (unit_label[it->second] != label_ids[i]) {
      throw Error("stratified_folds: group '" + groups[i] + "' mixes labels");
    }
    unit_of[i] = it->second;
  }
  if (unit_label.size() < static_cast<std::size_t>(folds)) {
    throw Error("cross-validation: " + std::to_string(unit_label.size()) + " samples cannot fill " +
                std::to_string(folds) + " folds");
  }

  const int num_classes = *std::max_element(unit_label.begin(), unit_label.end()) + 1;
  std::mt19937_64 rng(seed);
  std::vector<int> unit_fold(unit_label.size(), 0);
  std::size_t counter = 0;
  for (int c = 0; c < num_classes; ++c) {
    std::vector<std::size_t> members;
    for (std::size_t u = 0; u < unit_label.size(); ++u) {
      if (unit_label[u] == c) members.push_back(u);
    }
    std::shuffle(members.begin(), members.end(), rng);
    for (std::size_t u : members) unit_fold[u] = static_cast<int>(counter++ % static_cast<std::size_t>(folds));
  }
  std::vector<int> fold_of(label_ids.size());
  for (std::size_t i = 0; i < label_ids.size(); ++i) fold_of[i] = unit_fold[unit_of[i]];
  return fold_of;
}

CvResult cross_validate(const Eigen::MatrixXd& inputs, std::span<const FamilyLabel> labels, const SvmParams& params,
                        int folds, std::uint64_t seed, std::span<const std::string> groups) {
  if (inputs.rows() != static_cast<Eigen::Index>(labels.size())) {
    throw Error("cross_validate: input and label counts differ");
  }
  params.validate();
  const LabelEncoding enc = LabelEncoding::encode(labels);
  const std::vector<int> fold_of = stratified_folds(enc.ids, groups, folds, seed);
  CvResult result = cross_validate_distances(squared_distances(inputs, inputs), enc, params, fold_of, folds);
  result.undersized_classes = has_undersized_class(enc.ids, groups, folds);
  return result;
}

GridSearchResult grid_search(const Eigen::MatrixXd& inputs, std::span<const FamilyLabel> labels,
                             std::vector<double> c_grid, std::vector<double> gamma_grid, int folds,
                             std::uint64_t seed, std::span<const std::string> groups, const SvmParams& base) {
  if (inputs.rows() != static_cast<Eigen::Index>(labels.size())) {
    throw Error("grid_search: input and label counts differ");
  }
  c_grid = sorted_unique(std::move(c_grid), "C");
  gamma_grid = sorted_unique(std::move(gamma_grid), "gamma");
  const LabelEncoding enc = LabelEncoding::encode(labels);
  const std::vector<int> fold_of = stratified_folds(enc.ids, groups, folds, seed);
  const Eigen::MatrixXd distances = squared_distances(inputs, inputs);

  GridSearchResult result;
  result.best_accuracy = -1.0;
  for (double c : c_grid) {
    for (double gamma : gamma_grid) {
      SvmParams params = base;
      params.c = c;
      params.gamma = gamma;
      const CvResult cv = cross_validate_distances(distances, enc, params, fold_of, folds);
      result.cells.push_back({c, gamma, cv.mean_accuracy});
      if (cv.mean_accuracy > result.best_accuracy) {
        result.best_accuracy = cv.mean_accuracy;
        result.best = params;
      }
    }
  }
  return result;
}

}  // namespace dfaprint
