#include "dfaprint/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>

#include <json.hpp>

namespace dfaprint {

ConfusionMatrix::ConfusionMatrix(std::vector<FamilyLabel> classes)
    : classes_(std::move(classes)), counts_(classes_.size() * classes_.size(), 0) {}

std::size_t ConfusionMatrix::total() const {
  std::size_t t = 0;
  for (std::size_t c : counts_) t += c;
  return t;
}

std::size_t ConfusionMatrix::row_sum(std::size_t i) const {
  std::size_t s = 0;
  for (std::size_t j = 0; j < size(); ++j) s += count(i, j);
  return s;
}

std::size_t ConfusionMatrix::column_sum(std::size_t j) const {
  std::size_t s = 0;
  for (std::size_t i = 0; i < size(); ++i) s += count(i, j);
  return s;
}

void ConfusionMatrix::add(std::size_t truth, std::size_t predicted, std::size_t n) {
  if (truth >= size() || predicted >= size()) throw Error("confusion matrix index out of range");
  counts_[truth * size() + predicted] += n;
}

ConfusionMatrix& ConfusionMatrix::operator+=(const ConfusionMatrix& other) {
  if (other.classes_ != classes_) throw Error("cannot add confusion matrices over different classes");
  for (std::size_t k = 0; k < counts_.size(); ++k) counts_[k] += other.counts_[k];
  return *this;
}

ConfusionMatrix confusion(std::span<const FamilyLabel> truths, std::span<const FamilyLabel> predictions,
                          std::span<const FamilyLabel> classes) {
  if (truths.size() != predictions.size()) throw Error("confusion: truth and prediction counts differ");
  std::map<FamilyLabel, std::size_t> index;
  for (std::size_t i = 0; i < classes.size(); ++i) {
    if (!index.emplace(classes[i], i).second) throw Error("confusion: duplicate class '" + classes[i] + "'");
  }
  const auto lookup = [&](const FamilyLabel& label) {
    const auto it = index.find(label);
    if (it == index.end()) throw Error("confusion: unknown label '" + label + "'");
    return it->second;
  };
  ConfusionMatrix m(std::vector<FamilyLabel>(classes.begin(), classes.end()));
  for (std::size_t k = 0; k < truths.size(); ++k) m.add(lookup(truths[k]), lookup(predictions[k]));
  return m;
}

double accuracy(const ConfusionMatrix& m) {
  const std::size_t total = m.total();
  if (total == 0) throw Error("accuracy: empty confusion matrix");
  std::size_t diagonal = 0;
  for (std::size_t i = 0; i < m.size(); ++i) diagonal += m.count(i, i);
  return static_cast<double>(diagonal) / static_cast<double>(total);
}

std::optional<double> precision(const ConfusionMatrix& m, std::size_t i) {
  if (m.total() == 0) throw Error("precision: empty confusion matrix");
  const std::size_t col = m.column_sum(i);
  if (col == 0) return std::nullopt;
  return static_cast<double>(m.count(i, i)) / static_cast<double>(col);
}

std::optional<double> recall(const ConfusionMatrix& m, std::size_t i) {
  if (m.total() == 0) throw Error("recall: empty confusion matrix");
  const std::size_t row = m.row_sum(i);
  if (row == 0) return std::nullopt;
  return static_cast<double>(m.count(i, i)) / static_cast<double>(row);
}

NormalizedConfusion normalize_rows(const ConfusionMatrix& m) {
  const auto k = static_cast<Eigen::Index>(m.size());
  NormalizedConfusion out;
  out.values = Eigen::MatrixXd::Zero(k, k);
  out.empty_row.assign(m.size(), false);
  for (std::size_t i = 0; i < m.size(); ++i) {
    const std::size_t row = m.row_sum(i);
    if (row == 0) {
      out.empty_row[i] = true;
      continue;
    }
    for (std::size_t j = 0; j < m.size(); ++j) {
      out.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          static_cast<double>(m.count(i, j)) / static_cast<double>(row);
    }
  }
  return out;
}

std::vector<Sample> build_samples(std::span<const LabeledTrace> traces, std::span<const std::string> sample_ids,
                                  const DfaConfig& config) {
  if (traces.size() != sample_ids.size()) throw Error("build_samples: one sample id per trace is required");
  std::vector<Sample> samples;
  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < traces.size(); ++i) {
    const auto [it, inserted] = index.emplace(sample_ids[i], samples.size());
    if (inserted) samples.push_back(Sample{sample_ids[i], traces[i].family, {}});
    Sample& s = samples[it->second];
    if (s.family != traces[i].family) {
      throw Error("sample '" + s.id + "' has runs labelled '" + s.family + "' and '" + traces[i].family + "'");
    }
    s.runs.push_back(fingerprint(traces[i].trace, config));
  }
  return samples;
}

HoldoutSplit stratified_holdout_split(std::span<const Sample> samples, double train_fraction, std::uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) throw Error("train fraction must lie in (0, 1)");
  std::map<FamilyLabel, std::vector<std::size_t>> by_family;
  for (std::size_t i = 0; i < samples.size(); ++i) by_family[samples[i].family].push_back(i);
  std::mt19937_64 rng(seed);
  HoldoutSplit split;
  for (auto& [family, members] : by_family) {
    if (members.size() < 2) {
      throw Error("family '" + family + "' has " + std::to_string(members.size()) +
                  " sample(s); at least 2 are needed for a train/test split");
    }
    std::shuffle(members.begin(), members.end(), rng);
    auto n_train = static_cast<std::size_t>(std::llround(train_fraction * static_cast<double>(members.size())));
    n_train = std::clamp<std::size_t>(n_train, 1, members.size() - 1);
    split.train.insert(split.train.end(), members.begin(), members.begin() + static_cast<std::ptrdiff_t>(n_train));
    split.test.insert(split.test.end(), members.begin() + static_cast<std::ptrdiff_t>(n_train), members.end());
  }
  std::sort(split.train.begin(), split.train.end());
  std::sort(split.test.begin(), split.test.end());
  return split;
}

MeanStd mean_std(std::span<const double> values) {
  MeanStd out;
  if (values.empty()) return out;
  double sum = 0.0;
  for (double v : values) sum += v;
  out.mean = sum / static_cast<double>(values.size());
  if (values.size() < 2) return out;
  double ss = 0.0;
  for (double v : values) ss += (v - out.mean) * (v - out.mean);
  out.std = std::sqrt(ss / static_cast<double>(values.size() - 1));
  return out;
}

ExperimentReport repeated_holdout(std::span<const Sample> samples, const HoldoutConfig& config) {
  if (samples.empty()) throw Error("repeated_holdout: no samples");
  if (config.repetitions < 1) throw Error("repeated_holdout: at least one repetition is required");
  ExperimentReport report;
  for (const auto& s : samples) {
    if (s.runs.empty()) throw Error("sample '" + s.id + "' has no fingerprints");
    report.classes.push_back(s.family);
  }
  std::sort(report.classes.begin(), report.classes.end());
  report.classes.erase(std::unique(report.classes.begin(), report.classes.end()), report.classes.end());
  report.total_confusion = ConfusionMatrix(report.classes);

  const std::size_t k = report.classes.size();
  std::vector<std::vector<double>> precisions(k);
  std::vector<std::vector<double>> recalls(k);
  std::vector<double> accuracies;

  for (std::size_t rep = 0; rep < config.repetitions; ++rep) {
    const std::uint64_t rep_seed = config.seed + rep;
    const HoldoutSplit split = stratified_holdout_split(samples, config.train_fraction, rep_seed);

    std::vector<FeatureVector> train;
    std::vector<FamilyLabel> train_labels;
    std::vector<std::string> train_groups;
    for (std::size_t i : split.train) {
      for (const auto& run : samples[i].runs) {
        train.push_back(run);
        train_labels.push_back(samples[i].family);
        train_groups.push_back(samples[i].id);
      }
    }
    PipelineConfig pipeline = config.pipeline;
    pipeline.seed = rep_seed;
    const TrainedPipeline model = train_pipeline(train, train_labels, train_groups, pipeline);

    std::vector<FamilyLabel> truths;
    std::vector<FamilyLabel> predictions;
    for (std::size_t i : split.test) {
      for (const auto& run : samples[i].runs) {
        truths.push_back(samples[i].family);
        predictions.push_back(model.classify(run).label);
      }
    }
    RepetitionResult r;
    r.confusion = confusion(truths, predictions, report.classes);
    r.accuracy = accuracy(r.confusion);
    r.chosen_q = model.selection.q;
    r.cv_accuracy = model.chosen().cv_accuracy;
    for (std::size_t c = 0; c < k; ++c) {
      if (const auto p = precision(r.confusion, c)) precisions[c].push_back(*p);
      if (const auto rc = recall(r.confusion, c)) recalls[c].push_back(*rc);
    }
    accuracies.push_back(r.accuracy);
    report.total_confusion += r.confusion;
    report.repetitions.push_back(std::move(r));
  }

  const MeanStd acc = mean_std(accuracies);
  report.accuracy_mean = acc.mean;
  report.accuracy_std = acc.std;
  for (std::size_t c = 0; c < k; ++c) {
    ClassStats stats;
    stats.family = report.classes[c];
    const MeanStd p = mean_std(precisions[c]);
    const MeanStd rc = mean_std(recalls[c]);
    stats.precision_mean = p.mean;
    stats.precision_std = p.std;
    stats.recall_mean = rc.mean;
    stats.recall_std = rc.std;
    stats.precision_undefined = config.repetitions - precisions[c].size();
    stats.recall_undefined = config.repetitions - recalls[c].size();
    report.per_class.push_back(stats);
  }
  report.normalized_confusion = normalize_rows(report.total_confusion);
  return report;
}

namespace {

double sorted_median(const std::vector<double>& sorted, std::size_t begin, std::size_t end) {
  const std::size_t n = end - begin;
  const std::size_t mid = begin + n / 2;
  return n % 2 == 1 ? sorted[mid] : (sorted[mid - 1] + sorted[mid]) / 2.0;
}

}  // namespace

BoxStats box_stats(std::vector<double> values) {
  if (values.empty()) throw Error("box_stats: no values");
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  BoxStats b;
  b.min = values.front();
  b.max = values.back();
  b.median = sorted_median(values, 0, n);
  // Hinges: medians of the lower and upper halves, each including the
  // overall median when n is odd.
  const std::size_t half = (n + 1) / 2;
  b.q1 = sorted_median(values, 0, half);
  b.q3 = sorted_median(values, n - half, n);
  b.iqr = b.q3 - b.q1;
  const double lo = b.q1 - 1.5 * b.iqr;
  const double hi = b.q3 + 1.5 * b.iqr;
  for (double v : values) {
    if (v < lo || v > hi) b.outliers.push_back(v);
  }
  return b;
}

StabilityReport dfa_stability_report(const FamilySpec& spec, std::size_t runs, std::size_t length,
                                     const DfaConfig& config, std::uint64_t seed) {
  if (runs < 2) throw Error("stability report needs at least 2 runs");
  StabilityReport report;
  report.metrics = spec.schema().names();
  report.alphas.assign(report.metrics.size(), {});
  for (std::size_t r = 0; r < runs; ++r) {
    const Trace trace = generate_synthetic_trace(spec, seed + r, length);
    for (std::size_t m = 0; m < trace.num_metrics(); ++m) report.alphas[m].push_back(dfa(trace.series(m), config).alpha);
  }
  for (const auto& a : report.alphas) report.boxes.push_back(box_stats(a));
  return report;
}

std::vector<SweepRow> dfa_length_sweep(const FamilySpec& spec, std::span<const std::size_t> lengths,
                                       std::size_t runs_per_length, const DfaConfig& config, std::uint64_t seed) {
  if (lengths.empty()) throw Error("length sweep needs at least one length");
  if (runs_per_length < 1) throw Error("length sweep needs at least one run per length");
  for (std::size_t i = 0; i < lengths.size(); ++i) {
    if (lengths[i] < 256) throw Error("length sweep lengths must be at least 256");
    if (i > 0 && lengths[i] <= lengths[i - 1]) throw Error("length sweep lengths must be ascending");
  }
  const auto metrics = spec.schema().names();
  std::vector<SweepRow> rows;
  for (std::size_t length : lengths) {
    std::vector<std::vector<double>> alphas(metrics.size());
    for (std::size_t r = 0; r < runs_per_length; ++r) {
      const Trace trace = generate_synthetic_trace(spec, seed + r, length);
      for (std::size_t m = 0; m < metrics.size(); ++m) alphas[m].push_back(dfa(trace.series(m), config).alpha);
    }
    for (std::size_t m = 0; m < metrics.size(); ++m) {
      const MeanStd ms = mean_std(alphas[m]);
      rows.push_back({metrics[m], length, ms.mean, ms.std});
    }
  }
  return rows;
}

std::string confusion_csv(const NormalizedConfusion& m, std::span<const FamilyLabel> classes) {
  std::string out = "class";
  for (const auto& c : classes) out += "," + c;
  out += '\n';
  for (std::size_t i = 0; i < classes.size(); ++i) {
    out += classes[i];
    for (std::size_t j = 0; j < classes.size(); ++j) {
      out += ',' + format_real(m.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
    }
    out += '\n';
  }
  return out;
}

std::string precision_recall_csv(const ExperimentReport& report) {
  std::string out = "class,precision_mean,precision_std,recall_mean,recall_std\n";
  const std::size_t reps = report.repetitions.size();
  for (const auto& s : report.per_class) {
    const bool p_defined = s.precision_undefined < reps;
    const bool r_defined = s.recall_undefined < reps;
    out += s.family + ',' + (p_defined ? format_real(s.precision_mean) : "") + ',' +
           (p_defined ? format_real(s.precision_std) : "") + ',' + (r_defined ? format_real(s.recall_mean) : "") +
           ',' + (r_defined ? format_real(s.recall_std) : "") + '\n';
  }
  return out;
}

std::string repetitions_csv(const ExperimentReport& report) {
  std::string out = "repetition,accuracy,chosen_q,cv_accuracy\n";
  for (std::size_t r = 0; r < report.repetitions.size(); ++r) {
    const auto& rep = report.repetitions[r];
    out += std::to_string(r) + ',' + format_real(rep.accuracy) + ',' + std::to_string(rep.chosen_q) + ',' +
           format_real(rep.cv_accuracy) + '\n';
  }
  return out;
}

std::string report_json(const ExperimentReport& report) {
  nlohmann::ordered_json doc;
  doc["classes"] = report.classes;
  doc["repetitions"] = report.repetitions.size();
  doc["accuracy_mean"] = report.accuracy_mean;
  doc["accuracy_std"] = report.accuracy_std;
  auto accs = nlohmann::ordered_json::array();
  for (const auto& r : report.repetitions) accs.push_back(r.accuracy);
  doc["accuracy_per_repetition"] = accs;
  auto per_class = nlohmann::ordered_json::array();
  const std::size_t reps = report.repetitions.size();
  for (const auto& s : report.per_class) {
    nlohmann::ordered_json c;
    c["class"] = s.family;
    c["precision_mean"] = s.precision_undefined < reps ? nlohmann::ordered_json(s.precision_mean) : nullptr;
    c["precision_std"] = s.precision_undefined < reps ? nlohmann::ordered_json(s.precision_std) : nullptr;
    c["precision_undefined"] = s.precision_undefined;
    c["recall_mean"] = s.recall_undefined < reps ? nlohmann::ordered_json(s.recall_mean) : nullptr;
    c["recall_std"] = s.recall_undefined < reps ? nlohmann::ordered_json(s.recall_std) : nullptr;
    c["recall_undefined"] = s.recall_undefined;
    per_class.push_back(c);
  }
  doc["per_class"] = per_class;
  auto rows = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < report.classes.size(); ++i) {
    auto row = nlohmann::ordered_json::array();
    for (std::size_t j = 0; j < report.classes.size(); ++j) {
      row.push_back(report.normalized_confusion.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
    }
    rows.push_back(row);
  }
  doc["normalized_confusion"] = rows;
  return doc.dump(2) + "\n";
}

std::string stability_box_csv(const StabilityReport& report) {
  std::string out = "metric,min,q1,median,q3,max,iqr,outliers\n";
  for (std::size_t m = 0; m < report.metrics.size(); ++m) {
    const BoxStats& b = report.boxes[m];
    std::vector<std::string> outliers;
    for (double v : b.outliers) outliers.push_back(format_real(v));
    out += report.metrics[m] + ',' + format_real(b.min) + ',' + format_real(b.q1) + ',' + format_real(b.median) + ',' +
           format_real(b.q3) + ',' + format_real(b.max) + ',' + format_real(b.iqr) + ',' + join(outliers, ";") + '\n';
  }
  return out;
}

std::string length_sweep_csv(std::span<const SweepRow> rows) {
  std::string out = "metric,length,mean,std\n";
  for (const auto& r : rows) {
    out += r.metric + ',' + std::to_string(r.length) + ',' + format_real(r.mean) + ',' + format_real(r.std) + '\n';
  }
  return out;
}

}  // namespace dfaprint
