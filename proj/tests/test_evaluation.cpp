#include <doctest.h>

#include <random>
#include <set>

#include "dfaprint/evaluation.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

using namespace dfaprint;

namespace {

ConfusionMatrix from_counts(const std::vector<std::vector<std::size_t>>& counts) {
  std::vector<FamilyLabel> classes;
  for (std::size_t i = 0; i < counts.size(); ++i) classes.push_back("c" + std::to_string(i));
  ConfusionMatrix m(classes);
  for (std::size_t i = 0; i < counts.size(); ++i)
    for (std::size_t j = 0; j < counts.size(); ++j) m.add(i, j, counts[i][j]);
  return m;
}

FeatureVector constant_fv(double v) {
  FeatureVector f;
  f.names = {"dfa:m1", "dfa:m2", "corr:m1:m2"};
  f.values = {v, -v, 0.5 * v};
  f.degenerate.assign(3, false);
  return f;
}

FamilySpec white_spec(std::size_t n) {
  FamilySpec s;
  s.alpha_targets.assign(n, 0.5);
  s.correlation = Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  s.amplitudes.assign(n, 1.0);
  s.offsets.assign(n, 0.0);
  return s;
}

HoldoutConfig quick_holdout() {
  HoldoutConfig c;
  c.repetitions = 4;
  c.pipeline.q_grid = {10, 30, 50};
  c.pipeline.c_grid = {1.0, 10.0};
  c.pipeline.gamma_scales = {0.5, 1.0};
  c.pipeline.folds = 3;
  return c;
}

}  // namespace

TEST_CASE("confusion counts") {
  const std::vector<FamilyLabel> classes{"A", "B"};
  const auto m = confusion(std::vector<FamilyLabel>{"A", "A", "B"}, std::vector<FamilyLabel>{"A", "B", "B"}, classes);
  CHECK(m.count(0, 0) == 1);
  CHECK(m.count(0, 1) == 1);
  CHECK(m.count(1, 0) == 0);
  CHECK(m.count(1, 1) == 1);
  CHECK(m.total() == 3);
  const std::vector<FamilyLabel> same{"B", "A", "B", "B"};
  const auto d = confusion(same, same, classes);
  CHECK(d.count(0, 1) == 0);
  CHECK(d.count(1, 0) == 0);
  CHECK(d.total() == 4);
  CHECK_THROWS_AS(confusion(same, std::vector<FamilyLabel>{"A"}, classes), Error);
  CHECK_THROWS_AS(confusion(std::vector<FamilyLabel>{"Z"}, std::vector<FamilyLabel>{"A"}, classes), Error);
}

TEST_CASE("accuracy, precision and recall") {
  const auto m = from_counts({{8, 2}, {1, 9}});
  CHECK(accuracy(m) == 0.85);
  CHECK(*precision(m, 0) == 8.0 / 9.0);
  CHECK(*recall(m, 0) == 0.8);
  const auto diag = from_counts({{3, 0, 0}, {0, 4, 0}, {0, 0, 5}});
  CHECK(accuracy(diag) == 1.0);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(*precision(diag, i) == 1.0);
    CHECK(*recall(diag, i) == 1.0);
  }
  const auto never = from_counts({{3, 0}, {2, 0}});
  CHECK_FALSE(precision(never, 1).has_value());
  CHECK(recall(never, 1).has_value());
  CHECK(*recall(never, 1) == 0.0);
  CHECK_FALSE(recall(from_counts({{3, 0}, {0, 0}}), 1).has_value());
}

TEST_CASE("accuracy agrees with a naive loop") {
  std::mt19937_64 rng(8);
  std::uniform_int_distribution<std::size_t> count(0, 20), size(2, 6);
  for (int t = 0; t < 200; ++t) {
    const std::size_t k = size(rng);
    std::vector<std::vector<std::size_t>> c(k, std::vector<std::size_t>(k));
    for (auto& row : c)
      for (auto& x : row) x = count(rng);
    c[0][0] += 1;
    CHECK(accuracy(from_counts(c)) == oracle::naive_accuracy(c));
  }
}

TEST_CASE("row normalisation") {
  const auto n = normalize_rows(from_counts({{8, 2}, {1, 9}}));
  CHECK(n.values(0, 0) == 0.8);
  CHECK(n.values(0, 1) == 0.2);
  CHECK(n.values(1, 0) == 0.1);
  CHECK(n.values(1, 1) == 0.9);
  const auto d = normalize_rows(from_counts({{2, 0}, {0, 7}}));
  CHECK(d.values == Eigen::MatrixXd::Identity(2, 2));
  const auto e = normalize_rows(from_counts({{1, 2, 3}, {0, 0, 0}, {5, 5, 1}}));
  CHECK(e.empty_row == std::vector<bool>{false, true, false});
  CHECK(std::abs(e.values.row(0).sum() - 1.0) <= 1e-12);
  CHECK(std::abs(e.values.row(2).sum() - 1.0) <= 1e-12);
  CHECK(e.values.row(1).sum() == 0.0);
}

TEST_CASE("holdout split is a stratified partition of samples") {
  std::vector<Sample> samples;
  for (int i = 0; i < 23; ++i) samples.push_back(Sample{"s" + std::to_string(i), i % 3 ? "a" : "b", {}});
  const auto split = stratified_holdout_split(samples, 0.7, 5);
  std::set<std::size_t> all(split.train.begin(), split.train.end());
  for (auto i : split.test) CHECK(all.insert(i).second);
  CHECK(all.size() == samples.size());
  std::size_t train_a = 0, train_b = 0;
  for (auto i : split.train) (samples[i].family == "a" ? train_a : train_b)++;
  CHECK(train_a == 11);  // round(0.7 · 15)
  CHECK(train_b == 6);   // round(0.7 · 8)
  const auto again = stratified_holdout_split(samples, 0.7, 5);
  CHECK(again.train == split.train);
  samples.push_back(Sample{"lonely", "c", {}});
  try {
    stratified_holdout_split(samples, 0.7, 5);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("'c'") != std::string::npos);
  }
}

TEST_CASE("identical fingerprints per family give perfect accuracy") {
  std::vector<Sample> samples;
  for (int f = 0; f < 3; ++f)
    for (int s = 0; s < 10; ++s) {
      const std::string fam = "fam" + std::to_string(f);
      samples.push_back(Sample{fam + "/" + std::to_string(s), fam, {constant_fv(f + 1.0), constant_fv(f + 1.0)}});
    }
  const auto report = repeated_holdout(samples, quick_holdout());
  CHECK(report.accuracy_mean == 1.0);
  CHECK(report.accuracy_std == 0.0);
}

TEST_CASE("repeated holdout report") {
  const auto d = fixtures::make_dataset(fixtures::dfa_only_families(), 8, 2, 512);
  std::vector<Sample> samples;
  for (std::size_t i = 0; i < d.fingerprints.size(); ++i) {
    if (samples.empty() || samples.back().id != d.groups[i]) samples.push_back(Sample{d.groups[i], d.labels[i], {}});
    samples.back().runs.push_back(d.fingerprints[i]);
  }
  const auto cfg = quick_holdout();
  const auto report = repeated_holdout(samples, cfg);
  CHECK(report.repetitions.size() == 4);
  CHECK(report.classes == std::vector<FamilyLabel>{"fa", "fb", "fc"});

  std::vector<double> acc;
  std::size_t total = 0;
  for (const auto& r : report.repetitions) {
    acc.push_back(r.accuracy);
    total += r.confusion.total();
    CHECK(r.confusion.total() == 2 * 3 * 2);  // 2 test samples per family, 2 runs each
  }
  double mean = 0.0;
  for (double a : acc) mean += a / static_cast<double>(acc.size());
  double ss = 0.0;
  for (double a : acc) ss += (a - mean) * (a - mean);
  CHECK(std::abs(report.accuracy_mean - mean) <= 1e-12);
  CHECK(std::abs(report.accuracy_std - std::sqrt(ss / static_cast<double>(acc.size() - 1))) <= 1e-12);
  CHECK(report.total_confusion.total() == total);

  const auto again = repeated_holdout(samples, cfg);
  CHECK(report_json(again) == report_json(report));
  CHECK(repetitions_csv(again) == repetitions_csv(report));

  const std::string csv = repetitions_csv(report);
  CHECK(csv.rfind("repetition,accuracy,chosen_q,cv_accuracy\n", 0) == 0);
  CHECK(precision_recall_csv(report).rfind("class,precision_mean,precision_std,recall_mean,recall_std\n", 0) == 0);
  CHECK(confusion_csv(report.normalized_confusion, report.classes).rfind("class,fa,fb,fc\n", 0) == 0);
}

TEST_CASE("mean and sample standard deviation") {
  const std::vector<double> v{1.0, 2.0, 3.0, 4.0};
  const auto ms = mean_std(v);
  CHECK(ms.mean == 2.5);
  CHECK(ms.std == doctest::Approx(std::sqrt(5.0 / 3.0)));
  CHECK(mean_std(std::vector<double>{7.0}).std == 0.0);
}

TEST_CASE("box statistics") {
  const auto two = box_stats({3.0, 1.0});
  CHECK(two.q1 == two.min);
  CHECK(two.q3 == two.max);
  const auto b = box_stats({1, 2, 3, 4, 5, 6, 7, 8, 9, 100});
  CHECK(b.median == 5.5);
  CHECK(b.q1 == 3.0);
  CHECK(b.q3 == 8.0);
  CHECK(b.outliers == std::vector<double>{100.0});
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<int> size(1, 40);
  for (int t = 0; t < 200; ++t) {
    const auto v = oracle::white_noise(static_cast<std::size_t>(size(rng)), static_cast<unsigned long long>(t));
    const auto q = oracle::quartiles(v);
    const auto s = box_stats(v);
    CHECK(s.q1 == q.q1);
    CHECK(s.median == q.median);
    CHECK(s.q3 == q.q3);
    CHECK(s.min == *std::min_element(v.begin(), v.end()));
    CHECK(s.max == *std::max_element(v.begin(), v.end()));
  }
  CHECK_THROWS_AS(box_stats({}), Error);
}

TEST_CASE("stability report on white-noise targets") {
  const auto r = dfa_stability_report(white_spec(3), 30, 8192, {}, 0);
  REQUIRE(r.boxes.size() == 3);
  for (const auto& b : r.boxes) {
    CHECK(b.median >= 0.45);
    CHECK(b.median <= 0.55);
    CHECK(b.iqr < 0.15);
  }
  const auto two = dfa_stability_report(white_spec(2), 2, 512, {}, 9);
  for (const auto& b : two.boxes) {
    CHECK(b.q1 == b.min);
    CHECK(b.q3 == b.max);
  }
  CHECK(stability_box_csv(dfa_stability_report(white_spec(2), 3, 512, {}, 4)) ==
        stability_box_csv(dfa_stability_report(white_spec(2), 3, 512, {}, 4)));
}

TEST_CASE("length sweep") {
  const std::vector<std::size_t> lengths{512, 16384};
  const auto rows = dfa_length_sweep(white_spec(3), lengths, 5, {}, 0);
  REQUIRE(rows.size() == 6);
  double short_std = 0.0, long_std = 0.0;
  for (const auto& r : rows) (r.length == 512 ? short_std : long_std) += r.std / 3.0;
  CHECK(long_std <= short_std);
  const std::vector<std::size_t> single{1024};
  CHECK(dfa_length_sweep(white_spec(4), single, 2, {}, 0).size() == 4);
  CHECK(length_sweep_csv(rows) == length_sweep_csv(dfa_length_sweep(white_spec(3), lengths, 5, {}, 0)));
  const std::vector<std::size_t> unsorted{1024, 512};
  CHECK_THROWS_AS(dfa_length_sweep(white_spec(2), unsorted, 2, {}, 0), Error);
}
