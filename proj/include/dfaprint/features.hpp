#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "dfaprint/trace.hpp"

namespace dfaprint {

/// Parameters of detrended fluctuation analysis. Box sizes are log-spaced
/// from `min_box` to floor(max_box_fraction · T) with `boxes_per_decade`
/// sizes per decade; each box is detrended with a polynomial of
/// `detrend_order`.
struct DfaConfig {
  std::size_t min_box = 4;
  double max_box_fraction = 0.25;
  std::size_t boxes_per_decade = 8;
  std::size_t detrend_order = 1;

  void validate() const;
  friend bool operator==(const DfaConfig&, const DfaConfig&) = default;
};

struct DfaResult {
  double alpha = 0.0;
  bool degenerate = false;  // constant input: alpha reported as 0
  std::vector<std::size_t> box_sizes;
  std::vector<double> fluctuations;  // F(s), aligned with box_sizes
};

// Distinct box sizes for a series of `length` samples. Throws Error when
// fewer than four sizes are usable.
std::vector<std::size_t> dfa_box_sizes(std::size_t length, const DfaConfig& config);

DfaResult dfa(std::span<const double> series, const DfaConfig& config = {});

inline double dfa_exponent(std::span<const double> series, const DfaConfig& config = {}) {
  return dfa(series, config).alpha;
}

struct Correlation {
  double r = 0.0;
  bool degenerate = false;  // either series constant: r reported as 0
};

/// Pearson correlation with population moments, clamped to [-1, 1].
Correlation pearson(std::span<const double> x, std::span<const double> y);

struct CorrelationMatrix {
  Eigen::MatrixXd values;
  Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> degenerate;
};

CorrelationMatrix correlation_matrix(const Trace& trace);

/// The fingerprint of one run: DFA exponents in schema order followed by
/// the upper-triangle correlations in row-major order.
struct FeatureVector {
  std::vector<std::string> names;
  std::vector<double> values;
  std::vector<bool> degenerate;

  std::size_t size() const noexcept { return values.size(); }
};

std::size_t fingerprint_size(std::size_t num_metrics) noexcept;
std::vector<std::string> fingerprint_feature_names(const MetricSchema& schema);

FeatureVector fingerprint(const Trace& trace, const DfaConfig& config = {});

// `feature,value` CSV, one row per feature in canonical order.
std::string write_fingerprint_csv(const FeatureVector& features);
FeatureVector parse_fingerprint_csv(std::string_view text);

}  // namespace dfaprint
