#include "dfaprint/features.hpp"

#include <algorithm>
#include <cmath>

namespace dfaprint {

namespace {

// Orthonormal polynomial basis of degree `order` sampled on `size` equally
// spaced points of [-1, 1]; column-major, basis[j * size + t].
std::vector<double> polynomial_basis(std::size_t size, std::size_t order) {
  const std::size_t cols = order + 1;
  std::vector<double> basis(cols * size);
  const double half_span = static_cast<double>(size - 1) / 2.0;
  for (std::size_t t = 0; t < size; ++t) {
    const double x = (static_cast<double>(t) - half_span) / half_span;
    double power = 1.0;
    for (std::size_t j = 0; j < cols; ++j) {
      basis[j * size + t] = power;
      power *= x;
    }
  }
  // Modified Gram-Schmidt, two sweeps for numerical orthogonality.
  for (std::size_t j = 0; j < cols; ++j) {
    double* col = &basis[j * size];
    for (int sweep = 0; sweep < 2; ++sweep) {
      for (std::size_t k = 0; k < j; ++k) {
        const double* prev = &basis[k * size];
        double dot = 0.0;
        for (std::size_t t = 0; t < size; ++t) dot += prev[t] * col[t];
        for (std::size_t t = 0; t < size; ++t) col[t] -= dot * prev[t];
      }
    }
    double norm = 0.0;
    for (std::size_t t = 0; t < size; ++t) norm += col[t] * col[t];
    norm = std::sqrt(norm);
    for (std::size_t t = 0; t < size; ++t) col[t] /= norm;
  }
  return basis;
}

// Residual sum of squares after projecting `segment` off the basis.
double detrended_rss(const double* segment, std::size_t size, const std::vector<double>& basis, std::size_t cols,
                     std::vector<double>& scratch) {
  scratch.assign(segment, segment + size);
  for (std::size_t j = 0; j < cols; ++j) {
    const double* q = &basis[j * size];
    double dot = 0.0;
    for (std::size_t t = 0; t < size; ++t) dot += q[t] * scratch[t];
    for (std::size_t t = 0; t < size; ++t) scratch[t] -= dot * q[t];
  }
  double rss = 0.0;
  for (double r : scratch) rss += r * r;
  return rss;
}

}  // namespace

void DfaConfig::validate() const {
  if (min_box < 4) throw Error("DFA min_box must be at least 4");
  if (!(max_box_fraction > 0.0 && max_box_fraction <= 1.0)) throw Error("DFA max_box_fraction must lie in (0, 1]");
  if (boxes_per_decade < 4) throw Error("DFA boxes_per_decade must be at least 4");
  if (detrend_order < 1) throw Error("DFA detrend_order must be at least 1");
  if (detrend_order + 1 >= min_box) throw Error("DFA detrend_order must be smaller than min_box - 1");
}

std::vector<std::size_t> dfa_box_sizes(std::size_t length, const DfaConfig& config) {
  config.validate();
  const auto max_box = static_cast<std::size_t>(std::floor(config.max_box_fraction * static_cast<double>(length)));
  std::vector<std::size_t> sizes;
  if (static_cast<double>(config.min_box) < config.max_box_fraction * static_cast<double>(length)) {
    for (std::size_t k = 0;; ++k) {
      const double raw =
          static_cast<double>(config.min_box) *
          std::pow(10.0, static_cast<double>(k) / static_cast<double>(config.boxes_per_decade));
      const auto size = static_cast<std::size_t>(std::llround(raw));
      if (size > max_box) break;
      if (sizes.empty() || sizes.back() != size) sizes.push_back(size);
    }
  }
  if (sizes.size() < 4) {
    throw Error("DFA needs at least 4 distinct box sizes: T=" + std::to_string(length) +
                ", min_box=" + std::to_string(config.min_box) + ", max_box_fraction=" +
                format_real(config.max_box_fraction) + ", boxes_per_decade=" + std::to_string(config.boxes_per_decade) +
                " give " + std::to_string(sizes.size()));
  }
  return sizes;
}

DfaResult dfa(std::span<const double> series, const DfaConfig& config) {
  const std::size_t length = series.size();
  DfaResult result;
  result.box_sizes = dfa_box_sizes(length, config);

  const auto [lo, hi] = std::minmax_element(series.begin(), series.end());
  if (*lo == *hi) {
    result.degenerate = true;
    result.fluctuations.assign(result.box_sizes.size(), 0.0);
    return result;
  }

  double mean = 0.0;
  for (double v : series) mean += v;
  mean /= static_cast<double>(length);
  std::vector<double> profile(length);
  double running = 0.0;
  for (std::size_t k = 0; k < length; ++k) {
    running += series[k] - mean;
    profile[k] = running;
  }

  const std::size_t cols = config.detrend_order + 1;
  std::vector<double> scratch;
  result.fluctuations.reserve(result.box_sizes.size());
  for (std::size_t size : result.box_sizes) {
    const auto basis = polynomial_basis(size, config.detrend_order);
    const std::size_t boxes = length / size;
    double rss = 0.0;
    for (std::size_t b = 0; b < boxes; ++b) {
      rss += detrended_rss(profile.data() + b * size, size, basis, cols, scratch);
      rss += detrended_rss(profile.data() + (length - (b + 1) * size), size, basis, cols, scratch);
    }
    result.fluctuations.push_back(std::sqrt(rss / static_cast<double>(2 * boxes * size)));
  }

  // Least-squares slope of ln F against ln s over sizes with F > 0.
  std::vector<double> xs;
  std::vector<double> ys;
  for (std::size_t i = 0; i < result.box_sizes.size(); ++i) {
    if (result.fluctuations[i] > 0.0) {
      xs.push_back(std::log(static_cast<double>(result.box_sizes[i])));
      ys.push_back(std::log(result.fluctuations[i]));
    }
  }
  if (xs.size() < 2) {
    result.degenerate = true;
    return result;
  }
  double mx = 0.0;
  double my = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= static_cast<double>(xs.size());
  my /= static_cast<double>(xs.size());
  double sxy = 0.0;
  double sxx = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxy += (xs[i] - mx) * (ys[i] - my);
    sxx += (xs[i] - mx) * (xs[i] - mx);
  }
  result.alpha = sxy / sxx;
  return result;
}

Correlation pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw Error("pearson: series lengths differ");
  if (x.size() < 2) throw Error("pearson: need at least 2 samples");
  const auto n = static_cast<double>(x.size());
  double mx = 0.0;
  double my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0;
  double sxx = 0.0;
  double syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  const auto constant = [](std::span<const double> s) {
    return std::all_of(s.begin(), s.end(), [&](double v) { return v == s.front(); });
  };
  if (constant(x) || constant(y) || sxx == 0.0 || syy == 0.0) return {0.0, true};
  const double r = (sxy / n) / (std::sqrt(sxx / n) * std::sqrt(syy / n));
  return {std::clamp(r, -1.0, 1.0), false};
}

CorrelationMatrix correlation_matrix(const Trace& trace) {
  const auto n = static_cast<Eigen::Index>(trace.num_metrics());
  CorrelationMatrix out;
  out.values = Eigen::MatrixXd::Zero(n, n);
  out.degenerate.setConstant(n, n, false);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto xi = trace.series(static_cast<std::size_t>(i));
    const bool constant = std::all_of(xi.begin(), xi.end(), [&](double v) { return v == xi.front(); });
    out.values(i, i) = constant ? 0.0 : 1.0;
    out.degenerate(i, i) = constant;
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const Correlation c = pearson(xi, trace.series(static_cast<std::size_t>(j)));
      out.values(i, j) = out.values(j, i) = c.r;
      out.degenerate(i, j) = out.degenerate(j, i) = c.degenerate;
    }
  }
  return out;
}

std::size_t fingerprint_size(std::size_t num_metrics) noexcept { return num_metrics * (num_metrics + 1) / 2; }

std::vector<std::string> fingerprint_feature_names(const MetricSchema& schema) {
  std::vector<std::string> names;
  names.reserve(fingerprint_size(schema.size()));
  for (const auto& metric : schema.names()) names.push_back("dfa:" + metric);
  for (std::size_t i = 0; i < schema.size(); ++i) {
    for (std::size_t j = i + 1; j < schema.size(); ++j) names.push_back("corr:" + schema[i] + ":" + schema[j]);
  }
  return names;
}

FeatureVector fingerprint(const Trace& trace, const DfaConfig& config) {
  FeatureVector out;
  out.names = fingerprint_feature_names(trace.schema());
  out.values.reserve(out.names.size());
  out.degenerate.reserve(out.names.size());
  for (std::size_t m = 0; m < trace.num_metrics(); ++m) {
    const DfaResult r = dfa(trace.series(m), config);
    out.values.push_back(r.alpha);
    out.degenerate.push_back(r.degenerate);
  }
  const CorrelationMatrix corr = correlation_matrix(trace);
  const auto n = static_cast<Eigen::Index>(trace.num_metrics());
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      out.values.push_back(corr.values(i, j));
      out.degenerate.push_back(corr.degenerate(i, j));
    }
  }
  return out;
}

std::string write_fingerprint_csv(const FeatureVector& features) {
  std::string out = "feature,value\n";
  for (std::size_t i = 0; i < features.size(); ++i) {
    out += features.names[i];
    out += ',';
    out += format_real(features.values[i]);
    out += '\n';
  }
  return out;
}

FeatureVector parse_fingerprint_csv(std::string_view text) {
  auto lines = split(text, '\n');
  if (!lines.empty() && lines.back().empty()) lines.pop_back();
  if (lines.empty() || lines[0] != "feature,value") throw ParseError(1, "fingerprint header must be 'feature,value'");
  FeatureVector out;
  for (std::size_t li = 1; li < lines.size(); ++li) {
    const auto cells = split(lines[li], ',');
    if (cells.size() != 2) throw ParseError(li + 1, "expected 2 fields");
    const auto value = parse_real(cells[1]);
    if (!value || !std::isfinite(*value)) throw ParseError(li + 1, "non-numeric feature value");
    out.names.emplace_back(cells[0]);
    out.values.push_back(*value);
    out.degenerate.push_back(false);
  }
  return out;
}

}  // namespace dfaprint
