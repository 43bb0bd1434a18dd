#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "dfaprint/trace.hpp"

namespace dfaprint {

/// Control parameters for synthetic traces of one family: a target DFA
/// exponent, an amplitude and an offset per metric, plus a cross-metric
/// correlation template.
struct FamilySpec {
  std::string name = "family";
  std::vector<std::string> metric_names;  // empty: m1..mN
  std::vector<double> alpha_targets;
  Eigen::MatrixXd correlation;
  std::vector<double> amplitudes;
  std::vector<double> offsets;
  double sampling_interval = 0.25;

  std::size_t num_metrics() const noexcept { return alpha_targets.size(); }
  MetricSchema schema() const;

  // Throws Error naming the offending field.
  void validate() const;
};

FamilySpec parse_family_spec(std::string_view json_text);
std::string family_spec_to_json(const FamilySpec& spec);
FamilySpec load_family_spec(const std::string& path);

/// Lower-triangular factor L with L·Lᵀ equal to the template after
/// eigenvalues in [-1e-10, 0) are clamped to zero. Semidefinite templates
/// are accepted (zero pivots give zero columns). Throws Error when the
/// template is indefinite beyond the clamp.
Eigen::MatrixXd correlation_factor(const Eigen::MatrixXd& correlation);

/// Unit-variance zero-mean power-law noise with spectral density ∝ 1/f^beta,
/// synthesised in the frequency domain. `length` must be a power of two.
std::vector<double> power_law_noise(double beta, std::size_t length, std::uint64_t seed);

/// Deterministic in (spec, seed, length). Each metric starts as power-law
/// noise with beta = 2·alpha − 1, the metrics are mixed by the correlation
/// factor, then scaled and offset.
Trace generate_synthetic_trace(const FamilySpec& spec, std::uint64_t seed, std::size_t length);

bool is_power_of_two(std::size_t n) noexcept;

}  // namespace dfaprint
