#include "dfaprint/synth.hpp"

#include <cmath>
#include <complex>
#include <mutex>
#include <random>

#include <fftw3.h>
#include <json.hpp>

namespace dfaprint {

namespace {

// FFTW's planner is not re-entrant.
std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

std::vector<double> inverse_real_fft(std::vector<std::complex<double>> spectrum, std::size_t length) {
  std::vector<double> out(length);
  fftw_plan plan;
  {
    std::lock_guard lock(fftw_planner_mutex());
    plan = fftw_plan_dft_c2r_1d(static_cast<int>(length), reinterpret_cast<fftw_complex*>(spectrum.data()),
                                out.data(), FFTW_ESTIMATE);
  }
  if (plan == nullptr) throw Error("FFTW could not create an inverse transform plan");
  fftw_execute(plan);
  {
    std::lock_guard lock(fftw_planner_mutex());
    fftw_destroy_plan(plan);
  }
  return out;
}

std::vector<double> read_vector(const nlohmann::json& doc, const char* field) {
  if (!doc.contains(field)) throw Error(std::string("family spec: missing field '") + field + "'");
  const auto& node = doc.at(field);
  if (!node.is_array()) throw Error(std::string("family spec: field '") + field + "' must be an array of numbers");
  std::vector<double> out;
  for (const auto& v : node) {
    if (!v.is_number()) throw Error(std::string("family spec: field '") + field + "' must be an array of numbers");
    out.push_back(v.get<double>());
  }
  return out;
}

}  // namespace

bool is_power_of_two(std::size_t n) noexcept { return n != 0 && (n & (n - 1)) == 0; }

MetricSchema FamilySpec::schema() const {
  if (metric_names.empty()) return numbered_schema(num_metrics());
  return MetricSchema(metric_names);
}

void FamilySpec::validate() const {
  const std::size_t n = alpha_targets.size();
  if (n < 2) throw Error("family spec: field 'alpha_targets' needs at least 2 metrics");
  if (!metric_names.empty()) {
    if (metric_names.size() != n) throw Error("family spec: field 'metrics' length differs from 'alpha_targets'");
    (void)MetricSchema(metric_names);
  }
  for (double a : alpha_targets) {
    if (!(a > 0.0 && a < 2.0)) throw Error("family spec: field 'alpha_targets' entries must lie in (0, 2)");
  }
  if (amplitudes.size() != n) throw Error("family spec: field 'amplitudes' must have one entry per metric");
  for (double a : amplitudes) {
    if (!(a > 0.0) || !std::isfinite(a)) throw Error("family spec: field 'amplitudes' entries must be positive");
  }
  if (offsets.size() != n) throw Error("family spec: field 'offsets' must have one entry per metric");
  for (double o : offsets) {
    if (!std::isfinite(o)) throw Error("family spec: field 'offsets' entries must be finite");
  }
  if (correlation.rows() != static_cast<Eigen::Index>(n) || correlation.cols() != static_cast<Eigen::Index>(n)) {
    throw Error("family spec: field 'correlation' must be an n x n matrix");
  }
  for (Eigen::Index i = 0; i < correlation.rows(); ++i) {
    if (correlation(i, i) != 1.0) throw Error("family spec: field 'correlation' must have a unit diagonal");
    for (Eigen::Index j = 0; j < i; ++j) {
      if (!std::isfinite(correlation(i, j)) || std::abs(correlation(i, j) - correlation(j, i)) > 1e-12) {
        throw Error("family spec: field 'correlation' must be symmetric");
      }
    }
  }
  if (!(sampling_interval > 0.0)) throw Error("family spec: field 'sampling_interval' must be positive");
  (void)correlation_factor(correlation);
}

FamilySpec parse_family_spec(std::string_view json_text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(std::string("family spec: invalid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw Error("family spec: document must be a JSON object");
  FamilySpec spec;
  if (doc.contains("name")) spec.name = doc.at("name").get<std::string>();
  if (doc.contains("metrics")) spec.metric_names = doc.at("metrics").get<std::vector<std::string>>();
  if (doc.contains("sampling_interval")) spec.sampling_interval = doc.at("sampling_interval").get<double>();
  spec.alpha_targets = read_vector(doc, "alpha_targets");
  spec.amplitudes = read_vector(doc, "amplitudes");
  spec.offsets = read_vector(doc, "offsets");
  if (!doc.contains("correlation") || !doc.at("correlation").is_array()) {
    throw Error("family spec: missing field 'correlation'");
  }
  const auto& rows = doc.at("correlation");
  const auto n = static_cast<Eigen::Index>(rows.size());
  spec.correlation.resize(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& row = rows.at(static_cast<std::size_t>(i));
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != n) {
      throw Error("family spec: field 'correlation' must be an n x n matrix");
    }
    for (Eigen::Index j = 0; j < n; ++j) {
      const auto& cell = row.at(static_cast<std::size_t>(j));
      if (!cell.is_number()) throw Error("family spec: field 'correlation' must contain numbers");
      spec.correlation(i, j) = cell.get<double>();
    }
  }
  spec.validate();
  return spec;
}

std::string family_spec_to_json(const FamilySpec& spec) {
  nlohmann::json doc;
  doc["name"] = spec.name;
  if (!spec.metric_names.empty()) doc["metrics"] = spec.metric_names;
  doc["sampling_interval"] = spec.sampling_interval;
  doc["alpha_targets"] = spec.alpha_targets;
  doc["amplitudes"] = spec.amplitudes;
  doc["offsets"] = spec.offsets;
  auto rows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < spec.correlation.rows(); ++i) {
    auto row = nlohmann::json::array();
    for (Eigen::Index j = 0; j < spec.correlation.cols(); ++j) row.push_back(spec.correlation(i, j));
    rows.push_back(row);
  }
  doc["correlation"] = rows;
  return doc.dump(2) + "\n";
}

FamilySpec load_family_spec(const std::string& path) {
  try {
    return parse_family_spec(read_file(path));
  } catch (const Error& e) {
    throw Error(path + ": " + e.what());
  }
}

Eigen::MatrixXd correlation_factor(const Eigen::MatrixXd& correlation) {
  const Eigen::Index n = correlation.rows();
  if (n != correlation.cols()) throw Error("correlation template must be square");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(correlation);
  if (eig.info() != Eigen::Success) throw Error("correlation template eigendecomposition failed");
  Eigen::VectorXd values = eig.eigenvalues();
  bool any_clamped = false;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (values(i) < -1e-10) {
      throw Error("correlation template is not positive semidefinite (eigenvalue " + format_real(values(i)) + ")");
    }
    if (values(i) < 0.0) {
      values(i) = 0.0;
      any_clamped = true;
    }
  }
  const Eigen::MatrixXd clamped =
      any_clamped ? Eigen::MatrixXd(eig.eigenvectors() * values.asDiagonal() * eig.eigenvectors().transpose())
                  : correlation;

  // Cholesky–Banachiewicz, tolerating zero pivots of a singular template.
  Eigen::MatrixXd factor = Eigen::MatrixXd::Zero(n, n);
  const double pivot_floor = 1e-12;
  for (Eigen::Index j = 0; j < n; ++j) {
    double diag = clamped(j, j);
    for (Eigen::Index k = 0; k < j; ++k) diag -= factor(j, k) * factor(j, k);
    if (diag < -1e-8) throw Error("Cholesky factorisation of the correlation template failed");
    if (diag <= pivot_floor) continue;
    const double root = std::sqrt(diag);
    factor(j, j) = root;
    for (Eigen::Index i = j + 1; i < n; ++i) {
      double s = clamped(i, j);
      for (Eigen::Index k = 0; k < j; ++k) s -= factor(i, k) * factor(j, k);
      factor(i, j) = s / root;
    }
  }
  return factor;
}

std::vector<double> power_law_noise(double beta, std::size_t length, std::uint64_t seed) {
  if (!is_power_of_two(length) || length < 4) throw Error("power-law noise length must be a power of two");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const std::size_t half = length / 2;
  std::vector<std::complex<double>> spectrum(half + 1, {0.0, 0.0});
  for (std::size_t k = 1; k <= half; ++k) {
    const double scale = std::pow(static_cast<double>(k), -beta / 2.0);
    const double re = normal(rng);
    const double im = normal(rng);
    spectrum[k] = {re * scale, k == half ? 0.0 : im * scale};
  }
  std::vector<double> series = inverse_real_fft(std::move(spectrum), length);

  double mean = 0.0;
  for (double v : series) mean += v;
  mean /= static_cast<double>(length);
  double var = 0.0;
  for (double& v : series) {
    v -= mean;
    var += v * v;
  }
  const double sd = std::sqrt(var / static_cast<double>(length));
  for (double& v : series) v /= sd;
  return series;
}

Trace generate_synthetic_trace(const FamilySpec& spec, std::uint64_t seed, std::size_t length) {
  spec.validate();
  if (length < 256 || !is_power_of_two(length)) {
    throw Error("synthetic trace length must be a power of two >= 256, got " + std::to_string(length));
  }
  const std::size_t n = spec.num_metrics();
  const Eigen::MatrixXd factor = correlation_factor(spec.correlation);

  std::mt19937_64 seeder(seed);
  Eigen::MatrixXd base(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(length));
  for (std::size_t i = 0; i < n; ++i) {
    const auto noise = power_law_noise(2.0 * spec.alpha_targets[i] - 1.0, length, seeder());
    base.row(static_cast<Eigen::Index>(i)) = Eigen::Map<const Eigen::RowVectorXd>(noise.data(), static_cast<Eigen::Index>(length));
  }
  const Eigen::MatrixXd mixed = factor * base;

  std::vector<std::vector<double>> series(n, std::vector<double>(length));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t t = 0; t < length; ++t) {
      series[i][t] = spec.offsets[i] + spec.amplitudes[i] * mixed(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(t));
    }
  }
  return Trace(spec.schema(), std::move(series), spec.sampling_interval, spec.name + "_" + std::to_string(seed));
}

}  // namespace dfaprint
