#pragma once

// Independent reference implementations used to check the library. None of
// them shares code with src/.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <random>
#include <utility>
#include <vector>

namespace oracle {

using Matrix = std::vector<std::vector<double>>;

inline double pearson(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  long double sx = 0, sy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
  }
  const long double mx = sx / n, my = sy / n;
  long double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0 || syy == 0) return 0.0;
  return static_cast<double>(sxy / std::sqrt(sxx * syy));
}

// Eigen-decomposition of a symmetric matrix by cyclic Jacobi rotations.
// Returns eigenvalues descending and eigenvectors as columns of `vectors`.
struct EigenPairs {
  std::vector<double> values;
  Matrix vectors;  // vectors[row][k] is entry `row` of eigenvector k
};

inline EigenPairs jacobi_eigen(Matrix a) {
  const std::size_t n = a.size();
  Matrix v(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i) v[i][i] = 1.0;
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) off += a[p][q] * a[p][q];
    if (off < 1e-30) break;
    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        if (std::abs(a[p][q]) < 1e-300) continue;
        const double theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
        const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0), s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a[k][p], akq = a[k][q];
          a[k][p] = c * akp - s * akq;
          a[k][q] = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a[p][k], aqk = a[q][k];
          a[p][k] = c * apk - s * aqk;
          a[q][k] = s * apk + c * aqk;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double vkp = v[k][p], vkq = v[k][q];
          v[k][p] = c * vkp - s * vkq;
          v[k][q] = s * vkp + c * vkq;
        }
      }
    }
  }
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return a[x][x] > a[y][y]; });
  EigenPairs out;
  out.vectors.assign(n, std::vector<double>(n));
  for (std::size_t k = 0; k < n; ++k) {
    out.values.push_back(a[order[k]][order[k]]);
    for (std::size_t r = 0; r < n; ++r) out.vectors[r][k] = v[r][order[k]];
  }
  return out;
}

// Sample covariance (N - 1) of the columns of `rows`.
inline Matrix covariance(const Matrix& rows) {
  const std::size_t n = rows.size(), p = rows.front().size();
  std::vector<double> mean(p, 0.0);
  for (const auto& r : rows)
    for (std::size_t j = 0; j < p; ++j) mean[j] += r[j] / static_cast<double>(n);
  Matrix c(p, std::vector<double>(p, 0.0));
  for (const auto& r : rows)
    for (std::size_t i = 0; i < p; ++i)
      for (std::size_t j = 0; j < p; ++j) c[i][j] += (r[i] - mean[i]) * (r[j] - mean[j]);
  for (auto& row : c)
    for (double& x : row) x /= static_cast<double>(n - 1);
  return c;
}

// Dual C-SVM objective Σα − ½ Σ α_i α_j y_i y_j K_ij.
inline double dual_objective(const Matrix& k, const std::vector<int>& y, const std::vector<double>& alpha) {
  double lin = 0.0, quad = 0.0;
  for (std::size_t i = 0; i < alpha.size(); ++i) {
    lin += alpha[i];
    for (std::size_t j = 0; j < alpha.size(); ++j) quad += alpha[i] * alpha[j] * y[i] * y[j] * k[i][j];
  }
  return lin - 0.5 * quad;
}

// Euclidean projection onto {0 ≤ α ≤ C, yᵀα = 0} by bisection on the
// multiplier of the equality constraint.
inline std::vector<double> project(const std::vector<double>& v, const std::vector<int>& y, double c) {
  auto at = [&](double mu) {
    std::vector<double> a(v.size());
    double s = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
      a[i] = std::clamp(v[i] - mu * y[i], 0.0, c);
      s += a[i] * y[i];
    }
    return std::make_pair(a, s);
  };
  double lo = -1e6, hi = 1e6;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (at(mid).second > 0) lo = mid;
    else hi = mid;
  }
  return at(0.5 * (lo + hi)).first;
}

// Accelerated projected gradient (FISTA) on the dual; returns the best
// objective found.
inline double solve_dual_qp(const Matrix& k, const std::vector<int>& y, double c, int iterations = 20000) {
  const std::size_t n = y.size();
  double lipschitz = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double row = 0.0;
    for (std::size_t j = 0; j < n; ++j) row += std::abs(k[i][j]);
    lipschitz = std::max(lipschitz, row);
  }
  const double step = 1.0 / lipschitz;
  std::vector<double> x(n, 0.0), z = x;
  double t = 1.0, best = 0.0;
  for (int it = 0; it < iterations; ++it) {
    std::vector<double> g(n);
    for (std::size_t i = 0; i < n; ++i) {
      double q = 0.0;
      for (std::size_t j = 0; j < n; ++j) q += y[i] * y[j] * k[i][j] * z[j];
      g[i] = 1.0 - q;  // gradient of the maximised objective
    }
    std::vector<double> moved(n);
    for (std::size_t i = 0; i < n; ++i) moved[i] = z[i] + step * g[i];
    const std::vector<double> next = project(moved, y, c);
    const double tn = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    for (std::size_t i = 0; i < n; ++i) z[i] = next[i] + ((t - 1.0) / tn) * (next[i] - x[i]);
    x = next;
    t = tn;
    best = std::max(best, dual_objective(k, y, x));
  }
  return best;
}

// Quartiles as medians of the sorted lower/upper halves, each half taking
// the median when the count is odd.
struct Quartiles {
  double q1, median, q3;
};

inline double median_of(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

inline Quartiles quartiles(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  const std::size_t half = (n + 1) / 2;
  std::vector<double> lower(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(half));
  std::vector<double> upper(v.end() - static_cast<std::ptrdiff_t>(half), v.end());
  return {median_of(lower), median_of(v), median_of(upper)};
}

inline double naive_accuracy(const std::vector<std::vector<std::size_t>>& m) {
  double diag = 0.0, total = 0.0;
  for (std::size_t i = 0; i < m.size(); ++i)
    for (std::size_t j = 0; j < m[i].size(); ++j) {
      total += static_cast<double>(m[i][j]);
      if (i == j) diag += static_cast<double>(m[i][j]);
    }
  return diag / total;
}

// DFA-1 written out directly: closed-form line fit in every box, boxes
// from both ends, OLS slope of ln F against ln s.
inline double dfa1(const std::vector<double>& x, const std::vector<std::size_t>& sizes) {
  const std::size_t n = x.size();
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= static_cast<double>(n);
  std::vector<double> y(n);
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) y[i] = acc += x[i] - mean;
  std::vector<double> ls, lf;
  for (std::size_t s : sizes) {
    const std::size_t boxes = n / s;
    double rss = 0.0;
    for (int end = 0; end < 2; ++end) {
      for (std::size_t b = 0; b < boxes; ++b) {
        const std::size_t start = end == 0 ? b * s : n - (b + 1) * s;
        double st = 0, sy = 0, stt = 0, sty = 0;
        for (std::size_t i = 0; i < s; ++i) {
          const double t = static_cast<double>(i);
          st += t;
          sy += y[start + i];
          stt += t * t;
          sty += t * y[start + i];
        }
        const double m = static_cast<double>(s);
        const double slope = (m * sty - st * sy) / (m * stt - st * st);
        const double icpt = (sy - slope * st) / m;
        for (std::size_t i = 0; i < s; ++i) {
          const double r = y[start + i] - (icpt + slope * static_cast<double>(i));
          rss += r * r;
        }
      }
    }
    ls.push_back(std::log(static_cast<double>(s)));
    lf.push_back(0.5 * std::log(rss / (2.0 * static_cast<double>(boxes) * static_cast<double>(s))));
  }
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < ls.size(); ++i) {
    mx += ls[i];
    my += lf[i];
  }
  mx /= static_cast<double>(ls.size());
  my /= static_cast<double>(ls.size());
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < ls.size(); ++i) {
    sxy += (ls[i] - mx) * (lf[i] - my);
    sxx += (ls[i] - mx) * (ls[i] - mx);
  }
  return sxy / sxx;
}

inline std::vector<double> white_noise(std::size_t n, unsigned long long seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> dist(0.0, 1.0);
  std::vector<double> out(n);
  for (double& x : out) x = dist(rng);
  return out;
}

}  // namespace oracle
