#pragma once

// Independent reference computations shared by the unit and acceptance
// tests. Nothing here calls into lscp_core.

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <vector>

#include <Eigen/Dense>

namespace lscp::testing {

/// Asymptotic Kolmogorov tail P(K > x) = 2 sum (-1)^{k-1} exp(-2 k^2 x^2).
inline double kolmogorov_q(double x) {
  if (x < 1e-3) return 1.0;
  double s = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * x * x);
    s += (k % 2 == 1 ? term : -term);
    if (term < 1e-16) break;
  }
  return std::clamp(2.0 * s, 0.0, 1.0);
}

struct KsResult {
  double d = 0.0;
  double p = 0.0;
};

/// One-sample KS test with Stephens' small-sample correction.
inline KsResult ks_test(std::vector<double> xs, const std::function<double(double)>& cdf) {
  std::sort(xs.begin(), xs.end());
  const double n = static_cast<double>(xs.size());
  double d = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double f = cdf(xs[i]);
    d = std::max({d, (i + 1) / n - f, f - i / n});
  }
  const double sn = std::sqrt(n);
  return {d, kolmogorov_q((sn + 0.12 + 0.11 / sn) * d)};
}

inline double mean(const std::vector<double>& v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

inline double variance(const std::vector<double>& v) {
  const double mu = mean(v);
  double s = 0.0;
  for (double x : v) s += (x - mu) * (x - mu);
  return s / static_cast<double>(v.size() - 1);
}

/// Standard error of the sample variance from the fourth central moment.
inline double variance_se(const std::vector<double>& v) {
  const double mu = mean(v);
  const double n = static_cast<double>(v.size());
  double m2 = 0.0, m4 = 0.0;
  for (double x : v) {
    const double d2 = (x - mu) * (x - mu);
    m2 += d2;
    m4 += d2 * d2;
  }
  m2 /= n;
  m4 /= n;
  return std::sqrt(std::max(m4 - m2 * m2, 0.0) / n);
}

/// Standard error of a mean from non-overlapping batch means.
inline double batch_se(const std::vector<double>& v, std::size_t batches = 50) {
  const std::size_t b = v.size() / batches;
  std::vector<double> means;
  for (std::size_t i = 0; i < batches; ++i) {
    double s = 0.0;
    for (std::size_t j = i * b; j < (i + 1) * b; ++j) s += v[j];
    means.push_back(s / static_cast<double>(b));
  }
  return std::sqrt(variance(means) / static_cast<double>(batches));
}

/// Dense zero-mean Gaussian log-density through a Cholesky factor.
inline double dense_gaussian_log_density(const Eigen::MatrixXd& cov, const Eigen::VectorXd& x) {
  Eigen::LLT<Eigen::MatrixXd> llt(cov);
  const Eigen::VectorXd z = llt.matrixL().solve(x);
  const double logdet = 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
  return -0.5 * (x.size() * std::log(2.0 * M_PI) + logdet + z.squaredNorm());
}

/// Type-7 empirical quantile.
inline double quantile(std::vector<double> v, double q) {
  std::sort(v.begin(), v.end());
  const double h = (v.size() - 1) * q;
  const std::size_t lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (h - lo) * (v[hi] - v[lo]);
}

}  // namespace lscp::testing
