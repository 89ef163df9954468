#pragma once

#include <cmath>

#include "lscp/geometry.hpp"

namespace lscp {

/// Powered-exponential covariance sigma2 * exp(-|s - s'|^gamma / (2 tau2)).
struct CovarianceSpec {
  double sigma2 = 1.0;
  double tau2 = 1.0;
  double gamma = 1.95;

  /// Throws std::invalid_argument unless sigma2 >= 0, tau2 > 0, 0 < gamma <= 2.
  void validate() const;

  double at_distance(double d) const {
    if (d == 0.0) return sigma2;
    return sigma2 * std::exp(-std::pow(d, gamma) / (2.0 * tau2));
  }
};

double cov(const CovarianceSpec& spec, const Point& a, const Point& b);

}  // namespace lscp
