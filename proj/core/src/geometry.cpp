#include "lscp/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace lscp {

Window::Window(double x_min, double x_max, double y_min, double y_max)
    : x_min_(x_min), x_max_(x_max), y_min_(y_min), y_max_(y_max) {
  if (!(std::isfinite(x_min) && std::isfinite(x_max) && std::isfinite(y_min) &&
        std::isfinite(y_max))) {
    throw std::invalid_argument("window bounds must be finite");
  }
  if (!(x_min < x_max) || !(y_min < y_max)) {
    throw std::invalid_argument("window requires x_min < x_max and y_min < y_max");
  }
}

Point Window::sample(Engine& eng) const {
  const double u = uniform01(eng);
  const double v = uniform01(eng);
  return {x_min_ + u * width(), y_min_ + v * height()};
}

Point Window::map_to(const Point& p, const Window& target) const {
  return {target.x_min() + (p.x - x_min_) / width() * target.width(),
          target.y_min() + (p.y - y_min_) / height() * target.height()};
}

bool operator==(const Window& a, const Window& b) {
  return a.x_min() == b.x_min() && a.x_max() == b.x_max() && a.y_min() == b.y_min() &&
         a.y_max() == b.y_max();
}

int PointPattern::num_times() const {
  if (times.empty()) return 1;
  return *std::max_element(times.begin(), times.end()) + 1;
}

std::vector<Point> PointPattern::at_time(int t) const {
  if (times.empty()) return points;
  std::vector<Point> out;
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (times[i] == t) out.push_back(points[i]);
  }
  return out;
}

void PointPattern::validate() const {
  if (!times.empty() && times.size() != points.size()) {
    throw std::invalid_argument("time index count does not match point count");
  }
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (!window.contains(points[i])) {
      throw std::invalid_argument("point " + std::to_string(i) + " lies outside the window");
    }
    if (!times.empty() && times[i] < 0) {
      throw std::invalid_argument("point " + std::to_string(i) + " has a negative time index");
    }
  }
}

PartitionLevels::PartitionLevels(std::vector<double> thresholds) : c_(std::move(thresholds)) {
  if (!is_valid(c_)) throw std::invalid_argument("partition levels must be finite and strictly increasing");
}

bool PartitionLevels::is_valid(std::span<const double> thresholds) {
  for (std::size_t i = 0; i < thresholds.size(); ++i) {
    if (!std::isfinite(thresholds[i])) return false;
    if (i > 0 && !(thresholds[i - 1] < thresholds[i])) return false;
  }
  return true;
}

int PartitionLevels::region_of(double beta) const {
  // number of thresholds strictly below beta
  return static_cast<int>(std::lower_bound(c_.begin(), c_.end(), beta) - c_.begin());
}

PartitionLevels PartitionLevels::initial(int K) {
  if (K < 1) throw std::invalid_argument("K must be at least 1");
  switch (K) {
    case 1: return PartitionLevels{};
    case 2: return PartitionLevels({0.0});
    case 3: return PartitionLevels({-0.5, 0.5});
    case 4: return PartitionLevels({-0.7, 0.0, 0.7});
    default: break;
  }
  std::vector<double> c(K - 1);
  for (int k = 0; k < K - 1; ++k) c[k] = -1.0 + 2.0 * (k + 1) / K;
  return PartitionLevels(std::move(c));
}

int region_of(double beta, const PartitionLevels& levels) { return levels.region_of(beta); }

std::vector<Point> uniform_points(const Window& window, std::size_t n, Engine& eng) {
  std::vector<Point> pts;
  pts.reserve(n);
  for (std::size_t i = 0; i < n; ++i) pts.push_back(window.sample(eng));
  return pts;
}

PointPattern simulate_lscp(const Window& window, const PartitionLevels& levels,
                           std::span<const double> lambda, const FieldSampler& field,
                           Engine& eng) {
  if (static_cast<int>(lambda.size()) != levels.regions()) {
    throw std::invalid_argument("rate vector length must equal the number of regions");
  }
  double lambda_max = 0.0;
  for (double l : lambda) {
    if (!(l > 0.0)) throw std::invalid_argument("rates must be positive");
    lambda_max = std::max(lambda_max, l);
  }
  const long n = poisson(eng, lambda_max * window.area());
  std::vector<Point> candidates = uniform_points(window, static_cast<std::size_t>(n), eng);
  PointPattern out{window, {}, {}};
  if (candidates.empty()) return out;
  const std::vector<double> beta = field(candidates);
  if (beta.size() != candidates.size()) {
    throw std::runtime_error("field sampler returned the wrong number of values");
  }
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const double keep = lambda[levels.region_of(beta[i])] / lambda_max;
    const double u = uniform01(eng);
    if (u < keep) out.points.push_back(candidates[i]);
  }
  return out;
}

}  // namespace lscp
