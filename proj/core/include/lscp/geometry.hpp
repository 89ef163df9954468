#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "lscp/random.hpp"

namespace lscp {

struct Point {
  double x = 0.0;
  double y = 0.0;
};

inline bool operator==(const Point& a, const Point& b) { return a.x == b.x && a.y == b.y; }

/// Axis-aligned rectangular observation window.
class Window {
 public:
  Window() : Window(0.0, 1.0, 0.0, 1.0) {}
  /// Throws std::invalid_argument unless x_min < x_max and y_min < y_max.
  Window(double x_min, double x_max, double y_min, double y_max);

  double x_min() const { return x_min_; }
  double x_max() const { return x_max_; }
  double y_min() const { return y_min_; }
  double y_max() const { return y_max_; }
  double width() const { return x_max_ - x_min_; }
  double height() const { return y_max_ - y_min_; }
  double area() const { return width() * height(); }

  /// Closed-rectangle containment.
  bool contains(const Point& p) const {
    return p.x >= x_min_ && p.x <= x_max_ && p.y >= y_min_ && p.y <= y_max_;
  }
  bool contains(const Window& other) const {
    return other.x_min_ >= x_min_ && other.x_max_ <= x_max_ && other.y_min_ >= y_min_ &&
           other.y_max_ <= y_max_;
  }

  Point sample(Engine& eng) const;

  /// Affine map taking this window onto `target`.
  Point map_to(const Point& p, const Window& target) const;

 private:
  double x_min_, x_max_, y_min_, y_max_;
};

bool operator==(const Window& a, const Window& b);

/// Observed events in a window, optionally time-stamped with integer indices.
struct PointPattern {
  Window window;
  std::vector<Point> points;
  /// Empty for purely spatial patterns, otherwise one entry per point.
  std::vector<int> times;

  std::size_t size() const { return points.size(); }
  bool has_times() const { return !times.empty(); }
  /// Number of time slices (max index + 1), 1 for spatial patterns.
  int num_times() const;
  /// Points with time index t (all points when the pattern has no times).
  std::vector<Point> at_time(int t) const;
  /// Throws std::invalid_argument when a point is outside the window or
  /// times are malformed.
  void validate() const;
};

/// Strictly increasing thresholds c_1 < ... < c_{K-1} with implicit
/// c_0 = -inf and c_K = +inf.
class PartitionLevels {
 public:
  PartitionLevels() = default;
  /// Throws std::invalid_argument unless strictly increasing and finite.
  explicit PartitionLevels(std::vector<double> thresholds);

  /// Number of regions K.
  int regions() const { return static_cast<int>(c_.size()) + 1; }
  const std::vector<double>& thresholds() const { return c_; }

  static bool is_valid(std::span<const double> thresholds);

  /// Zero-based region k with c_{k-1} < beta <= c_k (right-closed, total).
  int region_of(double beta) const;

  /// Default initial thresholds: 0 for K=2, (-0.5, 0.5) for K=3,
  /// (-0.7, 0, 0.7) for K=4, evenly spaced on [-1, 1] otherwise.
  static PartitionLevels initial(int K);

 private:
  std::vector<double> c_;
};

int region_of(double beta, const PartitionLevels& levels);

std::vector<Point> uniform_points(const Window& window, std::size_t n, Engine& eng);

/// Returns beta at each requested location; repeated or later requests must
/// be consistent with earlier ones (retrospective sampling contract).
using FieldSampler = std::function<std::vector<double>(std::span<const Point>)>;

/// Simulates a level-set Cox process realization by thinning a homogeneous
/// process at rate max(lambda): a candidate s is kept with probability
/// lambda[region_of(beta(s))] / max(lambda).
PointPattern simulate_lscp(const Window& window, const PartitionLevels& levels,
                           std::span<const double> lambda, const FieldSampler& field,
                           Engine& eng);

}  // namespace lscp
