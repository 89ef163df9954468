#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "lscp/geometry.hpp"
#include "lscp/random.hpp"

namespace lscp {

/// Positive intensity levels lambda_1..lambda_K.
class RateVector {
 public:
  RateVector() = default;
  /// Throws std::invalid_argument if empty or any entry is not > 0.
  explicit RateVector(std::vector<double> lambda);

  int size() const { return static_cast<int>(lambda_.size()); }
  double operator[](int k) const { return lambda_[k]; }
  const std::vector<double>& values() const { return lambda_; }
  double max() const;
  double min() const;
  /// delta * max - min; positive whenever delta > 1.
  double lambda_star(double delta) const { return delta * max() - min(); }

 private:
  std::vector<double> lambda_;
};

/// log((delta lambda_M - lambda_k) / (delta lambda_M - lambda_m)) for each k.
/// Throws std::invalid_argument for delta <= 1.
std::vector<double> log_ratios(const RateVector& rate, double delta);

/// Regular split of the window into nx * ny sub-rectangles used for the
/// per-square auxiliary updates.
class SquareLayout {
 public:
  SquareLayout() = default;
  SquareLayout(const Window& window, int nx, int ny);
  /// Layout with close to L squares, nx = round(sqrt(L)).
  static SquareLayout with_count(const Window& window, int L);

  int count() const { return nx_ * ny_; }
  int nx() const { return nx_; }
  int ny() const { return ny_; }
  const Window& window() const { return window_; }
  int square_of(const Point& p) const;
  Window square(int l) const;

 private:
  Window window_;
  int nx_ = 1;
  int ny_ = 1;
};

struct AuxPoint {
  Point loc;
  double height = 0.0;
};

/// Unveiled part of the unit-rate process on the cylinder over the window:
/// every point with height below lambda_star, bucketed by square.
struct AuxiliaryProcess {
  SquareLayout squares;
  double lambda_star = 0.0;
  std::vector<std::vector<AuxPoint>> cells;

  std::size_t size() const;
  std::vector<AuxPoint> flatten() const;
  /// Moves points into the buckets of a new layout (order: old bucket order).
  void relayout(const SquareLayout& layout);
};

/// Draws PP(lambda_star) independently on each square with stream key.at(l).
AuxiliaryProcess sample_aux(const Window& window, double lambda_star, int L, const StreamKey& key);
AuxiliaryProcess sample_aux(const SquareLayout& layout, double lambda_star, const StreamKey& key);

/// Points of the square's cylinder slab [0, lambda_star).
std::vector<AuxPoint> sample_square(const Window& square, double lambda_star, Engine& eng);

/// Fresh points of the slab [lo, hi) over the whole window.
std::vector<AuxPoint> sample_slab(const Window& window, double lo, double hi, Engine& eng);

/// Raises lambda_star to `new_lambda_star` by sampling only the new slab.
/// No-op when new_lambda_star <= aux.lambda_star. Returns the added points.
std::vector<AuxPoint> extend_aux_heights(AuxiliaryProcess& aux, double new_lambda_star, Engine& eng);

/// Poisson estimator of exp(-sum_k lambda_k mu_k) from region counts of the
/// auxiliary process. Throws std::invalid_argument for delta <= 1.
double m_hat(const RateVector& rate, double delta, std::span<const long> region_counts, double area);
double log_m_hat(const RateVector& rate, double delta, std::span<const long> region_counts, double area);

/// Closed-form variance of the estimator given exact region areas.
double m_hat_variance(const RateVector& rate, double delta, std::span<const double> areas, double area);

/// Counts of latent values per region.
std::vector<long> count_regions(std::span<const double> beta_values, const PartitionLevels& levels);

/// delta with (delta lambda_M - lambda_m) * area = target, clamped to >= 1.05.
double auto_delta(const RateVector& initial, double area, double target_aux);

}  // namespace lscp
