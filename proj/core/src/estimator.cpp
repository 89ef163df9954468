#include "lscp/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace lscp {

RateVector::RateVector(std::vector<double> lambda) : lambda_(std::move(lambda)) {
  if (lambda_.empty()) throw std::invalid_argument("rate vector must not be empty");
  for (double l : lambda_) {
    if (!(l > 0.0) || !std::isfinite(l)) throw std::invalid_argument("rates must be positive and finite");
  }
}

double RateVector::max() const { return *std::max_element(lambda_.begin(), lambda_.end()); }
double RateVector::min() const { return *std::min_element(lambda_.begin(), lambda_.end()); }

std::vector<double> log_ratios(const RateVector& rate, double delta) {
  if (!(delta > 1.0)) throw std::invalid_argument("delta must be > 1");
  const double top = delta * rate.max();
  const double denom = std::log(top - rate.min());
  std::vector<double> out(rate.size());
  for (int k = 0; k < rate.size(); ++k) out[k] = std::log(top - rate[k]) - denom;
  return out;
}

SquareLayout::SquareLayout(const Window& window, int nx, int ny) : window_(window), nx_(nx), ny_(ny) {
  if (nx < 1 || ny < 1) throw std::invalid_argument("square layout needs at least one square");
}

SquareLayout SquareLayout::with_count(const Window& window, int L) {
  if (L < 1) throw std::invalid_argument("L must be >= 1");
  const int nx = std::max(1, static_cast<int>(std::lround(std::sqrt(static_cast<double>(L)))));
  const int ny = std::max(1, static_cast<int>(std::lround(static_cast<double>(L) / nx)));
  return SquareLayout(window, nx, ny);
}

int SquareLayout::square_of(const Point& p) const {
  int ix = static_cast<int>((p.x - window_.x_min()) / window_.width() * nx_);
  int iy = static_cast<int>((p.y - window_.y_min()) / window_.height() * ny_);
  ix = std::clamp(ix, 0, nx_ - 1);
  iy = std::clamp(iy, 0, ny_ - 1);
  return iy * nx_ + ix;
}

Window SquareLayout::square(int l) const {
  const int ix = l % nx_, iy = l / nx_;
  const double w = window_.width() / nx_, h = window_.height() / ny_;
  const double x0 = window_.x_min() + ix * w, y0 = window_.y_min() + iy * h;
  const double x1 = ix == nx_ - 1 ? window_.x_max() : x0 + w;
  const double y1 = iy == ny_ - 1 ? window_.y_max() : y0 + h;
  return Window(x0, x1, y0, y1);
}

std::size_t AuxiliaryProcess::size() const {
  std::size_t n = 0;
  for (const auto& c : cells) n += c.size();
  return n;
}

std::vector<AuxPoint> AuxiliaryProcess::flatten() const {
  std::vector<AuxPoint> out;
  out.reserve(size());
  for (const auto& c : cells) out.insert(out.end(), c.begin(), c.end());
  return out;
}

void AuxiliaryProcess::relayout(const SquareLayout& layout) {
  std::vector<std::vector<AuxPoint>> fresh(layout.count());
  for (const auto& c : cells)
    for (const auto& p : c) fresh[layout.square_of(p.loc)].push_back(p);
  squares = layout;
  cells = std::move(fresh);
}

std::vector<AuxPoint> sample_square(const Window& square, double lambda_star, Engine& eng) {
  const long n = poisson(eng, lambda_star * square.area());
  std::vector<AuxPoint> pts(static_cast<std::size_t>(n));
  for (auto& p : pts) {
    p.loc = square.sample(eng);
    p.height = lambda_star * uniform01(eng);
  }
  return pts;
}

std::vector<AuxPoint> sample_slab(const Window& window, double lo, double hi, Engine& eng) {
  if (!(hi > lo)) return {};
  const long n = poisson(eng, (hi - lo) * window.area());
  std::vector<AuxPoint> pts(static_cast<std::size_t>(n));
  for (auto& p : pts) {
    p.loc = window.sample(eng);
    p.height = lo + (hi - lo) * uniform01(eng);
  }
  return pts;
}

AuxiliaryProcess sample_aux(const SquareLayout& layout, double lambda_star, const StreamKey& key) {
  if (!(lambda_star >= 0.0)) throw std::invalid_argument("lambda_star must be non-negative");
  AuxiliaryProcess aux;
  aux.squares = layout;
  aux.lambda_star = lambda_star;
  aux.cells.resize(layout.count());
  for (int l = 0; l < layout.count(); ++l) {
    Engine eng = key.at(static_cast<std::uint64_t>(l));
    aux.cells[l] = sample_square(layout.square(l), lambda_star, eng);
  }
  return aux;
}

AuxiliaryProcess sample_aux(const Window& window, double lambda_star, int L, const StreamKey& key) {
  return sample_aux(SquareLayout::with_count(window, L), lambda_star, key);
}

std::vector<AuxPoint> extend_aux_heights(AuxiliaryProcess& aux, double new_lambda_star, Engine& eng) {
  if (!(new_lambda_star > aux.lambda_star)) return {};
  std::vector<AuxPoint> added = sample_slab(aux.squares.window(), aux.lambda_star, new_lambda_star, eng);
  if (aux.cells.size() != static_cast<std::size_t>(aux.squares.count())) aux.cells.resize(aux.squares.count());
  for (const auto& p : added) aux.cells[aux.squares.square_of(p.loc)].push_back(p);
  aux.lambda_star = new_lambda_star;
  return added;
}

double log_m_hat(const RateVector& rate, double delta, std::span<const long> region_counts, double area) {
  if (static_cast<int>(region_counts.size()) != rate.size()) {
    throw std::invalid_argument("region count vector length must equal K");
  }
  const std::vector<double> lr = log_ratios(rate, delta);
  double out = -area * rate.min();
  for (int k = 0; k < rate.size(); ++k) {
    if (region_counts[k] < 0) throw std::invalid_argument("region counts must be non-negative");
    if (region_counts[k] > 0) out += static_cast<double>(region_counts[k]) * lr[k];
  }
  return out;
}

double m_hat(const RateVector& rate, double delta, std::span<const long> region_counts, double area) {
  return std::exp(log_m_hat(rate, delta, region_counts, area));
}

double m_hat_variance(const RateVector& rate, double delta, std::span<const double> areas, double area) {
  if (!(delta > 1.0)) throw std::invalid_argument("delta must be > 1");
  if (static_cast<int>(areas.size()) != rate.size()) throw std::invalid_argument("area vector length must equal K");
  const double top = delta * rate.max();
  const double lm = rate.min();
  double second = 0.0, first = 0.0;
  for (int k = 0; k < rate.size(); ++k) {
    const double ratio = (top - rate[k]) / (top - lm);
    second += areas[k] * (top - lm) * (1.0 - ratio * ratio);
    first += areas[k] * (rate[k] - lm);
  }
  return std::exp(-2.0 * area * lm) * (std::exp(-second) - std::exp(-2.0 * first));
}

std::vector<long> count_regions(std::span<const double> beta_values, const PartitionLevels& levels) {
  std::vector<long> counts(levels.regions(), 0);
  for (double b : beta_values) ++counts[levels.region_of(b)];
  return counts;
}

double auto_delta(const RateVector& initial, double area, double target_aux) {
  if (!(area > 0.0) || !(target_aux > 0.0)) throw std::invalid_argument("area and target must be positive");
  const double delta = (target_aux / area + initial.min()) / initial.max();
  return std::max(delta, 1.05);
}

}  // namespace lscp
