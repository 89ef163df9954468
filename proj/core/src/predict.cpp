#include "lscp/predict.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "lscp/parallel.hpp"

namespace lscp {

namespace {

const Eigen::VectorXd& grid_of(const PosteriorDraw& draw, int t) {
  if (t < 0 || t >= static_cast<int>(draw.grid.size())) throw std::out_of_range("draw has no lattice at this time");
  return draw.grid[t];
}

std::vector<double> rates_of(const PosteriorDraw& draw, int t) {
  const std::size_t K = draw.c.size() + 1;
  if (draw.lambda.size() < (t + 1) * K) throw std::out_of_range("draw has no rates at this time");
  return {draw.lambda.begin() + t * K, draw.lambda.begin() + (t + 1) * K};
}

double quantile(std::vector<double> sorted, double p) {
  const double h = (static_cast<double>(sorted.size()) - 1.0) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

}  // namespace

DrawField::DrawField(const NngpPrior& prior, const PosteriorDraw& draw, int t)
    : prior_(prior), grid_(grid_of(draw, t)), lambda_(rates_of(draw, t)), c_(draw.c) {
  if (grid_.size() != prior.grid().size()) throw std::invalid_argument("draw lattice does not match the prior");
}

int DrawField::region_at(double beta) const {
  return static_cast<int>(std::lower_bound(c_.begin(), c_.end(), beta) - c_.begin());
}

double DrawField::beta_at(const Point& p, Engine& eng) const {
  return conditional_draw(prior_.conditional_at(p), grid_, std_normal(eng));
}

FieldSampler DrawField::sampler(Engine& eng) const {
  return [this, &eng](std::span<const Point> pts) {
    std::vector<double> out(pts.size());
    for (std::size_t i = 0; i < pts.size(); ++i) out[i] = beta_at(pts[i], eng);
    return out;
  };
}

double integrated_intensity_draw(const BetaAt& beta, const PartitionLevels& levels, std::span<const double> lambda,
                                 const Window& region, Engine& eng) {
  if (static_cast<int>(lambda.size()) != levels.regions()) throw std::invalid_argument("one rate per region needed");
  const Point u = region.sample(eng);
  return region.area() * lambda[levels.region_of(beta(u, eng))];
}

double integrated_intensity_draw(const NngpPrior& prior, const PosteriorDraw& draw, const Window& region,
                                 Engine& eng, int t) {
  if (!prior.grid().window().contains(region)) throw std::invalid_argument("region must lie inside the window");
  const DrawField f(prior, draw, t);
  const Point u = region.sample(eng);
  return region.area() * f.rate(f.region_at(f.beta_at(u, eng)));
}

PointPattern replicate_pattern(const NngpPrior& prior, const PosteriorDraw& draw, const Window& window,
                               Engine& eng, int t) {
  const DrawField f(prior, draw, t);
  const auto lambda = rates_of(draw, t);
  return simulate_lscp(window, PartitionLevels(draw.c), lambda, f.sampler(eng), eng);
}

FutureDraw future_draw(const DynamicPrior& prior, const PosteriorDraw& draw, int d, std::span<const double> w,
                       std::span<const double> a, Engine& eng, bool with_patterns) {
  if (d < 1) throw std::invalid_argument("forecast horizon must be >= 1");
  if (!prior.innovation()) throw std::invalid_argument("forecasting needs a temporal specification");
  const int T = static_cast<int>(draw.grid.size()) - 1;
  if (T < 0) throw std::invalid_argument("draw has no lattice");
  const std::size_t K = draw.c.size() + 1;
  if (w.size() != K || a.size() != K) throw std::invalid_argument("NGAR1 settings need one entry per level");
  FutureDraw out;
  Eigen::VectorXd grid = draw.grid[T];
  std::vector<double> rate = rates_of(draw, T);
  const PartitionLevels levels(draw.c);
  for (int h = 0; h < d; ++h) {
    grid = grid + prior.innovation()->sample_grid(eng);
    for (std::size_t k = 0; k < K; ++k) {
      const double eps = std::max(beta_draw(w[k] * a[k], (1.0 - w[k]) * a[k], eng), 1e-300);
      rate[k] = rate[k] * eps / w[k];
    }
    out.grid.push_back(grid);
    out.lambda.push_back(rate);
    if (with_patterns) {
      const NngpPrior& base = prior.base();
      const Eigen::VectorXd& g = out.grid.back();
      FieldSampler sampler = [&](std::span<const Point> pts) {
        std::vector<double> vals(pts.size());
        for (std::size_t i = 0; i < pts.size(); ++i) {
          vals[i] = conditional_draw(base.conditional_at(pts[i]), g, std_normal(eng));
        }
        return vals;
      };
      out.patterns.push_back(simulate_lscp(base.grid().window(), levels, rate, sampler, eng));
    }
  }
  return out;
}

PredictiveSummary summarize(std::span<const double> values, std::optional<double> reference) {
  if (values.empty()) throw std::invalid_argument("nothing to summarize");
  PredictiveSummary s;
  const double n = static_cast<double>(values.size());
  s.mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  double ss = 0.0;
  for (double v : values) ss += (v - s.mean) * (v - s.mean);
  s.sd = values.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  s.q025 = quantile(sorted, 0.025);
  s.q975 = quantile(sorted, 0.975);
  if (reference) {
    double q = 0.0;
    for (double v : values) q += (v - *reference) * (v - *reference);
    s.quadratic_error = q / n;
  }
  return s;
}

std::vector<double> integrated_intensity(const NngpPrior& prior, std::span<const PosteriorDraw> draws,
                                         const Window& region, std::uint64_t seed, int t) {
  std::vector<double> out(draws.size());
  parallel_chunks(draws.size(), 16, [&](std::size_t, std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) {
      Engine eng = substream(seed, StreamTag::kPredict, {2, i});
      out[i] = integrated_intensity_draw(prior, draws[i], region, eng, t);
    }
  });
  return out;
}

std::vector<GridSummaryRow> grid_summary(const NngpPrior& prior, std::span<const PosteriorDraw> draws,
                                         const Window& window, int nx, int ny, std::uint64_t seed, int t) {
  if (nx < 1 || ny < 1) throw std::invalid_argument("summary lattice needs at least one cell");
  if (draws.empty()) throw std::invalid_argument("grid summary needs at least one draw");
  const int K = static_cast<int>(draws[0].c.size()) + 1;
  const std::size_t n = static_cast<std::size_t>(nx) * ny;
  std::vector<GridSummaryRow> rows(n);
  std::vector<double> mean_rate(K, 0.0);
  for (const auto& d : draws) {
    const auto r = rates_of(d, t);
    for (int k = 0; k < K; ++k) mean_rate[k] += r[k] / static_cast<double>(draws.size());
  }
  parallel_chunks(n, 256, [&](std::size_t chunk, std::size_t b, std::size_t e) {
    std::vector<NeighborConditional> conds(e - b);
    for (std::size_t i = b; i < e; ++i) {
      const int ix = static_cast<int>(i % nx), iy = static_cast<int>(i / nx);
      rows[i].x = window.x_min() + (ix + 0.5) * window.width() / nx;
      rows[i].y = window.y_min() + (iy + 0.5) * window.height() / ny;
      conds[i - b] = prior.conditional_at({rows[i].x, rows[i].y});
    }
    std::vector<long> counts((e - b) * K, 0);
    std::vector<double> sums(e - b, 0.0);
    for (std::size_t d = 0; d < draws.size(); ++d) {
      const Eigen::VectorXd& g = grid_of(draws[d], t);
      const auto r = rates_of(draws[d], t);
      const PartitionLevels levels(draws[d].c);
      Engine eng = substream(seed, StreamTag::kPredict, {1, d, chunk});
      for (std::size_t i = b; i < e; ++i) {
        const int k = levels.region_of(conditional_draw(conds[i - b], g, std_normal(eng)));
        sums[i - b] += r[k];
        ++counts[(i - b) * K + k];
      }
    }
    for (std::size_t i = b; i < e; ++i) {
      rows[i].mean_if = sums[i - b] / static_cast<double>(draws.size());
      const auto first = counts.begin() + (i - b) * K;
      rows[i].modal_region = static_cast<int>(std::max_element(first, first + K) - first);
      rows[i].modal_if = mean_rate[rows[i].modal_region];
    }
  });
  return rows;
}

}  // namespace lscp
