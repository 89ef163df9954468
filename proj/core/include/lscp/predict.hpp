#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "lscp/dynamic_prior.hpp"
#include "lscp/geometry.hpp"
#include "lscp/mcmc.hpp"
#include "lscp/priors.hpp"

namespace lscp {

/// Piecewise intensity of one posterior draw at time t, with latent values
/// off the lattice unveiled from the static conditionals.
class DrawField {
 public:
  DrawField(const NngpPrior& prior, const PosteriorDraw& draw, int t = 0);

  int K() const { return static_cast<int>(c_.size()) + 1; }
  double rate(int k) const { return lambda_[k]; }
  int region_at(double beta) const;
  double beta_at(const Point& p, Engine& eng) const;
  FieldSampler sampler(Engine& eng) const;

 private:
  const NngpPrior& prior_;
  const Eigen::VectorXd& grid_;
  std::vector<double> lambda_;
  std::vector<double> c_;
};

/// Latent value at a location; may consume randomness.
using BetaAt = std::function<double(const Point&, Engine&)>;

/// mu(S0) * lambda(U) with U uniform on the region: unbiased for the
/// integrated intensity over the region.
double integrated_intensity_draw(const BetaAt& beta, const PartitionLevels& levels, std::span<const double> lambda,
                                 const Window& region, Engine& eng);
double integrated_intensity_draw(const NngpPrior& prior, const PosteriorDraw& draw, const Window& region,
                                 Engine& eng, int t = 0);

/// A pattern from the draw's intensity by thinning.
PointPattern replicate_pattern(const NngpPrior& prior, const PosteriorDraw& draw, const Window& window,
                               Engine& eng, int t = 0);

struct FutureDraw {
  std::vector<Eigen::VectorXd> grid;     // one per horizon
  std::vector<std::vector<double>> lambda;  // one rate vector per horizon
  std::vector<PointPattern> patterns;    // filled when requested
};

/// Propagates the last time of a draw d steps ahead: lattice through the
/// innovation walk, rates through NGAR1.
FutureDraw future_draw(const DynamicPrior& prior, const PosteriorDraw& draw, int d, std::span<const double> w,
                       std::span<const double> a, Engine& eng, bool with_patterns = false);

struct PredictiveSummary {
  double mean = 0.0;
  double sd = 0.0;
  double q025 = 0.0;
  double q975 = 0.0;
  /// Mean squared deviation from a reference value, when one was given.
  std::optional<double> quadratic_error;
};

PredictiveSummary summarize(std::span<const double> values, std::optional<double> reference = std::nullopt);

/// Integrated-intensity draws, one per posterior draw (index-keyed streams).
std::vector<double> integrated_intensity(const NngpPrior& prior, std::span<const PosteriorDraw> draws,
                                         const Window& region, std::uint64_t seed, int t = 0);

struct GridSummaryRow {
  double x = 0.0, y = 0.0;
  double mean_if = 0.0;
  int modal_region = 0;  // zero-based
  double modal_if = 0.0;
};

/// Pointwise posterior mean intensity, modal region and the posterior mean
/// rate of the modal region on an nx-by-ny lattice of cell centres.
std::vector<GridSummaryRow> grid_summary(const NngpPrior& prior, std::span<const PosteriorDraw> draws,
                                         const Window& window, int nx, int ny, std::uint64_t seed, int t = 0);

}  // namespace lscp
