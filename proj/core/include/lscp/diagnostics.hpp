#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "lscp/geometry.hpp"
#include "lscp/mcmc.hpp"
#include "lscp/nngp.hpp"

namespace lscp {

/// Effective sample size by the initial monotone positive sequence
/// estimator. Capped at the trace length; a constant trace returns its
/// length. Throws std::invalid_argument for fewer than 10 values.
double ess(std::span<const double> trace);

/// Sample autocorrelation at lags 0..max_lag.
std::vector<double> autocorrelation(std::span<const double> trace, std::size_t max_lag);

struct DicResult {
  double dic = 0.0;
  double mean_deviance = 0.0;
  double plugin_deviance = 0.0;
  /// Effective number of parameters mean_deviance - plugin_deviance.
  double p_d = 0.0;
};

/// DIC with D = -2 log L, log L = sum_t sum_k (|Y_tk| log lambda_tk -
/// lambda_tk mu_tk). Region areas are estimated per draw from a fixed set of
/// uniform sites (common random numbers across draws). The plug-in uses
/// posterior mean rates and the pointwise modal partition.
/// Throws std::invalid_argument for mc_area_points < 1000 or no draws.
DicResult dic(std::span<const PosteriorDraw> draws, const NngpPrior& prior, std::size_t mc_area_points,
              std::uint64_t seed);

}  // namespace lscp
