#include "lscp/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numeric>
#include <stdexcept>

#include <unsupported/Eigen/FFT>

#include "lscp/parallel.hpp"

namespace lscp {

namespace {

// Autocovariances (divisor n) at all lags through a zero-padded FFT.
std::vector<double> autocovariance(std::span<const double> trace) {
  const std::size_t n = trace.size();
  const double mean = std::accumulate(trace.begin(), trace.end(), 0.0) / static_cast<double>(n);
  std::size_t len = 1;
  while (len < 2 * n) len <<= 1;
  std::vector<double> padded(len, 0.0);
  for (std::size_t i = 0; i < n; ++i) padded[i] = trace[i] - mean;
  Eigen::FFT<double> fft;
  std::vector<std::complex<double>> freq;
  fft.fwd(freq, padded);
  for (auto& f : freq) f = std::norm(f);
  std::vector<double> back;
  fft.inv(back, freq);
  back.resize(n);
  for (auto& v : back) v /= static_cast<double>(n);
  return back;
}

double deviance(std::span<const double> lambda, std::span<const double> mu, std::span<const long> y) {
  double log_lik = 0.0;
  for (std::size_t k = 0; k < lambda.size(); ++k) {
    log_lik -= lambda[k] * mu[k];
    if (y[k] > 0) log_lik += static_cast<double>(y[k]) * std::log(lambda[k]);
  }
  return -2.0 * log_lik;
}

}  // namespace

std::vector<double> autocorrelation(std::span<const double> trace, std::size_t max_lag) {
  if (trace.size() < 2) throw std::invalid_argument("autocorrelation needs at least two values");
  auto acov = autocovariance(trace);
  max_lag = std::min(max_lag, trace.size() - 1);
  std::vector<double> out(max_lag + 1, 0.0);
  if (!(acov[0] > 0.0)) {
    out[0] = 1.0;
    return out;
  }
  for (std::size_t k = 0; k <= max_lag; ++k) out[k] = acov[k] / acov[0];
  return out;
}

double ess(std::span<const double> trace) {
  const std::size_t n = trace.size();
  if (n < 10) throw std::invalid_argument("ESS needs at least 10 values");
  const auto acov = autocovariance(trace);
  const double g0 = acov[0];
  // relative threshold: rounding leaves tiny variance on constant traces
  const double scale = std::max(1.0, std::abs(trace[0]));
  if (!(g0 > 1e-24 * scale * scale)) return static_cast<double>(n);
  double sum = 0.0;
  double prev = std::numeric_limits<double>::infinity();
  for (std::size_t m = 0; 2 * m + 1 < n; ++m) {
    double pair = acov[2 * m] + acov[2 * m + 1];
    if (!(pair > 0.0)) break;
    pair = std::min(pair, prev);
    prev = pair;
    sum += pair;
  }
  const double tau = (-g0 + 2.0 * sum) / g0;
  if (!(tau > 0.0)) return static_cast<double>(n);
  return std::min(static_cast<double>(n), static_cast<double>(n) / tau);
}

DicResult dic(std::span<const PosteriorDraw> draws, const NngpPrior& prior, std::size_t mc_area_points,
              std::uint64_t seed) {
  if (mc_area_points < 1000) throw std::invalid_argument("mc_area_points must be >= 1000");
  if (draws.empty()) throw std::invalid_argument("DIC needs at least one draw");
  const int K = static_cast<int>(draws[0].c.size()) + 1;
  const int times = static_cast<int>(draws[0].grid.size());
  const Window& window = prior.grid().window();
  const double area = window.area();
  const std::size_t nd = draws.size();

  // fixed sites and standard normals shared by every draw
  std::vector<NeighborConditional> conds(mc_area_points);
  std::vector<double> z(mc_area_points * times);
  {
    Engine eng = substream(seed, StreamTag::kDiagnose, {0});
    std::vector<Point> sites(mc_area_points);
    for (auto& s : sites) s = window.sample(eng);
    for (auto& v : z) v = std_normal(eng);
    parallel_chunks(mc_area_points, 256, [&](std::size_t, std::size_t b, std::size_t e) {
      for (std::size_t i = b; i < e; ++i) conds[i] = prior.conditional_at(sites[i]);
    });
  }

  std::vector<double> dev(nd, 0.0);
  // site region tallies per time for the modal partition
  std::vector<std::vector<long>> site_votes(times, std::vector<long>(mc_area_points * K, 0));
  std::vector<std::vector<std::vector<long>>> data_votes(times);
  for (int t = 0; t < times; ++t) data_votes[t].assign(draws[0].y_regions[t].size(), std::vector<long>(K, 0));
  std::vector<double> mean_lambda(static_cast<std::size_t>(times) * K, 0.0);

  for (std::size_t d = 0; d < nd; ++d) {
    const PosteriorDraw& draw = draws[d];
    if (static_cast<int>(draw.grid.size()) != times || static_cast<int>(draw.c.size()) + 1 != K) {
      throw std::invalid_argument("draws disagree in shape");
    }
    const PartitionLevels levels(draw.c);
    for (int t = 0; t < times; ++t) {
      std::vector<long> hits(K, 0), y(K, 0);
      for (std::size_t i = 0; i < mc_area_points; ++i) {
        const double b = conditional_draw(conds[i], draw.grid[t], z[t * mc_area_points + i]);
        const int k = levels.region_of(b);
        ++hits[k];
        ++site_votes[t][i * K + k];
      }
      if (draw.y_regions[t].size() != data_votes[t].size()) throw std::invalid_argument("draws disagree in data size");
      for (std::size_t j = 0; j < draw.y_regions[t].size(); ++j) {
        const int k = draw.y_regions[t][j];
        ++y[k];
        ++data_votes[t][j][k];
      }
      std::vector<double> mu(K);
      for (int k = 0; k < K; ++k) mu[k] = area * static_cast<double>(hits[k]) / static_cast<double>(mc_area_points);
      std::span<const double> lam(draw.lambda.data() + static_cast<std::size_t>(t) * K, K);
      dev[d] += deviance(lam, mu, y);
      for (int k = 0; k < K; ++k) mean_lambda[t * K + k] += lam[k] / static_cast<double>(nd);
    }
  }

  DicResult out;
  out.mean_deviance = std::accumulate(dev.begin(), dev.end(), 0.0) / static_cast<double>(nd);
  for (int t = 0; t < times; ++t) {
    std::vector<long> hits(K, 0), y(K, 0);
    for (std::size_t i = 0; i < mc_area_points; ++i) {
      const auto first = site_votes[t].begin() + i * K;
      ++hits[std::max_element(first, first + K) - first];
    }
    for (const auto& votes : data_votes[t]) ++y[std::max_element(votes.begin(), votes.end()) - votes.begin()];
    std::vector<double> mu(K);
    for (int k = 0; k < K; ++k) mu[k] = area * static_cast<double>(hits[k]) / static_cast<double>(mc_area_points);
    out.plugin_deviance += deviance(std::span<const double>(mean_lambda.data() + t * K, K), mu, y);
  }
  out.p_d = out.mean_deviance - out.plugin_deviance;
  out.dic = out.mean_deviance + out.p_d;
  return out;
}

}  // namespace lscp
