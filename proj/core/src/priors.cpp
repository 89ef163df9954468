#include "lscp/priors.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace lscp {

namespace {
constexpr double kNegInf = -std::numeric_limits<double>::infinity();
}

RGSpec RGSpec::defaults(int K) {
  RGSpec s;
  s.alpha.assign(K, 1.2);
  s.eta.assign(K, 0.04);
  return s;
}

void RGSpec::validate() const {
  if (alpha.empty() || alpha.size() != eta.size()) {
    throw std::invalid_argument("RG prior needs matching, non-empty alpha and eta");
  }
  for (std::size_t k = 0; k < alpha.size(); ++k) {
    if (!(alpha[k] > 0.0) || !(eta[k] > 0.0)) throw std::invalid_argument("RG alpha and eta must be positive");
  }
  if (!(rho > 0.0) || !(nu > 0.0)) throw std::invalid_argument("RG rho and nu must be positive");
  if (upper_bound && !(*upper_bound > 0.0)) throw std::invalid_argument("RG truncation bound must be positive");
}

double repulsion_factor(double x, double rho, double nu) { return 1.0 - std::exp(-rho * std::pow(x, nu)); }

double rg_log_density_unnorm(std::span<const double> lambda, const RGSpec& spec) {
  if (static_cast<int>(lambda.size()) != spec.size()) {
    throw std::invalid_argument("rate vector length does not match the RG prior");
  }
  double lp = 0.0;
  double lmax = 0.0;
  for (std::size_t k = 0; k < lambda.size(); ++k) {
    if (!(lambda[k] > 0.0)) return kNegInf;
    lmax = std::max(lmax, lambda[k]);
    lp += (spec.alpha[k] - 1.0) * std::log(lambda[k]) - spec.eta[k] * lambda[k];
  }
  if (spec.upper_bound && lmax >= *spec.upper_bound) return kNegInf;
  for (std::size_t i = 0; i < lambda.size(); ++i) {
    for (std::size_t j = i + 1; j < lambda.size(); ++j) {
      const double x = std::abs(lambda[i] - lambda[j]) / std::sqrt(lambda[i] + lambda[j]);
      const double r = repulsion_factor(x, spec.rho, spec.nu);
      if (!(r > 0.0)) return kNegInf;
      lp += std::log(r);
    }
  }
  return lp;
}

void NGAR1Spec::validate() const {
  if (w.empty() || w.size() != a.size()) throw std::invalid_argument("NGAR1 needs matching w and a");
  for (std::size_t k = 0; k < w.size(); ++k) {
    if (!(w[k] > 0.0 && w[k] < 1.0)) throw std::invalid_argument("NGAR1 w must lie in (0, 1)");
    if (!(a[k] > 0.0)) throw std::invalid_argument("NGAR1 a must be positive");
  }
  initial.validate();
  if (initial.size() != size()) throw std::invalid_argument("NGAR1 initial prior has the wrong dimension");
}

double ngar1_log_density(std::span<const double> trajectory, double w, double a) {
  const double p = w * a, q = (1.0 - w) * a;
  const double log_beta_fn = std::lgamma(p) + std::lgamma(q) - std::lgamma(a);
  double lp = 0.0;
  for (std::size_t t = 1; t < trajectory.size(); ++t) {
    const double prev = trajectory[t - 1], cur = trajectory[t];
    if (!(prev > 0.0) || !(cur > 0.0)) return kNegInf;
    const double eps = w * cur / prev;
    if (!(eps > 0.0 && eps < 1.0)) return kNegInf;
    lp += (p - 1.0) * std::log(eps) + (q - 1.0) * std::log1p(-eps) - log_beta_fn + std::log(w / prev);
  }
  return lp;
}

double ngar1_joint_log_density(std::span<const double> rates, int times, const NGAR1Spec& spec) {
  const int K = spec.size();
  if (static_cast<int>(rates.size()) != times * K) throw std::invalid_argument("rate matrix has the wrong size");
  double lp = rg_log_density_unnorm(rates.subspan(0, K), spec.initial);
  if (lp == kNegInf) return lp;
  std::vector<double> traj(times);
  for (int k = 0; k < K; ++k) {
    for (int t = 0; t < times; ++t) traj[t] = rates[static_cast<std::size_t>(t) * K + k];
    const double part = ngar1_log_density(traj, spec.w[k], spec.a[k]);
    if (part == kNegInf) return kNegInf;
    lp += part;
  }
  return lp;
}

double beta_draw(double p, double q, Engine& eng) {
  const double x = std::gamma_distribution<double>(p, 1.0)(eng);
  const double y = std::gamma_distribution<double>(q, 1.0)(eng);
  return x / (x + y);
}

std::vector<double> ngar1_simulate(double initial, double w, double a, int T, Engine& eng) {
  if (T < 0) throw std::invalid_argument("T must be >= 0");
  if (!(initial > 0.0)) throw std::invalid_argument("initial rate must be positive");
  std::vector<double> traj(T + 1);
  traj[0] = initial;
  for (int t = 1; t <= T; ++t) {
    double eps = beta_draw(w * a, (1.0 - w) * a, eng);
    // guard against underflow to exactly zero for tiny shape parameters
    eps = std::max(eps, std::numeric_limits<double>::min());
    traj[t] = traj[t - 1] * eps / w;
  }
  return traj;
}

}  // namespace lscp
