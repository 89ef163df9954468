#pragma once

#include <optional>
#include <span>
#include <vector>

#include "lscp/random.hpp"

namespace lscp {

/// Repulsive gamma prior RG(alpha, eta, rho, nu): a product of Gamma(alpha_k,
/// eta_k) kernels times prod_{k1<k2} (1 - exp(-rho x^nu)) with
/// x = |l1 - l2| / sqrt(l1 + l2).
struct RGSpec {
  std::vector<double> alpha;
  std::vector<double> eta;
  double rho = 1.0;
  double nu = 3.0;
  /// Hard support bound on max_k lambda_k.
  std::optional<double> upper_bound;

  /// Defaults alpha_k = 1.2, eta_k = 0.04, rho = 1, nu = 3.
  static RGSpec defaults(int K);
  void validate() const;
  int size() const { return static_cast<int>(alpha.size()); }
};

/// Penalty factor r(x) = 1 - exp(-rho x^nu).
double repulsion_factor(double x, double rho, double nu);

/// Unnormalized log-density; -inf for ties, non-positive rates or a violated
/// truncation bound.
double rg_log_density_unnorm(std::span<const double> lambda, const RGSpec& spec);

/// Multiplicative Beta autoregression lambda_t = lambda_{t-1} eps_t / w,
/// eps_t ~ Beta(w a, (1 - w) a), one (w, a) pair per level.
struct NGAR1Spec {
  std::vector<double> w;
  std::vector<double> a;
  RGSpec initial;

  void validate() const;
  int size() const { return static_cast<int>(w.size()); }
};

/// Transition log-density of one level's trajectory (values at t = 0..T),
/// excluding the initial-time prior. -inf outside the Beta support.
double ngar1_log_density(std::span<const double> trajectory, double w, double a);

/// Joint log prior of a (T+1) x K rate matrix stored row-major by time:
/// RG at t = 0 plus the NGAR1 transitions of every level.
double ngar1_joint_log_density(std::span<const double> rates, int times, const NGAR1Spec& spec);

/// Forward simulation of one level from `initial` over T steps (T+1 values).
std::vector<double> ngar1_simulate(double initial, double w, double a, int T, Engine& eng);

/// Draws Beta(p, q) through two gamma variates.
double beta_draw(double p, double q, Engine& eng);

}  // namespace lscp
