#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "lscp/dynamic_prior.hpp"
#include "lscp/estimator.hpp"
#include "lscp/geometry.hpp"
#include "lscp/nngp.hpp"
#include "lscp/priors.hpp"

namespace lscp {

struct SamplerConfig {
  long iterations = 10000;
  long burn_in = 2000;
  int thin = 1;
  /// Number of auxiliary squares (approximate when not a product nx * ny).
  int L = 16;
  /// Double/halve L in pilot batches during the first half of adaptation.
  bool tune_L = true;
  /// Fixed delta; when unset it is solved per time from the initial rates so
  /// that lambda* times the window area equals target_aux, then held fixed.
  std::optional<double> delta;
  double target_aux = 6000.0;
  double varsigma = 0.1;
  /// pCN updates of the latent field per sweep.
  int beta_steps = 1;
  /// Initial standard deviation of the rate random walk per coordinate.
  double lambda_scale = 0.1;
  /// Rate random walk on log(lambda) (with Jacobian) instead of lambda.
  bool log_scale_walk = true;
  /// Initial half-width of the threshold random walk.
  double level_width = 0.1;
  /// Last adapted iteration; defaults to burn_in.
  std::optional<long> adapt_horizon;
  /// Enforce lambda_1 < ... < lambda_K; defaults to K >= 3.
  std::optional<bool> fixed_ordering;
  std::uint64_t seed = 1;
  /// Keep a lattice snapshot every k-th retained draw (0 disables).
  int snapshot_every = 10;
  /// Recompute counts and the log pseudo-marginal after every block.
  bool audit = false;

  void validate() const;
  long horizon() const { return adapt_horizon.value_or(burn_in); }
};

/// Static model description shared by the spatial and spatiotemporal fits.
struct ModelSpec {
  Window window;
  int K = 3;
  /// Static covariance; sigma2 is fixed at 1 by the model.
  CovarianceSpec covariance{1.0, 1.0, 1.95};
  int r = 2500;
  int m = 16;
  RGSpec rate_prior = RGSpec::defaults(3);
  std::optional<PartitionLevels> initial_levels;

  void validate() const;
};

/// One time slice of the chain.
struct Layer {
  std::vector<Point> data;
  LatentField field;
  AuxiliaryProcess aux;
  RateVector lambda;
  double delta = 2.0;
  std::vector<long> y_counts;
  std::vector<long> n_counts;
};

/// Robbins-Monro scale plus Haario running covariance for a Gaussian walk.
struct WalkAdapter {
  int dim = 0;
  double log_scale = 0.0;
  double initial_sd = 0.1;
  double target = 0.234;
  long observed = 0;
  Eigen::VectorXd mean;
  Eigen::MatrixXd scatter;
  Eigen::MatrixXd chol;  // lower factor of the current proposal covariance

  void reset(int d, double sd, double target_rate);
  void observe(const Eigen::VectorXd& x);
  void adapt_scale(double accept_prob, long iteration);
  void refresh();
  Eigen::MatrixXd covariance() const;
};

struct AdaptationState {
  double varsigma = 0.1;
  double level_width = 0.1;
  int L = 16;
  /// One walk per time with independent rate priors, a single joint walk
  /// with the NGAR1 prior.
  std::vector<WalkAdapter> lambda_walks;
  double aux_batch_sum = 0.0;
  long aux_batch_n = 0;
};

struct BlockCounters {
  long beta_accepted = 0, beta_tried = 0;
  long aux_accepted = 0, aux_tried = 0;
  long lambda_accepted = 0, lambda_tried = 0;
  long levels_accepted = 0, levels_tried = 0;

  double rate(long a, long t) const { return t > 0 ? static_cast<double>(a) / t : 0.0; }
};

struct ChainState {
  std::vector<Layer> layers;
  PartitionLevels levels;
  long iteration = 0;
  AdaptationState adapt;
  BlockCounters all;
  BlockCounters post_burn;
  /// Outcome of the last pass of each block (fractions in [0, 1]).
  double last_beta = 0.0, last_aux = 0.0, last_lambda = 0.0, last_levels = 0.0;

  int times() const { return static_cast<int>(layers.size()); }
  int K() const { return levels.regions(); }
};

/// Everything that stays fixed during a run.
struct ChainContext {
  ModelSpec model;
  SamplerConfig config;
  std::shared_ptr<const DynamicPrior> prior;
  /// Set for spatiotemporal fits; the spatial fit leaves it empty.
  std::optional<TemporalSpec> temporal;

  bool ngar1() const {
    return temporal && temporal->rate_prior == TemporalSpec::RatePrior::kNgar1;
  }
  bool fixed_ordering() const { return config.fixed_ordering.value_or(model.K >= 3); }
  NGAR1Spec ngar1_spec() const;
};

/// Builds the priors for a model (static NNGP, optional innovation NNGP).
ChainContext make_context(const ModelSpec& model, const SamplerConfig& config,
                          std::optional<TemporalSpec> temporal = std::nullopt);

// Acceptance ratios on the log scale. `log_r` are log_ratios(rate, delta).
double log_accept_counts(std::span<const double> log_r, std::span<const double> log_lambda,
                         std::span<const long> n_cur, std::span<const long> n_prop,
                         std::span<const long> y_cur, std::span<const long> y_prop);
double log_accept_square(std::span<const double> log_r, std::span<const long> n_cur,
                         std::span<const long> n_prop);
/// Rate move including the exp(-mu(S)(lambda_m' - lambda_m)) factor but
/// excluding prior and Jacobian terms.
double log_accept_rates(double area, const RateVector& cur, const RateVector& prop, double delta,
                        std::span<const long> n_cur, std::span<const long> n_prop,
                        std::span<const long> y);

/// log M_hat + sum_k |Y_k| log lambda_k summed over layers.
double log_pseudo_marginal(const ChainState& state, const ChainContext& ctx);

/// Initial state. Throws std::invalid_argument for an empty pattern unless
/// `allow_empty` (prior-only runs).
ChainState initialize(const std::vector<std::vector<Point>>& data, const ChainContext& ctx,
                      bool allow_empty = false);

// Block updates; each uses streams keyed by (seed, block, state.iteration).
void update_beta(ChainState& state, const ChainContext& ctx);
void update_aux(ChainState& state, const ChainContext& ctx);
void update_lambda(ChainState& state, const ChainContext& ctx);
void update_levels(ChainState& state, const ChainContext& ctx);
/// Removes scratch sites and auxiliary points above the current lambda*.
void virtual_update(ChainState& state);

/// Recomputes cached counts from scratch and compares; throws
/// std::logic_error on mismatch.
void audit(const ChainState& state, const ChainContext& ctx);

/// One full sweep in order beta, aux, lambda, virtual update, levels,
/// followed by adaptation. Increments the iteration counter first.
void step(ChainState& state, const ChainContext& ctx);

struct SampleRecord {
  long iteration = 0;
  int times = 1;
  std::vector<double> lambda;  // row-major by time
  std::vector<double> c;
  double log_pm = 0.0;
  long n_aux = 0;
  double acc_beta = 0.0, acc_aux = 0.0, acc_lambda = 0.0, acc_levels = 0.0;
};

/// Retained draw with the lattice values needed for summaries and DIC.
struct PosteriorDraw {
  long iteration = 0;
  std::vector<double> lambda;  // row-major by time
  std::vector<double> c;
  std::vector<Eigen::VectorXd> grid;  // one per time
  std::vector<std::vector<std::uint8_t>> y_regions;
};

struct FitSummary {
  double acc_beta = 0.0, acc_aux = 0.0, acc_lambda = 0.0, acc_levels = 0.0;
  double varsigma = 0.0;
  double level_width = 0.0;
  int L = 0;
  std::vector<double> delta;
  double seconds = 0.0;
};

struct FitResult {
  std::vector<SampleRecord> records;
  std::vector<PosteriorDraw> draws;
  FitSummary summary;
};

struct RunSinks {
  std::function<void(const SampleRecord&)> on_record;
  std::function<void(const PosteriorDraw&)> on_draw;
  /// Keep records and draws in FitResult as well.
  bool keep = true;
};

FitResult run_chain(const std::vector<std::vector<Point>>& data, const ChainContext& ctx,
                    const RunSinks& sinks = {});

/// Spatial fit of a pattern (time stamps ignored).
FitResult fit(const PointPattern& pattern, const ModelSpec& model, const SamplerConfig& config,
              const RunSinks& sinks = {});

SampleRecord make_record(const ChainState& state, const ChainContext& ctx);
PosteriorDraw make_draw(const ChainState& state);

}  // namespace lscp
