#include "lscp/mcmc.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include <spdlog/spdlog.h>

#include "lscp/parallel.hpp"

namespace lscp {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr int kMaxSquares = 4096;
constexpr long kAuxBatch = 50;

double step_size(long iteration) { return std::pow(static_cast<double>(iteration) + 1.0, -0.6); }

std::vector<long> data_counts(const Layer& layer, const PartitionLevels& levels) {
  std::vector<long> counts(levels.regions(), 0);
  for (const auto& s : layer.field.data) ++counts[levels.region_of(s.value)];
  return counts;
}

std::vector<long> aux_counts(const Layer& layer, const PartitionLevels& levels) {
  std::vector<long> counts(levels.regions(), 0);
  for (std::size_t l = 0; l < layer.field.aux.size(); ++l) {
    const auto& pts = layer.aux.cells[l];
    const auto& sites = layer.field.aux[l];
    for (std::size_t i = 0; i < sites.size(); ++i) {
      if (pts[i].height < layer.aux.lambda_star) ++counts[levels.region_of(sites[i].value)];
    }
  }
  return counts;
}

std::vector<double> log_values(const RateVector& rate) {
  std::vector<double> out(rate.size());
  for (int k = 0; k < rate.size(); ++k) out[k] = std::log(rate[k]);
  return out;
}

bool strictly_increasing(std::span<const double> v) {
  for (std::size_t i = 1; i < v.size(); ++i)
    if (!(v[i] > v[i - 1])) return false;
  return true;
}

// Keeps aux points and their latent values aligned while dropping heights
// at or above lambda*.
void drop_above(Layer& layer) {
  const double star = layer.aux.lambda_star;
  for (std::size_t l = 0; l < layer.aux.cells.size(); ++l) {
    auto& pts = layer.aux.cells[l];
    auto& sites = layer.field.aux[l];
    std::size_t keep = 0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
      if (pts[i].height < star) {
        if (keep != i) {
          pts[keep] = pts[i];
          sites[keep] = std::move(sites[i]);
        }
        ++keep;
      }
    }
    pts.resize(keep);
    sites.resize(keep);
  }
}

void rebucket(Layer& layer, const SquareLayout& layout) {
  std::vector<std::vector<AuxPoint>> cells(layout.count());
  std::vector<std::vector<OffgridSite>> sites(layout.count());
  for (std::size_t l = 0; l < layer.aux.cells.size(); ++l) {
    for (std::size_t i = 0; i < layer.aux.cells[l].size(); ++i) {
      const int dst = layout.square_of(layer.aux.cells[l][i].loc);
      cells[dst].push_back(layer.aux.cells[l][i]);
      sites[dst].push_back(std::move(layer.field.aux[l][i]));
    }
  }
  layer.aux.squares = layout;
  layer.aux.cells = std::move(cells);
  layer.field.aux = std::move(sites);
}

void tally(ChainState& state, const ChainContext& ctx, long BlockCounters::*acc, long BlockCounters::*tried,
           long accepted, long attempts) {
  state.all.*acc += accepted;
  state.all.*tried += attempts;
  if (state.iteration > ctx.config.burn_in) {
    state.post_burn.*acc += accepted;
    state.post_burn.*tried += attempts;
  }
}

bool adapting(const ChainState& state, const ChainContext& ctx) {
  return state.iteration <= ctx.config.horizon();
}

double lambda_target(int dim) {
  if (dim <= 1) return 0.4;
  return std::max(0.234, 0.4 - 0.04 * (dim - 1));
}

}  // namespace

void SamplerConfig::validate() const {
  if (burn_in < 0) throw std::invalid_argument("burn_in must be >= 0");
  if (iterations <= burn_in) throw std::invalid_argument("iterations must exceed burn_in");
  if (thin < 1) throw std::invalid_argument("thin must be >= 1");
  if (L < 1) throw std::invalid_argument("L must be >= 1");
  if (delta && !(*delta > 1.0)) throw std::invalid_argument("delta must be > 1");
  if (!(target_aux > 0.0)) throw std::invalid_argument("target_aux must be positive");
  if (!(varsigma > 0.0 && varsigma <= 1.0)) throw std::invalid_argument("varsigma must lie in (0, 1]");
  if (beta_steps < 1) throw std::invalid_argument("beta_steps must be >= 1");
  if (!(lambda_scale > 0.0)) throw std::invalid_argument("lambda_scale must be positive");
  if (!(level_width > 0.0)) throw std::invalid_argument("level_width must be positive");
  if (adapt_horizon && *adapt_horizon < 0) throw std::invalid_argument("adapt_horizon must be >= 0");
  if (snapshot_every < 0) throw std::invalid_argument("snapshot_every must be >= 0");
}

void ModelSpec::validate() const {
  if (K < 1) throw std::invalid_argument("K must be >= 1");
  covariance.validate();
  if (covariance.sigma2 != 1.0) throw std::invalid_argument("the latent field has unit marginal variance");
  if (r < 4) throw std::invalid_argument("r must be >= 4");
  if (m < 1) throw std::invalid_argument("m must be >= 1");
  rate_prior.validate();
  if (rate_prior.size() != K) throw std::invalid_argument("rate prior dimension must equal K");
  if (initial_levels && initial_levels->regions() != K) {
    throw std::invalid_argument("initial thresholds must define K regions");
  }
}

void WalkAdapter::reset(int d, double sd, double target_rate) {
  dim = d;
  log_scale = 0.0;
  initial_sd = sd;
  target = target_rate;
  observed = 0;
  mean = Eigen::VectorXd::Zero(d);
  scatter = Eigen::MatrixXd::Zero(d, d);
  chol = sd * Eigen::MatrixXd::Identity(d, d);
}

void WalkAdapter::observe(const Eigen::VectorXd& x) {
  ++observed;
  const Eigen::VectorXd before = x - mean;
  mean += before / static_cast<double>(observed);
  scatter += before * (x - mean).transpose();
}

void WalkAdapter::adapt_scale(double accept_prob, long iteration) {
  log_scale += step_size(iteration) * (accept_prob - target);
  log_scale = std::clamp(log_scale, -10.0, 10.0);
}

Eigen::MatrixXd WalkAdapter::covariance() const {
  const double s2 = std::exp(2.0 * log_scale);
  const long warmup = std::max<long>(100, 10L * dim);
  if (observed < warmup) return s2 * initial_sd * initial_sd * Eigen::MatrixXd::Identity(dim, dim);
  Eigen::MatrixXd emp = scatter / static_cast<double>(observed - 1);
  const double ridge = 1e-8 * (1.0 + emp.trace() / dim);
  emp.diagonal().array() += ridge;
  return s2 * (2.38 * 2.38 / dim) * emp;
}

void WalkAdapter::refresh() {
  const Eigen::MatrixXd cov = covariance();
  Eigen::LLT<Eigen::MatrixXd> llt(cov);
  if (llt.info() == Eigen::Success) {
    chol = llt.matrixL();
  } else {
    chol = cov.diagonal().cwiseMax(1e-12).cwiseSqrt().asDiagonal();
  }
}

NGAR1Spec ChainContext::ngar1_spec() const {
  NGAR1Spec s;
  if (temporal) {
    s.w = temporal->w;
    s.a = temporal->a;
  }
  s.initial = model.rate_prior;
  return s;
}

ChainContext make_context(const ModelSpec& model, const SamplerConfig& config,
                          std::optional<TemporalSpec> temporal) {
  model.validate();
  config.validate();
  if (temporal) temporal->validate(model.covariance, model.K);
  auto grid = std::make_shared<const ReferenceGrid>(model.window, model.r, model.m);
  auto base = std::make_shared<const NngpPrior>(grid, model.covariance);
  std::shared_ptr<const NngpPrior> innovation;
  if (temporal) innovation = std::make_shared<const NngpPrior>(grid, temporal->innovation(model.covariance));
  ChainContext ctx;
  ctx.model = model;
  ctx.config = config;
  ctx.prior = std::make_shared<const DynamicPrior>(base, innovation);
  ctx.temporal = std::move(temporal);
  return ctx;
}

double log_accept_counts(std::span<const double> log_r, std::span<const double> log_lambda,
                         std::span<const long> n_cur, std::span<const long> n_prop,
                         std::span<const long> y_cur, std::span<const long> y_prop) {
  double out = 0.0;
  for (std::size_t k = 0; k < log_r.size(); ++k) {
    const long dn = n_prop[k] - n_cur[k];
    const long dy = y_prop[k] - y_cur[k];
    if (dn != 0) out += static_cast<double>(dn) * log_r[k];
    if (dy != 0) out += static_cast<double>(dy) * log_lambda[k];
  }
  return out;
}

double log_accept_square(std::span<const double> log_r, std::span<const long> n_cur,
                         std::span<const long> n_prop) {
  double out = 0.0;
  for (std::size_t k = 0; k < log_r.size(); ++k) {
    const long dn = n_prop[k] - n_cur[k];
    if (dn != 0) out += static_cast<double>(dn) * log_r[k];
  }
  return out;
}

double log_accept_rates(double area, const RateVector& cur, const RateVector& prop, double delta,
                        std::span<const long> n_cur, std::span<const long> n_prop,
                        std::span<const long> y) {
  const auto lr_cur = log_ratios(cur, delta);
  const auto lr_prop = log_ratios(prop, delta);
  double out = -area * (prop.min() - cur.min());
  for (int k = 0; k < cur.size(); ++k) {
    if (n_prop[k] > 0) out += static_cast<double>(n_prop[k]) * lr_prop[k];
    if (n_cur[k] > 0) out -= static_cast<double>(n_cur[k]) * lr_cur[k];
    if (y[k] > 0) out += static_cast<double>(y[k]) * (std::log(prop[k]) - std::log(cur[k]));
  }
  return out;
}

double log_pseudo_marginal(const ChainState& state, const ChainContext& ctx) {
  const double area = ctx.model.window.area();
  double out = 0.0;
  for (const auto& layer : state.layers) {
    out += log_m_hat(layer.lambda, layer.delta, layer.n_counts, area);
    for (int k = 0; k < layer.lambda.size(); ++k) {
      if (layer.y_counts[k] > 0) out += static_cast<double>(layer.y_counts[k]) * std::log(layer.lambda[k]);
    }
  }
  return out;
}

ChainState initialize(const std::vector<std::vector<Point>>& data, const ChainContext& ctx,
                      bool allow_empty) {
  const auto& model = ctx.model;
  const auto& cfg = ctx.config;
  const int times = static_cast<int>(data.size());
  if (times < 1) throw std::invalid_argument("need at least one time slice");
  if (times > 1 && !ctx.prior->innovation()) {
    throw std::invalid_argument("several time slices need a temporal specification");
  }
  std::size_t total = 0;
  for (const auto& d : data) {
    total += d.size();
    for (const auto& p : d) {
      if (!model.window.contains(p)) throw std::invalid_argument("data point outside the window");
    }
  }
  if (total == 0 && !allow_empty) throw std::invalid_argument("cannot fit an empty pattern");

  ChainState state;
  state.levels = model.initial_levels.value_or(PartitionLevels::initial(model.K));
  const double area = model.window.area();
  const NngpPrior& base = ctx.prior->base();
  const SquareLayout layout = SquareLayout::with_count(model.window, cfg.L);
  auto grids = ctx.prior->sample(times, StreamKey{cfg.seed, StreamTag::kInit, 0, 0});

  state.layers.resize(times);
  for (int t = 0; t < times; ++t) {
    Layer& layer = state.layers[t];
    layer.data = data[t];
    layer.field.grid = std::move(grids[t]);
    const auto tt = static_cast<std::uint64_t>(t) + 1;
    layer.field.data = draw_offgrid(base, layer.field.grid, layer.data, StreamKey{cfg.seed, StreamTag::kInit, tt, 1});

    const double level = static_cast<double>(std::max<std::size_t>(layer.data.size(), 1)) / area;
    std::vector<double> lambda(model.K, level);
    // distinct starting levels; the repulsive prior is -inf at ties
    if (model.K > 1) {
      for (int k = 0; k < model.K; ++k) lambda[k] = level * (0.9 + 0.2 * k / (model.K - 1));
    }
    layer.lambda = RateVector(lambda);
    layer.delta = cfg.delta.value_or(auto_delta(layer.lambda, area, cfg.target_aux));
    layer.aux = sample_aux(layout, layer.lambda.lambda_star(layer.delta),
                           StreamKey{cfg.seed, StreamTag::kAux, 0, static_cast<std::uint64_t>(t)});
    layer.field.aux.resize(layout.count());
    for (int l = 0; l < layout.count(); ++l) {
      std::vector<Point> locs;
      locs.reserve(layer.aux.cells[l].size());
      for (const auto& p : layer.aux.cells[l]) locs.push_back(p.loc);
      layer.field.aux[l] = draw_offgrid(base, layer.field.grid, locs,
                                        StreamKey{cfg.seed, StreamTag::kInit, tt, 2 + static_cast<std::uint64_t>(l)});
    }
    layer.y_counts = data_counts(layer, state.levels);
    layer.n_counts = aux_counts(layer, state.levels);
  }

  state.adapt.varsigma = cfg.varsigma;
  state.adapt.level_width = cfg.level_width;
  state.adapt.L = cfg.L;
  if (ctx.ngar1()) {
    const int d = times * model.K;
    state.adapt.lambda_walks.resize(1);
    state.adapt.lambda_walks[0].reset(d, cfg.lambda_scale, lambda_target(d));
  } else {
    state.adapt.lambda_walks.resize(times);
    for (auto& w : state.adapt.lambda_walks) w.reset(model.K, cfg.lambda_scale, lambda_target(model.K));
  }
  return state;
}

namespace {

bool pcn_step(ChainState& state, const ChainContext& ctx, std::uint64_t sub) {
  const auto& cfg = ctx.config;
  const auto it = static_cast<std::uint64_t>(state.iteration);
  // same draws as st_pcn_propose with these keys, without copying the fields
  const auto eps = ctx.prior->sample(state.times(), StreamKey{cfg.seed, StreamTag::kBetaGrid, it, 2 * sub});
  std::vector<FieldProposal> props;
  props.reserve(state.layers.size());
  for (int t = 0; t < state.times(); ++t) {
    props.push_back(pcn_propose_with_noise(state.layers[t].field, eps[t], state.adapt.varsigma,
                                           StreamKey{cfg.seed, StreamTag::kBetaOffgrid, it, sub * 1024 + static_cast<std::uint64_t>(t)}));
  }

  const int K = state.K();
  double log_alpha = 0.0;
  std::vector<std::vector<long>> y_new(state.times()), n_new(state.times());
  for (int t = 0; t < state.times(); ++t) {
    const Layer& layer = state.layers[t];
    if (!layer.field.scratch.empty()) throw std::logic_error("scratch sites present during the beta update");
    const auto& vals = props[t].offgrid;
    y_new[t].assign(K, 0);
    n_new[t].assign(K, 0);
    const std::size_t nd = layer.field.data.size();
    for (std::size_t i = 0; i < nd; ++i) ++y_new[t][state.levels.region_of(vals[i])];
    std::size_t pos = nd;
    for (std::size_t l = 0; l < layer.field.aux.size(); ++l) {
      for (std::size_t i = 0; i < layer.field.aux[l].size(); ++i, ++pos) {
        if (layer.aux.cells[l][i].height < layer.aux.lambda_star) ++n_new[t][state.levels.region_of(vals[pos])];
      }
    }
    const auto lr = log_ratios(layer.lambda, layer.delta);
    const auto ll = log_values(layer.lambda);
    log_alpha += log_accept_counts(lr, ll, layer.n_counts, n_new[t], layer.y_counts, y_new[t]);
  }

  Engine eng = substream(cfg.seed, StreamTag::kBetaGrid, {it, 2 * sub + 1, 0});
  const bool accept = log_alpha >= 0.0 || std::log(uniform01(eng)) < log_alpha;
  if (accept) {
    for (int t = 0; t < state.times(); ++t) {
      apply_proposal(state.layers[t].field, std::move(props[t]));
      state.layers[t].y_counts = std::move(y_new[t]);
      state.layers[t].n_counts = std::move(n_new[t]);
    }
  }
  if (adapting(state, ctx)) {
    const double p = std::exp(std::min(0.0, log_alpha));
    double ls = std::log(state.adapt.varsigma) + step_size(state.iteration) * (p - 0.234);
    state.adapt.varsigma = std::clamp(std::exp(ls), 1e-5, 1.0);
  }
  return accept;
}

}  // namespace

void update_beta(ChainState& state, const ChainContext& ctx) {
  const int steps = ctx.config.beta_steps;
  long n_acc = 0;
  for (int j = 0; j < steps; ++j) n_acc += pcn_step(state, ctx, static_cast<std::uint64_t>(j)) ? 1 : 0;
  tally(state, ctx, &BlockCounters::beta_accepted, &BlockCounters::beta_tried, n_acc, steps);
  state.last_beta = static_cast<double>(n_acc) / steps;
}

void update_aux(ChainState& state, const ChainContext& ctx) {
  const auto& cfg = ctx.config;
  const auto it = static_cast<std::uint64_t>(state.iteration);
  const NngpPrior& base = ctx.prior->base();
  const int times = state.times();
  const int squares = state.layers[0].aux.squares.count();
  const int K = state.K();

  std::vector<std::vector<double>> lr(times);
  for (int t = 0; t < times; ++t) lr[t] = log_ratios(state.layers[t].lambda, state.layers[t].delta);

  const std::size_t jobs = static_cast<std::size_t>(times) * squares;
  std::vector<double> accept_prob(jobs, 0.0);
  std::vector<char> accepted(jobs, 0);
  parallel_chunks(jobs, 1, [&](std::size_t, std::size_t begin, std::size_t end) {
    for (std::size_t job = begin; job < end; ++job) {
      const int t = static_cast<int>(job / squares);
      const int l = static_cast<int>(job % squares);
      Layer& layer = state.layers[t];
      Engine eng = StreamKey{cfg.seed, StreamTag::kAux, it, static_cast<std::uint64_t>(t)}.at(l);
      auto pts = sample_square(layer.aux.squares.square(l), layer.aux.lambda_star, eng);
      std::vector<OffgridSite> sites(pts.size());
      std::vector<long> n_prop(K, 0), n_cur(K, 0);
      for (std::size_t i = 0; i < pts.size(); ++i) {
        sites[i].loc = pts[i].loc;
        sites[i].cond = base.conditional_at(pts[i].loc);
        sites[i].value = conditional_draw(sites[i].cond, layer.field.grid, std_normal(eng));
        ++n_prop[state.levels.region_of(sites[i].value)];
      }
      const auto& cur_pts = layer.aux.cells[l];
      const auto& cur_sites = layer.field.aux[l];
      for (std::size_t i = 0; i < cur_sites.size(); ++i) {
        if (cur_pts[i].height < layer.aux.lambda_star) ++n_cur[state.levels.region_of(cur_sites[i].value)];
      }
      const double log_alpha = log_accept_square(lr[t], n_cur, n_prop);
      accept_prob[job] = std::exp(std::min(0.0, log_alpha));
      const double u = uniform01(eng);
      if (log_alpha >= 0.0 || std::log(u) < log_alpha) {
        accepted[job] = 1;
        layer.aux.cells[l] = std::move(pts);
        layer.field.aux[l] = std::move(sites);
      }
    }
  });

  long n_acc = 0;
  double p_sum = 0.0;
  for (std::size_t j = 0; j < jobs; ++j) {
    n_acc += accepted[j];
    p_sum += accept_prob[j];
  }
  for (auto& layer : state.layers) layer.n_counts = aux_counts(layer, state.levels);
  tally(state, ctx, &BlockCounters::aux_accepted, &BlockCounters::aux_tried, n_acc, static_cast<long>(jobs));
  state.last_aux = static_cast<double>(n_acc) / static_cast<double>(jobs);
  state.adapt.aux_batch_sum += p_sum / static_cast<double>(jobs);
  ++state.adapt.aux_batch_n;
}

void update_lambda(ChainState& state, const ChainContext& ctx) {
  const auto& cfg = ctx.config;
  const auto it = static_cast<std::uint64_t>(state.iteration);
  const int K = state.K();
  const int times = state.times();
  const double area = ctx.model.window.area();
  const bool joint = ctx.ngar1();
  const int groups = joint ? 1 : times;
  const NGAR1Spec ngar = joint ? ctx.ngar1_spec() : NGAR1Spec{};
  long n_acc = 0;
  double acc_sum = 0.0;

  for (int g = 0; g < groups; ++g) {
    const int t0 = joint ? 0 : g;
    const int t1 = joint ? times : g + 1;
    const int d = (t1 - t0) * K;
    WalkAdapter& walk = state.adapt.lambda_walks[g];
    Engine eng = substream(cfg.seed, StreamTag::kLambda, {it, static_cast<std::uint64_t>(g)});

    Eigen::VectorXd x(d);
    for (int t = t0; t < t1; ++t)
      for (int k = 0; k < K; ++k) {
        const double v = state.layers[t].lambda[k];
        x[(t - t0) * K + k] = cfg.log_scale_walk ? std::log(v) : v;
      }
    Eigen::VectorXd z(d);
    for (int i = 0; i < d; ++i) z[i] = std_normal(eng);
    const Eigen::VectorXd xp = x + walk.chol * z;

    std::vector<double> flat(d), flat_cur(d);
    bool valid = true;
    for (int i = 0; i < d; ++i) {
      flat[i] = cfg.log_scale_walk ? std::exp(xp[i]) : xp[i];
      flat_cur[i] = cfg.log_scale_walk ? std::exp(x[i]) : x[i];
      if (!(flat[i] > 0.0) || !std::isfinite(flat[i])) valid = false;
    }
    if (valid && ctx.fixed_ordering()) {
      for (int t = t0; t < t1 && valid; ++t) {
        valid = strictly_increasing(std::span<const double>(flat).subspan((t - t0) * K, K));
      }
    }
    double log_alpha = kNegInf;
    struct Pending {
      RateVector lambda;
      double star = 0.0;
      std::vector<AuxPoint> pts;
      std::vector<OffgridSite> sites;
      std::vector<long> n_new;
    };
    std::vector<Pending> pending(t1 - t0);
    if (valid) {
      std::span<const double> fs(flat), fc(flat_cur);
      double prior_new, prior_cur;
      if (joint) {
        prior_new = ngar1_joint_log_density(fs, times, ngar);
        prior_cur = ngar1_joint_log_density(fc, times, ngar);
      } else {
        prior_new = rg_log_density_unnorm(fs, ctx.model.rate_prior);
        prior_cur = rg_log_density_unnorm(fc, ctx.model.rate_prior);
      }
      if (prior_new > kNegInf) {
        log_alpha = prior_new - prior_cur;
        if (cfg.log_scale_walk) log_alpha += (xp - x).sum();
        for (int t = t0; t < t1; ++t) {
          Layer& layer = state.layers[t];
          Pending& pd = pending[t - t0];
          pd.lambda = RateVector(std::vector<double>(fs.begin() + (t - t0) * K, fs.begin() + (t - t0 + 1) * K));
          pd.star = pd.lambda.lambda_star(layer.delta);
          pd.n_new.assign(K, 0);
          for (std::size_t l = 0; l < layer.aux.cells.size(); ++l) {
            for (std::size_t i = 0; i < layer.aux.cells[l].size(); ++i) {
              const double h = layer.aux.cells[l][i].height;
              if (h < layer.aux.lambda_star && h < pd.star) ++pd.n_new[state.levels.region_of(layer.field.aux[l][i].value)];
            }
          }
          if (pd.star > layer.aux.lambda_star) {
            const auto tt = static_cast<std::uint64_t>(t);
            Engine slab = substream(cfg.seed, StreamTag::kLambda, {it, tt, 1});
            pd.pts = sample_slab(ctx.model.window, layer.aux.lambda_star, pd.star, slab);
            std::vector<Point> locs;
            locs.reserve(pd.pts.size());
            for (const auto& p : pd.pts) locs.push_back(p.loc);
            pd.sites = draw_offgrid(ctx.prior->base(), layer.field.grid, locs,
                                    StreamKey{cfg.seed, StreamTag::kLambdaOffgrid, it, tt});
            for (const auto& s : pd.sites) ++pd.n_new[state.levels.region_of(s.value)];
          }
          log_alpha += log_accept_rates(area, layer.lambda, pd.lambda, layer.delta, layer.n_counts, pd.n_new,
                                        layer.y_counts);
        }
      }
    }

    const double u = uniform01(eng);
    const bool accept = log_alpha > kNegInf && (log_alpha >= 0.0 || std::log(u) < log_alpha);
    if (accept) {
      for (int t = t0; t < t1; ++t) {
        Layer& layer = state.layers[t];
        Pending& pd = pending[t - t0];
        layer.lambda = pd.lambda;
        const double old_star = layer.aux.lambda_star;
        layer.aux.lambda_star = pd.star;
        if (pd.star > old_star) {
          for (std::size_t i = 0; i < pd.pts.size(); ++i) {
            const int l = layer.aux.squares.square_of(pd.pts[i].loc);
            layer.aux.cells[l].push_back(pd.pts[i]);
            layer.field.aux[l].push_back(std::move(pd.sites[i]));
          }
        } else {
          drop_above(layer);
        }
        layer.n_counts = std::move(pd.n_new);
      }
      ++n_acc;
      x = xp;
    }
    const double p = log_alpha > kNegInf ? std::exp(std::min(0.0, log_alpha)) : 0.0;
    acc_sum += accept ? 1.0 : 0.0;
    if (adapting(state, ctx)) {
      walk.observe(x);
      walk.adapt_scale(p, state.iteration);
      walk.refresh();
    }
  }
  tally(state, ctx, &BlockCounters::lambda_accepted, &BlockCounters::lambda_tried, n_acc, groups);
  state.last_lambda = acc_sum / groups;
}

void update_levels(ChainState& state, const ChainContext& ctx) {
  if (state.K() < 2) {
    state.last_levels = 1.0;
    return;
  }
  const auto& cfg = ctx.config;
  Engine eng = substream(cfg.seed, StreamTag::kLevels, {static_cast<std::uint64_t>(state.iteration)});
  std::vector<double> c = state.levels.thresholds();
  for (double& v : c) v += state.adapt.level_width * (2.0 * uniform01(eng) - 1.0);
  double log_alpha = kNegInf;
  std::vector<std::vector<long>> y_new(state.times()), n_new(state.times());
  std::optional<PartitionLevels> proposal;
  if (PartitionLevels::is_valid(c)) {
    proposal.emplace(c);
    log_alpha = 0.0;
    for (int t = 0; t < state.times(); ++t) {
      const Layer& layer = state.layers[t];
      y_new[t] = data_counts(layer, *proposal);
      n_new[t] = aux_counts(layer, *proposal);
      log_alpha += log_accept_counts(log_ratios(layer.lambda, layer.delta), log_values(layer.lambda), layer.n_counts,
                                     n_new[t], layer.y_counts, y_new[t]);
    }
  }
  const double u = uniform01(eng);
  const bool accept = proposal && (log_alpha >= 0.0 || std::log(u) < log_alpha);
  if (accept) {
    state.levels = *proposal;
    for (int t = 0; t < state.times(); ++t) {
      state.layers[t].y_counts = std::move(y_new[t]);
      state.layers[t].n_counts = std::move(n_new[t]);
    }
  }
  tally(state, ctx, &BlockCounters::levels_accepted, &BlockCounters::levels_tried, accept ? 1 : 0, 1);
  state.last_levels = accept ? 1.0 : 0.0;
  if (adapting(state, ctx)) {
    const double p = proposal ? std::exp(std::min(0.0, log_alpha)) : 0.0;
    const double lw = std::log(state.adapt.level_width) + step_size(state.iteration) * (p - 0.3);
    state.adapt.level_width = std::clamp(std::exp(lw), 1e-6, 10.0);
  }
}

void virtual_update(ChainState& state) {
  for (auto& layer : state.layers) {
    prune_scratch(layer.field);
    drop_above(layer);
  }
}

void audit(const ChainState& state, const ChainContext& ctx) {
  for (int t = 0; t < state.times(); ++t) {
    const Layer& layer = state.layers[t];
    if (layer.field.data.size() != layer.data.size()) throw std::logic_error("data sites out of sync");
    if (layer.field.aux.size() != layer.aux.cells.size()) throw std::logic_error("aux buckets out of sync");
    for (std::size_t l = 0; l < layer.aux.cells.size(); ++l) {
      if (layer.field.aux[l].size() != layer.aux.cells[l].size()) throw std::logic_error("aux sites out of sync");
      for (std::size_t i = 0; i < layer.aux.cells[l].size(); ++i) {
        if (!(layer.field.aux[l][i].loc == layer.aux.cells[l][i].loc)) throw std::logic_error("aux site moved");
      }
    }
    if (data_counts(layer, state.levels) != layer.y_counts) {
      throw std::logic_error("cached data counts differ at time " + std::to_string(t));
    }
    if (aux_counts(layer, state.levels) != layer.n_counts) {
      throw std::logic_error("cached aux counts differ at time " + std::to_string(t));
    }
  }
  const double lp = log_pseudo_marginal(state, ctx);
  if (!std::isfinite(lp)) throw std::logic_error("log pseudo-marginal is not finite");
}

namespace {

void tune_squares(ChainState& state, const ChainContext& ctx) {
  if (!ctx.config.tune_L || state.iteration > ctx.config.horizon() / 2) return;
  if (state.adapt.aux_batch_n < kAuxBatch) return;
  const double mean = state.adapt.aux_batch_sum / static_cast<double>(state.adapt.aux_batch_n);
  state.adapt.aux_batch_sum = 0.0;
  state.adapt.aux_batch_n = 0;
  int L = state.adapt.L;
  if (mean < 0.7 && L < kMaxSquares) {
    L *= 2;
  } else if (mean > 0.95 && L > 1) {
    L /= 2;
  } else {
    return;
  }
  state.adapt.L = L;
  const SquareLayout layout = SquareLayout::with_count(ctx.model.window, L);
  for (auto& layer : state.layers) rebucket(layer, layout);
  spdlog::debug("iteration {}: aux acceptance {:.3f}, L -> {}", state.iteration, mean, layout.count());
}

}  // namespace

void step(ChainState& state, const ChainContext& ctx) {
  ++state.iteration;
  const bool check = ctx.config.audit;
  update_beta(state, ctx);
  if (check) audit(state, ctx);
  update_aux(state, ctx);
  virtual_update(state);
  if (check) audit(state, ctx);
  update_lambda(state, ctx);
  virtual_update(state);
  if (check) audit(state, ctx);
  update_levels(state, ctx);
  if (check) audit(state, ctx);
  tune_squares(state, ctx);
  if (check) audit(state, ctx);
}

SampleRecord make_record(const ChainState& state, const ChainContext& ctx) {
  SampleRecord rec;
  rec.iteration = state.iteration;
  rec.times = state.times();
  for (const auto& layer : state.layers) {
    rec.lambda.insert(rec.lambda.end(), layer.lambda.values().begin(), layer.lambda.values().end());
    rec.n_aux += static_cast<long>(layer.aux.size());
  }
  rec.c = state.levels.thresholds();
  rec.log_pm = log_pseudo_marginal(state, ctx);
  rec.acc_beta = state.last_beta;
  rec.acc_aux = state.last_aux;
  rec.acc_lambda = state.last_lambda;
  rec.acc_levels = state.last_levels;
  return rec;
}

PosteriorDraw make_draw(const ChainState& state) {
  PosteriorDraw d;
  d.iteration = state.iteration;
  d.c = state.levels.thresholds();
  for (const auto& layer : state.layers) {
    d.lambda.insert(d.lambda.end(), layer.lambda.values().begin(), layer.lambda.values().end());
    d.grid.push_back(layer.field.grid);
    std::vector<std::uint8_t> regions(layer.field.data.size());
    for (std::size_t i = 0; i < regions.size(); ++i) {
      regions[i] = static_cast<std::uint8_t>(state.levels.region_of(layer.field.data[i].value));
    }
    d.y_regions.push_back(std::move(regions));
  }
  return d;
}

FitResult run_chain(const std::vector<std::vector<Point>>& data, const ChainContext& ctx, const RunSinks& sinks) {
  const auto start = std::chrono::steady_clock::now();
  const auto& cfg = ctx.config;
  ChainState state = initialize(data, ctx);
  FitResult result;
  long retained = 0;
  for (long i = 0; i < cfg.iterations; ++i) {
    step(state, ctx);
    if (state.iteration <= cfg.burn_in || (state.iteration - cfg.burn_in) % cfg.thin != 0) continue;
    ++retained;
    SampleRecord rec = make_record(state, ctx);
    if (sinks.on_record) sinks.on_record(rec);
    if (sinks.keep) result.records.push_back(std::move(rec));
    if (cfg.snapshot_every > 0 && retained % cfg.snapshot_every == 0) {
      PosteriorDraw draw = make_draw(state);
      if (sinks.on_draw) sinks.on_draw(draw);
      if (sinks.keep) result.draws.push_back(std::move(draw));
    }
  }
  const auto& pb = state.post_burn;
  auto& s = result.summary;
  s.acc_beta = pb.rate(pb.beta_accepted, pb.beta_tried);
  s.acc_aux = pb.rate(pb.aux_accepted, pb.aux_tried);
  s.acc_lambda = pb.rate(pb.lambda_accepted, pb.lambda_tried);
  s.acc_levels = state.K() > 1 ? pb.rate(pb.levels_accepted, pb.levels_tried) : 1.0;
  s.varsigma = state.adapt.varsigma;
  s.level_width = state.adapt.level_width;
  s.L = state.layers[0].aux.squares.count();
  for (const auto& layer : state.layers) s.delta.push_back(layer.delta);
  s.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

FitResult fit(const PointPattern& pattern, const ModelSpec& model, const SamplerConfig& config,
              const RunSinks& sinks) {
  pattern.validate();
  if (!(pattern.window == model.window)) throw std::invalid_argument("pattern and model windows differ");
  const ChainContext ctx = make_context(model, config);
  return run_chain({pattern.points}, ctx, sinks);
}

}  // namespace lscp
