#pragma once

#include "lscp/dynamic_prior.hpp"
#include "lscp/mcmc.hpp"

namespace lscp {

/// Time-stamped fit: one layer per time 0..T sharing thresholds, with the
/// lattice linked by the dynamic prior and rates either independent per
/// time or jointly updated under NGAR1. With T = 0 the chain is identical
/// to fit() for the same seed and settings.
FitResult fit_st(const PointPattern& pattern, const ModelSpec& model, const SamplerConfig& config,
                 const TemporalSpec& temporal, const RunSinks& sinks = {});

/// Splits a pattern by time index (a spatial pattern gives one slice).
std::vector<std::vector<Point>> split_by_time(const PointPattern& pattern);

/// One sweep of the spatiotemporal blocks (same kernel as the spatial step).
inline void st_update_blocks(ChainState& state, const ChainContext& ctx) { step(state, ctx); }

}  // namespace lscp
