#include "lscp/spatiotemporal.hpp"

#include <stdexcept>

namespace lscp {

std::vector<std::vector<Point>> split_by_time(const PointPattern& pattern) {
  const int T1 = pattern.num_times();
  std::vector<std::vector<Point>> out(T1);
  for (std::size_t i = 0; i < pattern.points.size(); ++i) {
    const int t = pattern.has_times() ? pattern.times[i] : 0;
    out[t].push_back(pattern.points[i]);
  }
  return out;
}

FitResult fit_st(const PointPattern& pattern, const ModelSpec& model, const SamplerConfig& config,
                 const TemporalSpec& temporal, const RunSinks& sinks) {
  pattern.validate();
  if (!(pattern.window == model.window)) throw std::invalid_argument("pattern and model windows differ");
  const ChainContext ctx = make_context(model, config, temporal);
  return run_chain(split_by_time(pattern), ctx, sinks);
}

}  // namespace lscp
