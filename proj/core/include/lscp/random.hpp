#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace lscp {

using Engine = std::mt19937_64;

/// Block tags used to key deterministic sub-streams of the master seed.
enum class StreamTag : std::uint64_t {
  kInit = 1,
  kBetaGrid,
  kBetaOffgrid,
  kAux,
  kLambda,
  kLambdaOffgrid,
  kLevels,
  kSimulate,
  kPredict,
  kDiagnose,
};

/// Engine seeded from (seed, tag, keys...). Two calls with the same key
/// produce identical streams; distinct keys give unrelated streams. All
/// parallel sections draw from streams keyed by work-item index so that
/// realized output does not depend on the number of workers.
Engine substream(std::uint64_t seed, StreamTag tag, std::initializer_list<std::uint64_t> keys);

/// A stream family: fixed (seed, tag, a, b) prefix, with the final key
/// usually a chunk or square index.
struct StreamKey {
  std::uint64_t seed = 0;
  StreamTag tag = StreamTag::kInit;
  std::uint64_t a = 0;
  std::uint64_t b = 0;

  Engine at(std::uint64_t c) const { return substream(seed, tag, {a, b, c}); }
};

inline double uniform01(Engine& eng) {
  return std::uniform_real_distribution<double>(0.0, 1.0)(eng);
}

inline double std_normal(Engine& eng) {
  return std::normal_distribution<double>(0.0, 1.0)(eng);
}

inline long poisson(Engine& eng, double mean) {
  if (mean <= 0.0) return 0;
  return std::poisson_distribution<long>(mean)(eng);
}

}  // namespace lscp
