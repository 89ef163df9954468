#include "lscp/random.hpp"

namespace lscp {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

Engine substream(std::uint64_t seed, StreamTag tag, std::initializer_list<std::uint64_t> keys) {
  // The key length is mixed in so {a} and {a, 0} give different streams.
  std::uint64_t h = splitmix64(seed);
  h = splitmix64(h ^ static_cast<std::uint64_t>(tag));
  h = splitmix64(h ^ keys.size());
  for (auto k : keys) h = splitmix64(h ^ splitmix64(k));
  return Engine(h);
}

}  // namespace lscp
