#pragma once

#include <cstddef>
#include <functional>
#include <string>

namespace lscp {

/// Process-wide worker count used by the data-parallel sections. 0 means
/// "all hardware threads".
void set_thread_count(int n);
int thread_count();

/// Name and version of the threading backend, for run manifests.
std::string parallel_backend();

/// Runs body(chunk, begin, end) for every chunk of `n` items split at
/// fixed `chunk_size` boundaries. Chunk boundaries depend only on `n` and
/// `chunk_size`, never on the worker count.
void parallel_chunks(std::size_t n, std::size_t chunk_size,
                     const std::function<void(std::size_t, std::size_t, std::size_t)>& body);

}  // namespace lscp
