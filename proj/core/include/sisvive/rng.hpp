#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace sisvive {

using Rng = std::mt19937_64;

/// Generator for replication `stream` of a run seeded with `seed`. Streams
/// are seeded with seed + stream so that any replication can be reproduced
/// on its own.
inline Rng make_rng(std::uint64_t seed, std::uint64_t stream = 0) {
  return Rng(seed + stream);
}

/// Uniform integer in [0, bound) by rejection, independent of the standard
/// library's distribution implementation.
inline std::uint64_t uniform_index(Rng& rng, std::uint64_t bound) {
  // Reject the low 2^64 mod bound values so the modulo is unbiased.
  const std::uint64_t threshold = (0 - bound) % bound;
  std::uint64_t r;
  do {
    r = rng();
  } while (r < threshold);
  return r % bound;
}

/// Fisher-Yates shuffle of 0..n-1.
inline std::vector<std::int64_t> shuffled_indices(std::int64_t n, Rng& rng) {
  std::vector<std::int64_t> idx(static_cast<std::size_t>(n));
  for (std::int64_t i = 0; i < n; ++i) idx[static_cast<std::size_t>(i)] = i;
  for (std::int64_t i = n - 1; i > 0; --i) {
    const auto j = static_cast<std::int64_t>(uniform_index(rng, static_cast<std::uint64_t>(i + 1)));
    std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(j)]);
  }
  return idx;
}

}  // namespace sisvive
