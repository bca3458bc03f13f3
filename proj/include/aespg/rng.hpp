#pragma once

// Seedable portable random source.
//
// Engine: std::mt19937_64, whose output sequence is fixed by the C++
// standard. Each purpose draws from its own stream, seeded with
// splitmix64(seed ^ (stream * 0x9E3779B97F4A7C15)). Uniforms take the top
// 53 bits of one engine output; normals use Box-Muller on two uniforms and
// return the cosine branch first, then the cached sine branch. Matrices are
// filled in column-major order.

#include "aespg/types.hpp"

#include <cstdint>
#include <optional>
#include <random>
#include <vector>

namespace aespg {

enum class RngStream : std::uint64_t {
  Data = 1,
  Init = 2,
  Batching = 3,
  Sampling = 4,
  Bench = 5,
};

std::uint64_t splitmix64(std::uint64_t x);

class Rng {
 public:
  Rng(std::uint64_t seed, RngStream stream);

  std::uint64_t next_u64() { return engine_(); }
  /// Uniform on [0, 1).
  double uniform();
  double normal();
  /// Uniform integer in [0, n), unbiased.
  Index below(Index n);

  Matrix rand(Index rows, Index cols);
  Matrix randn(Index rows, Index cols);
  /// Fisher-Yates shuffle of 0..n-1.
  std::vector<Index> permutation(Index n);

 private:
  std::mt19937_64 engine_;
  std::optional<double> spare_;
};

}  // namespace aespg
