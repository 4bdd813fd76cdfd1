#pragma once

#include <cstdint>
#include <random>
#include <string_view>

#include "grl/matrix.hpp"

namespace grl {

using Rng = std::mt19937_64;

/// Seed for an independent stream: SplitMix64 over (master seed, FNV-1a of label).
std::uint64_t stream_seed(std::uint64_t master, std::string_view label);

inline Rng make_stream(std::uint64_t master, std::string_view label) {
  return Rng(stream_seed(master, label));
}

/// rows×cols matrix of i.i.d. N(0, stddev²) draws, filled row-major.
DenseMatrix gaussian_matrix(std::size_t rows, std::size_t cols, double stddev, Rng& rng);
Vector gaussian_vector(std::size_t n, double stddev, Rng& rng);

}  // namespace grl
