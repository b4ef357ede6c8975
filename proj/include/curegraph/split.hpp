#pragma once

#include <cstdint>
#include <vector>

namespace curegraph {

/// Shuffles 0..n-1 under `seed` and deals it into K contiguous folds whose
/// sizes differ by at most one. Throws ArgumentError unless 2 <= K <= n.
std::vector<std::vector<std::size_t>> kfold_split(std::size_t n, std::size_t k,
                                                  std::uint64_t seed);

}  // namespace curegraph
