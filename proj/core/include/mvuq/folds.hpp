#pragma once

#include <cstdint>
#include <vector>

namespace mvuq {

/// K-fold partition: seeded shuffle, then contiguous blocks whose sizes
/// differ by at most one (the first n % K folds get the extra row).
struct FoldPlan {
  std::vector<std::vector<std::size_t>> test;
  std::vector<std::vector<std::size_t>> train;

  std::size_t k() const { return test.size(); }
};

FoldPlan make_folds(std::size_t n, std::size_t k, std::uint64_t seed);

}  // namespace mvuq
