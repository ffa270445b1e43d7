#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace qrfx {

// Deterministic fold assignment. Regenerating with the same arguments
// yields identical plans on every platform (see Rng).
struct FoldPlan {
  int k = 0;
  std::vector<int> assignments;  // per-row fold index in [0, k)
  std::uint64_t seed = 0;

  std::vector<std::size_t> test_indices(int fold) const;
  std::vector<std::size_t> train_indices(int fold) const;
};

// Shuffled k-fold assignment; with strata, shuffling and balancing happen
// within each stratum so per-fold stratum counts differ by at most one.
FoldPlan make_folds(std::size_t n, int k, std::uint64_t seed,
                    const std::vector<std::string>* strata = nullptr);

}  // namespace qrfx
