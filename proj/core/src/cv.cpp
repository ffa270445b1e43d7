#include "qrfx/cv.hpp"

#include <map>

#include "qrfx/error.hpp"
#include "qrfx/rng.hpp"

namespace qrfx {

std::vector<std::size_t> FoldPlan::test_indices(int fold) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < assignments.size(); ++i)
    if (assignments[i] == fold) out.push_back(i);
  return out;
}

std::vector<std::size_t> FoldPlan::train_indices(int fold) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < assignments.size(); ++i)
    if (assignments[i] != fold) out.push_back(i);
  return out;
}

FoldPlan make_folds(std::size_t n, int k, std::uint64_t seed,
                    const std::vector<std::string>* strata) {
  if (k < 1 || static_cast<std::size_t>(k) > n)
    throw ValidationError("make_folds: need 1 <= k <= n");
  if (strata && strata->size() != n)
    throw ValidationError("make_folds: strata size mismatch");

  FoldPlan plan;
  plan.k = k;
  plan.seed = seed;
  plan.assignments.assign(n, -1);

  // Group rows by stratum (single pseudo-stratum when unstratified),
  // shuffle within each, then deal round-robin. The starting fold rotates
  // with the running row count so overall fold sizes stay balanced too.
  std::map<std::string, std::vector<std::size_t>> groups;
  if (strata) {
    for (std::size_t i = 0; i < n; ++i) groups[(*strata)[i]].push_back(i);
  } else {
    auto& all = groups[""];
    for (std::size_t i = 0; i < n; ++i) all.push_back(i);
  }

  Rng rng(derive_seed(seed, "fold-plan", n, static_cast<std::uint64_t>(k)));
  std::size_t dealt = 0;
  for (auto& [label, rows] : groups) {
    rng.shuffle(rows);
    for (std::size_t pos = 0; pos < rows.size(); ++pos) {
      plan.assignments[rows[pos]] = static_cast<int>((dealt + pos) % k);
    }
    dealt += rows.size();
  }
  return plan;
}

}  // namespace qrfx
