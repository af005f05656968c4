#pragma once
#include <cstdint>
#include <vector>

#include "lamcoal/genetree.hpp"
#include "lamcoal/rng.hpp"
#include "lamcoal/simulate.hpp"

namespace testutil {

using namespace lamcoal;

// Distinct simulated samples with min_complexity <= complexity <= max_complexity and at least one mutation.
inline std::vector<Genetree> random_trees(int count, int max_complexity, std::uint64_t seed,
                                          const LambdaModel& model = LambdaModel::kingman(), double r = 1.0,
                                          int min_complexity = 2) {
  std::vector<Genetree> out;
  std::vector<std::string> keys;
  Philox pick(seed, 99);
  for (std::uint64_t k = 0; out.size() < static_cast<std::size_t>(count); ++k) {
    const int n = 2 + static_cast<int>(pick.below(static_cast<std::uint64_t>(max_complexity - 2)));
    auto g = simulate_sample(n, model, r, seed * 1000003 + k).final_state();
    if (g.complexity() > max_complexity || g.complexity() < min_complexity || g.s() == 0) continue;
    auto key = canonical_key(g, false);
    bool dup = false;
    for (const auto& x : keys) dup |= x == key;
    if (dup) continue;
    keys.push_back(key);
    out.push_back(g);
  }
  return out;
}

// Random permutation of the type order, keeping the sample otherwise identical.
inline Genetree permute_types(const Genetree& g, Philox& rng) {
  std::vector<int> order(g.d());
  for (int i = 0; i < g.d(); ++i) order[i] = i;
  for (int i = g.d() - 1; i > 0; --i) std::swap(order[i], order[rng.below(i + 1)]);
  std::vector<int> tn, mu;
  for (int i : order) {
    tn.push_back(g.type_node(i));
    mu.push_back(g.mult(i));
  }
  return Genetree::from_parts(g.parents(), tn, mu);
}

}  // namespace testutil
