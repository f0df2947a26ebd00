#ifndef PERMIX_TESTS_GENERATORS_HPP
#define PERMIX_TESTS_GENERATORS_HPP

// Random instance generators shared by the unit and acceptance suites.

#include <boost/rational.hpp>

#include <permix/mallows.hpp>
#include <permix/oracle.hpp>
#include <permix/permutation.hpp>
#include <permix/rng.hpp>

#include <set>
#include <utility>
#include <vector>

namespace permix::testing {

using Rational = boost::rational<long long>;

/// Up to k distinct permutations (capped at n!, so small n stays feasible).
inline std::vector<Permutation> random_distinct_permutations(int n, int k,
                                                             Rng& rng) {
  long long total = 1;
  for (int i = 2; i <= n && total < k; ++i) total *= i;
  const int target = static_cast<int>(std::min<long long>(k, total));
  std::set<Permutation> set;
  while (static_cast<int>(set.size()) < target)
    set.insert(random_permutation(n, rng));
  return {set.begin(), set.end()};
}

/// Composition of `total` into `parts` positive integers, uniform-ish.
inline std::vector<long long> random_composition(long long total, int parts,
                                                 Rng& rng) {
  std::set<long long> cuts;
  while (static_cast<int>(cuts.size()) < parts - 1)
    cuts.insert(1 + static_cast<long long>(rng.uniform_int(
                        static_cast<std::uint64_t>(total - 1))));
  std::vector<long long> out;
  long long prev = 0;
  for (long long c : cuts) {
    out.push_back(c - prev);
    prev = c;
  }
  out.push_back(total - prev);
  return out;
}

/// Mixture with ≤ k distinct components and weights on the 1/64 grid.
inline DeltaMixture<Rational> random_grid_mixture(int n, int k, Rng& rng) {
  const auto perms = random_distinct_permutations(n, k, rng);
  const int kk = static_cast<int>(perms.size());
  const auto numer = random_composition(64, kk, rng);
  std::vector<DeltaMixture<Rational>::Component> comps;
  for (int i = 0; i < kk; ++i)
    comps.emplace_back(perms[static_cast<std::size_t>(i)],
                       Rational(numer[static_cast<std::size_t>(i)], 64));
  return DeltaMixture<Rational>(std::move(comps));
}

struct BlockInstance {
  Permutation central;
  BlockStructure blocks;
  int D = 0;    // max_i d_H(π(B_i), B'_i)
  int ell = 0;  // Σ |B_i|
};

/// Random permutation plus a random block structure, with the realized
/// Hausdorff bound D.
inline BlockInstance random_block_instance(int n, Rng& rng) {
  BlockInstance inst{random_permutation(n, rng), BlockStructure{}, 0, 0};
  const int ell = 1 + static_cast<int>(rng.uniform_int(
                          static_cast<std::uint64_t>(n)));
  const int m = 1 + static_cast<int>(rng.uniform_int(
                        static_cast<std::uint64_t>(std::min(ell, 3))));
  const auto sizes = random_composition(ell, m, rng);

  // disjoint index sets B_j: a random shuffle of [n] cut into prefixes
  const Permutation shuffle = random_permutation(n, rng);
  std::vector<BlockStructure::Block> blocks;
  int taken = 0;
  // contiguous image windows: distribute the slack n - ell into m+1 gaps
  std::vector<long long> gaps(static_cast<std::size_t>(m) + 1, 0);
  if (n - ell > 0) {
    const auto g = random_composition(n - ell + m + 1, m + 1, rng);
    for (std::size_t i = 0; i < g.size(); ++i) gaps[i] = g[i] - 1;
  }
  int cursor = static_cast<int>(gaps[0]);
  for (int j = 0; j < m; ++j) {
    std::vector<int> idx;
    for (int t = 0; t < sizes[static_cast<std::size_t>(j)]; ++t)
      idx.push_back(shuffle.element_at_rank(taken++));
    BlockStructure::Block b;
    b.indices = IndexSet(idx);
    b.image_lo = cursor;
    b.image_hi = cursor + static_cast<int>(sizes[static_cast<std::size_t>(j)]) - 1;
    cursor = b.image_hi + 1 + static_cast<int>(gaps[static_cast<std::size_t>(j) + 1]);
    blocks.push_back(std::move(b));
  }
  inst.blocks = BlockStructure(std::move(blocks));
  inst.ell = ell;
  for (const auto& b : inst.blocks.blocks()) {
    std::vector<int> window;
    for (int v = b.image_lo; v <= b.image_hi; ++v) window.push_back(v);
    inst.D = std::max(inst.D, hausdorff_distance(image_set(inst.central, b.indices),
                                                 IndexSet(window)));
  }
  return inst;
}

}  // namespace permix::testing

#endif  // PERMIX_TESTS_GENERATORS_HPP
